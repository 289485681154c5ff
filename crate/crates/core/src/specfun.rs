//! Log-gamma, digamma and trigamma on the positive real axis.
//!
//! All three functions shift small arguments upward with the standard
//! recurrences until `x` is large enough for the asymptotic (Stirling-type)
//! series, then accumulate the recurrence terms back down. Accumulating from
//! the top means `f(x)` is computed as `f(x + 1)` plus one final correction,
//! so the recurrences hold to within a single rounding.
//!
//! Reflection formulas for the negative axis are not provided.

use crate::error::{Error, Result};

/// Arguments at or above this use the Stirling series for `ln Γ` directly.
const LN_GAMMA_ASYMPTOTIC: f64 = 15.0;
/// Arguments at or above this use the asymptotic digamma/trigamma series.
const POLYGAMMA_ASYMPTOTIC: f64 = 10.0;

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// A strictly positive, finite real number.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PositiveReal(f64);

impl PositiveReal {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::Domain(format!(
                "expected a positive finite argument, got {value}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn ln_gamma(self) -> f64 {
        ln_gamma_pos(self.0)
    }

    pub fn digamma(self) -> f64 {
        digamma_pos(self.0)
    }

    pub fn trigamma(self) -> f64 {
        trigamma_pos(self.0)
    }
}

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    PositiveReal::new(x).map(PositiveReal::ln_gamma)
}

/// `ψ(x) = d/dx ln Γ(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    PositiveReal::new(x).map(PositiveReal::digamma)
}

/// `ψ′(x)` for `x > 0`.
pub fn trigamma(x: f64) -> Result<f64> {
    PositiveReal::new(x).map(PositiveReal::trigamma)
}

/// Number of unit shifts needed to bring `x` to at least `threshold`.
fn shifts(x: f64, threshold: f64) -> usize {
    if x >= threshold {
        0
    } else {
        (threshold - x).ceil() as usize
    }
}

pub(crate) fn ln_gamma_pos(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let n = shifts(x, LN_GAMMA_ASYMPTOTIC);
    if n == 0 {
        return stirling(x);
    }
    // ln Γ(x) = ln Γ(x + n) - ln(x (x+1) ... (x+n-1)); the product stays well
    // inside f64 range for n <= 15.
    let mut product = 1.0;
    for i in 0..n {
        product *= x + i as f64;
    }
    stirling(x + n as f64) - product.ln()
}

fn stirling(z: f64) -> f64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2
                                * (-1.0 / 1680.0
                                    + inv2
                                        * (1.0 / 1188.0
                                            + inv2
                                                * (-691.0 / 360_360.0
                                                    + inv2
                                                        * (1.0 / 156.0
                                                            + inv2 * (-3617.0 / 122_400.0))))))));
    (z - 0.5) * z.ln() - z + HALF_LN_TWO_PI + series
}

pub(crate) fn digamma_pos(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let n = shifts(x, POLYGAMMA_ASYMPTOTIC);
    let z = x + n as f64;
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let tail = inv2
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 120.0
                    + inv2
                        * (1.0 / 252.0
                            + inv2
                                * (-1.0 / 240.0
                                    + inv2
                                        * (1.0 / 132.0
                                            + inv2 * (-691.0 / 32_760.0 + inv2 * (1.0 / 12.0)))))));
    let mut acc = z.ln() - 0.5 * inv - tail;
    for i in (0..n).rev() {
        acc -= 1.0 / (x + i as f64);
    }
    acc
}

pub(crate) fn trigamma_pos(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let n = shifts(x, POLYGAMMA_ASYMPTOTIC);
    let z = x + n as f64;
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let tail = inv
        * inv2
        * (1.0 / 6.0
            + inv2
                * (-1.0 / 30.0
                    + inv2
                        * (1.0 / 42.0
                            + inv2
                                * (-1.0 / 30.0
                                    + inv2
                                        * (5.0 / 66.0
                                            + inv2 * (-691.0 / 2730.0 + inv2 * (7.0 / 6.0)))))));
    let mut acc = inv + 0.5 * inv2 + tail;
    for i in (0..n).rev() {
        let t = x + i as f64;
        acc += 1.0 / (t * t);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    const PI2_OVER_6: f64 = 1.644_934_066_848_226_4;

    #[test]
    fn log_gamma_known_values() {
        assert_abs_diff_eq!(log_gamma(1.0).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(log_gamma(2.0).unwrap(), 0.0, epsilon = 1e-14);
        let sqrt_pi_ln = 0.5 * std::f64::consts::PI.ln();
        assert_abs_diff_eq!(log_gamma(0.5).unwrap(), sqrt_pi_ln, epsilon = 1e-13);
        assert_abs_diff_eq!(log_gamma(10.0).unwrap(), 12.801_827_480_081_469, epsilon = 1e-12);
    }

    #[test]
    fn log_gamma_matches_factorials() {
        let mut ln_fact = 0.0_f64;
        for n in 1..=20u32 {
            if n > 1 {
                ln_fact += f64::from(n - 1).ln();
            }
            assert_abs_diff_eq!(log_gamma(f64::from(n)).unwrap(), ln_fact, epsilon = 1e-12);
        }
    }

    #[test]
    fn log_gamma_large_and_tiny_arguments() {
        // ln Γ(x) ~ -ln x - γ x for tiny x.
        let x: f64 = 1e-3;
        let expected = -x.ln() - EULER_GAMMA * x + PI2_OVER_6 / 2.0 * x * x;
        assert_abs_diff_eq!(log_gamma(x).unwrap(), expected, epsilon = 1e-9);
        // Stirling at 1e6 against the recurrence from 1e6 - 1.
        let big = 1e6;
        let lhs = log_gamma(big).unwrap();
        let rhs = log_gamma(big - 1.0).unwrap() + (big - 1.0).ln();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs());
    }

    // Reference values from 30-digit arithmetic.
    const REFERENCE: [(f64, f64, f64, f64); 6] = [
        (0.001, 6.907_178_885_383_853_7, -1000.575_571_931_810_3, 1_000_001.642_533_195_9),
        (0.37, 0.876_946_819_484_879_3, -2.795_301_410_890_564, 8.360_473_827_799_098),
        (1.461_632_144_968_362_3, -0.121_486_290_535_849_61, 0.0, 0.967_672_245_447_621_2),
        (7.25, 7.052_185_450_738_539, 1.910_453_526_883_736, 0.147_879_233_158_932_17),
        (123.456, 469.605_547_129_929_5, 4.811_829_323_828_985, 0.008_132_945_834_278_198),
        (1e6, 12_815_504.569_147_612, 13.815_510_057_964_19, 1.000_000_500_000_166_7e-6),
    ];

    #[test]
    fn reference_values_across_the_range() {
        for (x, lg, dg, tg) in REFERENCE {
            let got = log_gamma(x).unwrap();
            assert!((got - lg).abs() <= 1e-12 * lg.abs().max(1.0), "lnΓ({x}) = {got}");
            let got = digamma(x).unwrap();
            assert!((got - dg).abs() <= 1e-10, "ψ({x}) = {got}");
            let got = trigamma(x).unwrap();
            assert!((got - tg).abs() <= 1e-12 * tg.abs().max(1.0), "ψ′({x}) = {got}");
        }
    }

    #[test]
    fn domain_errors() {
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(log_gamma(bad), Err(Error::Domain(_))));
            assert!(matches!(digamma(bad), Err(Error::Domain(_))));
            assert!(matches!(trigamma(bad), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn digamma_known_values() {
        assert_abs_diff_eq!(digamma(1.0).unwrap(), -EULER_GAMMA, epsilon = 1e-14);
        assert_abs_diff_eq!(digamma(2.0).unwrap(), 1.0 - EULER_GAMMA, epsilon = 1e-14);
        // Central difference of ln Γ at h = 1e-5, evaluated in 30-digit arithmetic.
        assert_abs_diff_eq!(digamma(5.5).unwrap(), 1.611_093_148_581_091, epsilon = 1e-10);
    }

    #[test]
    fn trigamma_known_values() {
        assert_abs_diff_eq!(trigamma(1.0).unwrap(), PI2_OVER_6, epsilon = 1e-13);
        assert_abs_diff_eq!(trigamma(2.0).unwrap(), PI2_OVER_6 - 1.0, epsilon = 1e-13);
        // Central difference of ψ at h = 1e-5, evaluated in 30-digit arithmetic.
        assert_abs_diff_eq!(trigamma(3.7).unwrap(), 0.310_037_857_671_009_6, epsilon = 1e-10);
    }

    #[test]
    fn recurrences_hold_on_random_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x: f64 = rng.random_range(0.01..100.0);
            let d = digamma_pos(x + 1.0) - digamma_pos(x) - 1.0 / x;
            assert!(d.abs() <= 1e-12, "digamma recurrence at {x}: {d}");
            let t = trigamma_pos(x + 1.0) - trigamma_pos(x) + 1.0 / (x * x);
            assert!(t.abs() <= 1e-12, "trigamma recurrence at {x}: {t}");
        }
    }

    #[test]
    fn digamma_is_derivative_of_log_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..500 {
            let x: f64 = rng.random_range(0.05..200.0);
            let h = 1e-6 * x.max(1.0);
            let fd = (ln_gamma_pos(x + h) - ln_gamma_pos(x - h)) / (2.0 * h);
            let psi = digamma_pos(x);
            let rel = (fd - psi).abs() / psi.abs().max(1e-3);
            assert!(rel <= 1e-6, "x={x} fd={fd} psi={psi}");
        }
    }

    #[test]
    fn trigamma_is_derivative_of_digamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..500 {
            let x: f64 = rng.random_range(0.05..200.0);
            let h = 1e-5 * x.max(1.0);
            let fd = (digamma_pos(x + h) - digamma_pos(x - h)) / (2.0 * h);
            let tri = trigamma_pos(x);
            assert!((fd - tri).abs() / tri <= 1e-6, "x={x}");
        }
    }

    #[test]
    fn continuity_across_series_thresholds() {
        for t in [POLYGAMMA_ASYMPTOTIC, LN_GAMMA_ASYMPTOTIC] {
            let below = t - 1e-12;
            assert_abs_diff_eq!(ln_gamma_pos(below), ln_gamma_pos(t), epsilon = 1e-11);
            assert_abs_diff_eq!(digamma_pos(below), digamma_pos(t), epsilon = 1e-11);
            assert_abs_diff_eq!(trigamma_pos(below), trigamma_pos(t), epsilon = 1e-11);
        }
    }
}
