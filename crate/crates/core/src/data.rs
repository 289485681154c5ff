//! Multi-view datasets: seeded synthetic generation, CSV/JSON ingestion,
//! Gaussian noise injection and stratified splits.
//!
//! On disk a dataset is a JSON manifest
//! `{"views": ["v1.csv", ...], "labels": "y.csv", "num_classes": 3}` (the
//! class count is optional) whose paths are relative to the manifest. Each
//! view CSV has a header row followed by one row of decimals per sample; the
//! labels file holds one integer per line and no header.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, streams};

/// Ingestion and splitting failures, one variant per diagnostic.
#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("file not found: {}", path.display())]
    MissingFile { path: PathBuf },

    #[error("invalid manifest {}: {detail}", path.display())]
    Manifest { path: PathBuf, detail: String },

    #[error("{}: line {line} has {found} columns, expected {expected}", path.display())]
    RaggedRow {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("row count mismatch: {} has {first_rows} rows but {} has {other_rows}", first.display(), other.display())]
    RowCountMismatch {
        first: PathBuf,
        first_rows: usize,
        other: PathBuf,
        other_rows: usize,
    },

    #[error("{}: line {line}, column {column}: {value:?} is not a number", path.display())]
    NonNumeric {
        path: PathBuf,
        line: u64,
        column: usize,
        value: String,
    },

    #[error("{}: line {line}: label {label} is outside [0, {num_classes})", path.display())]
    LabelRange {
        path: PathBuf,
        line: u64,
        label: usize,
        num_classes: usize,
    },

    #[error("{}: no data rows", path.display())]
    Empty { path: PathBuf },

    #[error("{}: {detail}", path.display())]
    Csv { path: PathBuf, detail: String },

    #[error("cannot stratify: class {class} has {count} sample(s), at least 2 are needed")]
    Stratification { class: usize, count: usize },
}

/// Row-aligned feature matrices, one per view, with integer labels. Each
/// sample keeps a stable id through subsetting and noise injection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiViewDataset {
    views: Vec<Vec<Vec<f64>>>,
    labels: Vec<usize>,
    num_classes: usize,
    sample_ids: Vec<usize>,
}

impl MultiViewDataset {
    pub fn new(views: Vec<Vec<Vec<f64>>>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let ids = (0..labels.len()).collect();
        Self::with_ids(views, labels, num_classes, ids)
    }

    pub fn with_ids(
        views: Vec<Vec<Vec<f64>>>,
        labels: Vec<usize>,
        num_classes: usize,
        sample_ids: Vec<usize>,
    ) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::Argument("a dataset needs at least one view".into()));
        }
        if labels.is_empty() {
            return Err(Error::Argument("a dataset needs at least one sample".into()));
        }
        if num_classes < 2 {
            return Err(Error::Argument(format!("need at least 2 classes, got {num_classes}")));
        }
        let n = labels.len();
        if sample_ids.len() != n {
            return Err(Error::Dimension(format!("{} sample ids for {n} labels", sample_ids.len())));
        }
        for (m, view) in views.iter().enumerate() {
            if view.len() != n {
                return Err(Error::Dimension(format!("view {m} has {} rows, expected {n}", view.len())));
            }
            let d = view[0].len();
            if d == 0 || view.iter().any(|r| r.len() != d) {
                return Err(Error::Dimension(format!("view {m} has rows of unequal or zero width")));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::Dimension(format!("label {bad} is outside [0, {num_classes})")));
        }
        Ok(Self {
            views,
            labels,
            num_classes,
            sample_ids,
        })
    }

    pub fn num_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn view_dims(&self) -> Vec<usize> {
        self.views.iter().map(|v| v[0].len()).collect()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sample_ids(&self) -> &[usize] {
        &self.sample_ids
    }

    /// Rows of view `m`.
    pub fn view(&self, m: usize) -> &[Vec<f64>] {
        &self.views[m]
    }

    /// Every view's features for sample `i`, in view order.
    pub fn sample(&self, i: usize) -> Vec<&[f64]> {
        self.views.iter().map(|v| v[i].as_slice()).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// The samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            views: self
                .views
                .iter()
                .map(|v| indices.iter().map(|&i| v[i].clone()).collect())
                .collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
            sample_ids: indices.iter().map(|&i| self.sample_ids[i]).collect(),
        }
    }
}

/// Gaussian class clusters per view. `center_groups[m][c]` names the center
/// class `c` uses in view `m`; classes sharing a center are
/// indistinguishable in that view. Without it every class has its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub dims: Vec<usize>,
    pub separation: Vec<f64>,
    pub sigma: Vec<f64>,
    pub samples_per_class: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_groups: Option<Vec<Vec<usize>>>,
}

impl SyntheticSpec {
    pub fn num_views(&self) -> usize {
        self.dims.len()
    }

    /// Three classes over two views where view 1 only tells class 0 from
    /// the rest and view 2 only tells class 2 from the rest.
    pub fn complementary_toy(seed: u64) -> Self {
        Self {
            num_classes: 3,
            dims: vec![4, 4],
            separation: vec![1.0, 1.0],
            sigma: vec![0.25, 0.25],
            samples_per_class: 100,
            seed,
            center_groups: Some(vec![vec![0, 1, 1], vec![0, 0, 1]]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.dims.len();
        if self.num_classes < 2 || m == 0 || self.samples_per_class == 0 {
            return Err(Error::Argument(
                "synthetic data needs >= 2 classes, >= 1 view and >= 1 sample per class".into(),
            ));
        }
        if self.separation.len() != m || self.sigma.len() != m {
            return Err(Error::Dimension(format!(
                "{m} views but {} separations and {} sigmas",
                self.separation.len(),
                self.sigma.len()
            )));
        }
        if self.dims.contains(&0) {
            return Err(Error::Argument("view dimensions must be at least 1".into()));
        }
        if self.separation.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Argument("separations must be positive".into()));
        }
        if self.sigma.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::Argument("sigmas must be finite and >= 0".into()));
        }
        if let Some(groups) = &self.center_groups {
            if groups.len() != m || groups.iter().any(|g| g.len() != self.num_classes) {
                return Err(Error::Dimension(
                    "center_groups needs one entry per class for every view".into(),
                ));
            }
        }
        Ok(())
    }
}

fn standard_normals(rng: &mut impl rand::Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Balanced, class-ordered samples `center + N(0, σ_m² I)`, with seeded
/// random unit-norm centers scaled by the view's separation.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<MultiViewDataset> {
    spec.validate()?;
    let k = spec.num_classes;
    let mut center_rng = rng::stream(spec.seed, streams::SYNTH_CENTERS);
    let mut noise_rng = rng::stream(spec.seed, streams::SYNTH_NOISE);

    let centers: Vec<Vec<Vec<f64>>> = (0..spec.num_views())
        .map(|m| {
            (0..k)
                .map(|_| {
                    let mut c = standard_normals(&mut center_rng, spec.dims[m]);
                    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
                    for x in &mut c {
                        *x *= spec.separation[m] / norm;
                    }
                    c
                })
                .collect()
        })
        .collect();

    let n = k * spec.samples_per_class;
    let labels: Vec<usize> = (0..n).map(|i| i / spec.samples_per_class).collect();
    let mut views = vec![Vec::with_capacity(n); spec.num_views()];
    for &y in &labels {
        for (m, view) in views.iter_mut().enumerate() {
            let group = spec.center_groups.as_ref().map_or(y, |g| g[m][y]);
            let center = &centers[m][group % k];
            let z = standard_normals(&mut noise_rng, spec.dims[m]);
            view.push(center.iter().zip(&z).map(|(c, z)| c + spec.sigma[m] * z).collect());
        }
    }
    MultiViewDataset::new(views, labels, k)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma >= 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("noise sigma must be finite and >= 0, got {sigma}")))
    }
}

/// Copy of `ds` with `N(0, σ²)` added to every entry of one view. The
/// underlying standard normals depend only on `seed` and the view, so
/// sweeping σ with a fixed seed scales one noise pattern.
pub fn inject_noise(ds: &MultiViewDataset, view: usize, sigma: f64, seed: u64) -> Result<MultiViewDataset> {
    check_sigma(sigma)?;
    inject_noise_views(ds, &[view], sigma, seed)
}

/// [`inject_noise`] applied to every view.
pub fn inject_noise_all(ds: &MultiViewDataset, sigma: f64, seed: u64) -> Result<MultiViewDataset> {
    check_sigma(sigma)?;
    let all: Vec<usize> = (0..ds.num_views()).collect();
    inject_noise_views(ds, &all, sigma, seed)
}

/// The pair `(x + σz, x - σz)` sharing one draw of `z`, on one view or
/// (with `None`) on every view. Averaging a statistic over the pair cancels
/// its odd-order response to the noise.
pub fn inject_noise_mirrored(
    ds: &MultiViewDataset,
    view: Option<usize>,
    sigma: f64,
    seed: u64,
) -> Result<(MultiViewDataset, MultiViewDataset)> {
    check_sigma(sigma)?;
    let views: Vec<usize> = match view {
        Some(v) => vec![v],
        None => (0..ds.num_views()).collect(),
    };
    Ok((
        inject_noise_views(ds, &views, sigma, seed)?,
        inject_noise_views(ds, &views, -sigma, seed)?,
    ))
}

/// Adds `scale · z` with `z` standard normal; `scale` may be negative.
fn inject_noise_views(ds: &MultiViewDataset, views: &[usize], scale: f64, seed: u64) -> Result<MultiViewDataset> {
    check_sigma(scale.abs())?;
    if let Some(bad) = views.iter().find(|&&m| m >= ds.num_views()) {
        return Err(Error::Dimension(format!(
            "view {bad} is out of range for a dataset with {} views",
            ds.num_views()
        )));
    }
    let mut out = ds.clone();
    if scale == 0.0 {
        return Ok(out);
    }
    for &m in views {
        let mut rng = rng::stream(seed, streams::INJECT_NOISE + 1000 * m as u64);
        for row in &mut out.views[m] {
            for x in row.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *x += scale * z;
            }
        }
    }
    Ok(out)
}

/// Seeded stratified split. Each class sends `round(fraction · count)` of
/// its samples to the test part. Both parts keep the original sample order.
pub fn split(ds: &MultiViewDataset, test_fraction: f64, seed: u64) -> Result<(MultiViewDataset, MultiViewDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Argument(format!("test fraction must lie in (0, 1), got {test_fraction}")));
    }
    let mut rng = rng::stream(seed, streams::SPLIT);
    let mut is_test = vec![false; ds.num_samples()];
    for class in 0..ds.num_classes {
        let mut members: Vec<usize> = (0..ds.num_samples()).filter(|&i| ds.labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(DataError::Stratification {
                class,
                count: members.len(),
            }
            .into());
        }
        members.shuffle(&mut rng);
        let n_test = (test_fraction * members.len() as f64).round() as usize;
        for &i in &members[..n_test] {
            is_test[i] = true;
        }
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..ds.num_samples()).partition(|&i| is_test[i]);
    Ok((ds.subset(&train), ds.subset(&test)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub views: Vec<PathBuf>,
    pub labels: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_classes: Option<usize>,
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    if source.kind() == std::io::ErrorKind::NotFound {
        DataError::MissingFile {
            path: path.to_path_buf(),
        }
        .into()
    } else {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

fn open_csv(path: &Path, has_headers: bool) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| io_error(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(has_headers)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    DataError::Csv {
        path: path.to_path_buf(),
        detail: e.to_string(),
    }
    .into()
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn read_view_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = open_csv(path, true)?;
    let expected = reader.headers().map_err(|e| csv_error(path, e))?.len();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = line_of(&record);
        if record.len() != expected {
            return Err(DataError::RaggedRow {
                path: path.to_path_buf(),
                line,
                expected,
                found: record.len(),
            }
            .into());
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(column, cell)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| DataError::NonNumeric {
                        path: path.to_path_buf(),
                        line,
                        column: column + 1,
                        value: cell.to_string(),
                    })
            })
            .collect::<Result<Vec<f64>, DataError>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DataError::Empty { path: path.to_path_buf() }.into());
    }
    Ok(rows)
}

fn read_labels_csv(path: &Path) -> Result<Vec<(usize, u64)>> {
    let mut reader = open_csv(path, false)?;
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = line_of(&record);
        if record.len() != 1 {
            return Err(DataError::RaggedRow {
                path: path.to_path_buf(),
                line,
                expected: 1,
                found: record.len(),
            }
            .into());
        }
        let cell = &record[0];
        let y = cell.parse::<usize>().map_err(|_| DataError::NonNumeric {
            path: path.to_path_buf(),
            line,
            column: 1,
            value: cell.to_string(),
        })?;
        labels.push((y, line));
    }
    if labels.is_empty() {
        return Err(DataError::Empty { path: path.to_path_buf() }.into());
    }
    Ok(labels)
}

/// Load a dataset from a manifest. Without an explicit `num_classes` the
/// class count is the number of distinct labels, and every label must lie
/// below it.
pub fn load_manifest(path: &Path) -> Result<MultiViewDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| DataError::Manifest {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    if manifest.views.is_empty() {
        return Err(DataError::Manifest {
            path: path.to_path_buf(),
            detail: "\"views\" is empty".into(),
        }
        .into());
    }
    let base = path.parent().unwrap_or(Path::new(""));
    let view_paths: Vec<PathBuf> = manifest.views.iter().map(|p| base.join(p)).collect();
    let label_path = base.join(&manifest.labels);

    let views = view_paths
        .iter()
        .map(|p| read_view_csv(p))
        .collect::<Result<Vec<_>>>()?;
    let labels = read_labels_csv(&label_path)?;

    let (first, n) = (&view_paths[0], views[0].len());
    let others = view_paths[1..]
        .iter()
        .zip(&views[1..])
        .map(|(p, v)| (p, v.len()))
        .chain(std::iter::once((&label_path, labels.len())));
    for (other, rows) in others {
        if rows != n {
            return Err(DataError::RowCountMismatch {
                first: first.clone(),
                first_rows: n,
                other: other.clone(),
                other_rows: rows,
            }
            .into());
        }
    }

    let num_classes = manifest
        .num_classes
        .unwrap_or_else(|| labels.iter().map(|(y, _)| *y).collect::<BTreeSet<_>>().len());
    if let Some(&(label, line)) = labels.iter().find(|(y, _)| *y >= num_classes) {
        return Err(DataError::LabelRange {
            path: label_path,
            line,
            label,
            num_classes,
        }
        .into());
    }
    MultiViewDataset::new(views, labels.into_iter().map(|(y, _)| y).collect(), num_classes)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write `ds` as `view{m}.csv`, `labels.csv` and `manifest.json` under `dir`
/// and return the manifest path. Floats use the shortest exact decimal form,
/// so loading the result reproduces the dataset bit for bit (sample ids
/// restart at zero).
pub fn save_manifest(ds: &MultiViewDataset, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut view_names = Vec::new();
    for (m, view) in ds.views.iter().enumerate() {
        let name = format!("view{}.csv", m + 1);
        let header: Vec<String> = (0..view[0].len()).map(|j| format!("f{j}")).collect();
        let mut text = header.join(",");
        text.push('\n');
        for row in view {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        write_file(&dir.join(&name), &text)?;
        view_names.push(PathBuf::from(name));
    }
    let labels: String = ds.labels.iter().map(|y| format!("{y}\n")).collect();
    write_file(&dir.join("labels.csv"), &labels)?;
    let manifest = Manifest {
        views: view_names,
        labels: PathBuf::from("labels.csv"),
        num_classes: Some(ds.num_classes),
    };
    let path = dir.join("manifest.json");
    write_file(&path, &serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}
