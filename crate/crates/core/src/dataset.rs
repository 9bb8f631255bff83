//! Labeled feature-vector datasets, their on-disk format, and the derived
//! training sets used by the evaluation procedure (replacement, augmentation,
//! stratified splits).
//!
//! A dataset directory holds three files:
//!
//! * `manifest.json` with keys `version, n, d, k, feature_file, label_file,
//!   byte_order, checksum`
//! * `features.f32le`, `n * d` little-endian `f32` values, row-major
//! * `labels.u32le`, `n` little-endian `u32` values
//!
//! The checksum is 64-bit FNV-1a over the feature bytes followed by the label
//! bytes, written as 16 lowercase hex digits.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::ConditionalGenerator;
use crate::SeededRng;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FEATURE_FILE: &str = "features.f32le";
pub const LABEL_FILE: &str = "labels.u32le";
pub const FORMAT_VERSION: u32 = 1;
pub const BYTE_ORDER: &str = "little-endian";

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    name: String,
    features: Vec<f32>,
    labels: Vec<u32>,
    dim: usize,
    num_classes: usize,
}

impl LabeledDataset {
    /// Validates and wraps row-major `features` (`labels.len()` rows of `dim`).
    pub fn new(
        name: impl Into<String>,
        features: Vec<f32>,
        labels: Vec<u32>,
        dim: usize,
        num_classes: usize,
    ) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if dim == 0 || labels.is_empty() {
            return Err(Error::InvalidDataset("empty dataset".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::InvalidDataset(format!(
                "{} feature values do not form {} rows of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(pos) = labels.iter().position(|&l| l as usize >= num_classes) {
            return Err(Error::InvalidDataset(format!(
                "label {} at row {pos} is not below {num_classes}",
                labels[pos]
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite feature at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self {
            name: name.into(),
            features,
            labels,
            dim,
            num_classes,
        })
    }

    /// Builds a dataset from `f64` rows; values are rounded to `f32`.
    pub fn from_rows(
        name: impl Into<String>,
        rows: &[Vec<f64>],
        labels: Vec<u32>,
        num_classes: usize,
    ) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let mut features = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            features.extend(row.iter().map(|&v| v as f32));
        }
        Self::new(name, features, labels, dim, num_classes)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i] as usize
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|&v| f64::from(v)).collect()
    }

    /// Features as an `n x d` matrix of `f64`.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(
            self.len(),
            self.dim,
            self.features.iter().map(|&v| f64::from(v)),
        )
    }

    /// Subset of rows in the given order.
    pub fn select(&self, indices: &[usize], name: impl Into<String>) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self::new(name, features, labels, self.dim, self.num_classes)
    }

    /// Row indices grouped by class.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(i);
        }
        out
    }
}

/// Per-class example counts; sums to `ds.len()`.
pub fn class_histogram(ds: &LabeledDataset) -> Vec<usize> {
    let mut counts = vec![0; ds.num_classes()];
    for &l in ds.labels() {
        counts[l as usize] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub n: u64,
    pub d: u64,
    pub k: u64,
    pub feature_file: String,
    pub label_file: String,
    pub byte_order: String,
    pub checksum: String,
}

pub(crate) fn fnv1a64(init: u64, bytes: &[u8]) -> u64 {
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(init, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

pub(crate) const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

fn payload_checksum(feature_bytes: &[u8], label_bytes: &[u8]) -> String {
    let h = fnv1a64(fnv1a64(FNV_OFFSET, feature_bytes), label_bytes);
    format!("{h:016x}")
}

fn encode(ds: &LabeledDataset) -> (Vec<u8>, Vec<u8>) {
    let features = ds.features.iter().flat_map(|v| v.to_le_bytes()).collect();
    let labels = ds.labels.iter().flat_map(|v| v.to_le_bytes()).collect();
    (features, labels)
}

/// Writes `ds` into `dir` (created if missing).
pub fn save_dataset(ds: &LabeledDataset, dir: &Path) -> Result<()> {
    let n = u64::try_from(ds.len()).map_err(|_| Error::InvalidDataset("n overflows".into()))?;
    let bytes_needed = (ds.len() as u64)
        .checked_mul(ds.dim() as u64)
        .and_then(|v| v.checked_mul(4));
    if bytes_needed.is_none() {
        return Err(Error::InvalidDataset("feature payload size overflows".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (feature_bytes, label_bytes) = encode(ds);
    let manifest = DatasetManifest {
        version: FORMAT_VERSION,
        n,
        d: ds.dim() as u64,
        k: ds.num_classes() as u64,
        feature_file: FEATURE_FILE.into(),
        label_file: LABEL_FILE.into(),
        byte_order: BYTE_ORDER.into(),
        checksum: payload_checksum(&feature_bytes, &label_bytes),
    };
    let write = |name: &str, bytes: &[u8]| {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(path, e))
    };
    write(FEATURE_FILE, &feature_bytes)?;
    write(LABEL_FILE, &label_bytes)?;
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(MANIFEST_FILE, format!("{json}\n").as_bytes())
}

/// Reads a dataset directory written by [`save_dataset`].
pub fn load_dataset(dir: &Path) -> Result<LabeledDataset> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: DatasetManifest = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: manifest_path.clone(),
        source: e,
    })?;
    let corrupt = |reason: String| Error::Corrupt {
        path: dir.to_path_buf(),
        reason,
    };
    if manifest.version != FORMAT_VERSION {
        return Err(corrupt(format!("unsupported version {}", manifest.version)));
    }
    if manifest.byte_order != BYTE_ORDER {
        return Err(corrupt(format!("unsupported byte order {}", manifest.byte_order)));
    }
    let n = usize::try_from(manifest.n).map_err(|_| corrupt("n overflows".into()))?;
    let d = usize::try_from(manifest.d).map_err(|_| corrupt("d overflows".into()))?;
    let k = usize::try_from(manifest.k).map_err(|_| corrupt("k overflows".into()))?;
    let feature_path = dir.join(&manifest.feature_file);
    let label_path = dir.join(&manifest.label_file);
    let feature_bytes = fs::read(&feature_path).map_err(|e| Error::io(&feature_path, e))?;
    let label_bytes = fs::read(&label_path).map_err(|e| Error::io(&label_path, e))?;

    let expected_features = n
        .checked_mul(d)
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| corrupt("n*d overflows".into()))?;
    if feature_bytes.len() != expected_features {
        return Err(corrupt(format!(
            "feature file has {} bytes, manifest implies {expected_features}",
            feature_bytes.len()
        )));
    }
    if label_bytes.len() != n * 4 {
        return Err(corrupt(format!(
            "label file has {} bytes, manifest implies {}",
            label_bytes.len(),
            n * 4
        )));
    }
    let checksum = payload_checksum(&feature_bytes, &label_bytes);
    if checksum != manifest.checksum {
        return Err(corrupt(format!(
            "checksum mismatch: manifest {}, payload {checksum}",
            manifest.checksum
        )));
    }
    let features = feature_bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let labels = label_bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    LabeledDataset::new(name, features, labels, d, k)
}

fn check_compatible(gen: &dyn ConditionalGenerator, ds: &LabeledDataset) -> Result<()> {
    if gen.num_classes() < ds.num_classes() {
        return Err(Error::InvalidGenerator(format!(
            "generator has {} classes, dataset needs {}",
            gen.num_classes(),
            ds.num_classes()
        )));
    }
    if gen.dim() != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.dim(),
            actual: gen.dim(),
        });
    }
    Ok(())
}

/// Replaces every row of `template` with a generator sample of the same class.
///
/// Row `i` of the output has the label of template row `i`, so the class
/// histogram is preserved exactly.
pub fn build_replacement_set(
    gen: &dyn ConditionalGenerator,
    template: &LabeledDataset,
    rng: &mut SeededRng,
) -> Result<LabeledDataset> {
    check_compatible(gen, template)?;
    let mut features = Vec::with_capacity(template.features().len());
    for i in 0..template.len() {
        let x = gen.sample_for_slot(template.label(i), i, rng)?;
        features.extend(x.iter().map(|&v| v as f32));
    }
    LabeledDataset::new(
        format!("{}-replaced", template.name()),
        features,
        template.labels().to_vec(),
        template.dim(),
        template.num_classes(),
    )
}

/// Appends `floor(fraction * count_c)` generator samples for every class `c`
/// after the unchanged real rows.
pub fn build_augmented_set(
    real: &LabeledDataset,
    gen: &dyn ConditionalGenerator,
    fraction: f64,
    rng: &mut SeededRng,
) -> Result<LabeledDataset> {
    if !(fraction > 0.0) || !fraction.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "augmentation fraction must be positive, got {fraction}"
        )));
    }
    check_compatible(gen, real)?;
    let mut features = real.features().to_vec();
    let mut labels = real.labels().to_vec();
    for (class, &count) in class_histogram(real).iter().enumerate() {
        let extra = (fraction * count as f64).floor() as usize;
        for _ in 0..extra {
            let x = gen.sample(class, rng)?;
            features.extend(x.iter().map(|&v| v as f32));
            labels.push(class as u32);
        }
    }
    LabeledDataset::new(
        format!("{}-augmented", real.name()),
        features,
        labels,
        real.dim(),
        real.num_classes(),
    )
}

/// Splits each class independently; `round(test_fraction * count)` rows of
/// every class, clamped to `1..=count - 1`, go to the test side. Rows keep their original relative order
/// within each side.
pub fn stratified_split(
    ds: &LabeledDataset,
    test_fraction: f64,
    rng: &mut SeededRng,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (class, mut idx) in ds.class_indices().into_iter().enumerate() {
        if idx.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "class {class} has {} examples, stratified split needs at least 2",
                idx.len()
            )));
        }
        idx.shuffle(rng);
        let n_test = ((test_fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        test_idx.extend_from_slice(&idx[..n_test]);
        train_idx.extend_from_slice(&idx[n_test..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((
        ds.select(&train_idx, format!("{}-train", ds.name()))?,
        ds.select(&test_idx, format!("{}-test", ds.name()))?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    fn toy(labels: Vec<u32>, k: usize) -> LabeledDataset {
        let n = labels.len();
        let features = (0..n * 2).map(|v| v as f32 * 0.5).collect();
        LabeledDataset::new("toy", features, labels, 2, k).unwrap()
    }

    #[test]
    fn histogram_counts() {
        assert_eq!(class_histogram(&toy(vec![0, 0, 1, 2], 3)), vec![2, 1, 1]);
        assert_eq!(class_histogram(&toy(vec![0, 0], 2)), vec![2, 0]);
        let uniform: Vec<u32> = (0..1000).map(|i| i % 10).collect();
        assert_eq!(class_histogram(&toy(uniform, 10)), vec![100; 10]);
    }

    #[test]
    fn rejects_invalid_contents() {
        assert!(LabeledDataset::new("x", vec![0.0; 4], vec![0, 2], 2, 2).is_err());
        assert!(LabeledDataset::new("x", vec![0.0, f32::NAN], vec![0], 2, 2).is_err());
        assert!(LabeledDataset::new("x", vec![0.0; 3], vec![0, 1], 2, 2).is_err());
        assert!(LabeledDataset::new("x", vec![], vec![], 2, 2).is_err());
        assert!(LabeledDataset::new("x", vec![0.0; 2], vec![0], 2, 1).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = LabeledDataset::new(
            "rt",
            vec![1.5, -0.0, f32::MIN_POSITIVE, 3.25, 1e30, -7.0],
            vec![0, 1, 1],
            2,
            2,
        )
        .unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        let bits = |d: &LabeledDataset| d.features().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&ds));
        assert_eq!(back.labels(), ds.labels());
        assert_eq!((back.dim(), back.num_classes()), (2, 2));
    }

    #[test]
    fn load_rejects_length_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let ds = toy(vec![0, 1, 1], 2);
        save_dataset(&ds, dir.path()).unwrap();
        // 4 rows of features against a manifest saying n=3
        let extra: Vec<u8> = (0..8).flat_map(|v: i32| (v as f32).to_le_bytes()).collect();
        fs::write(dir.path().join(FEATURE_FILE), extra).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Corrupt { .. }), "{err}");
    }

    #[test]
    fn load_rejects_checksum_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&toy(vec![0, 1, 1], 2), dir.path()).unwrap();
        let path = dir.path().join(FEATURE_FILE);
        let mut bytes = fs::read(&path).unwrap();
        bytes[5] ^= 0x40;
        fs::write(&path, bytes).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(err.to_string().contains("checksum"), "{err}");
    }

    #[test]
    fn load_rejects_bad_label_and_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::Io { .. })));

        save_dataset(&toy(vec![0, 1, 1], 2), dir.path()).unwrap();
        let labels: Vec<u8> = [0u32, 1, 5].iter().flat_map(|v| v.to_le_bytes()).collect();
        let features = fs::read(dir.path().join(FEATURE_FILE)).unwrap();
        let manifest_path = dir.path().join(MANIFEST_FILE);
        let mut manifest: DatasetManifest =
            serde_json::from_str(&fs::read_to_string(&manifest_path).unwrap()).unwrap();
        manifest.checksum = payload_checksum(&features, &labels);
        fs::write(&manifest_path, serde_json::to_string(&manifest).unwrap()).unwrap();
        fs::write(dir.path().join(LABEL_FILE), labels).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn split_counts_and_partition() {
        let labels: Vec<u32> = (0..300).map(|i| i % 3).collect();
        let ds = toy(labels, 3);
        let (train, test) = stratified_split(&ds, 0.2, &mut seeded_rng(1)).unwrap();
        assert_eq!(class_histogram(&test), vec![20, 20, 20]);
        assert_eq!(class_histogram(&train), vec![80, 80, 80]);

        let mut all: Vec<(u32, u32, u32)> = train
            .labels()
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, train.row(i)[0].to_bits(), train.row(i)[1].to_bits()))
            .chain(
                test.labels()
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| (l, test.row(i)[0].to_bits(), test.row(i)[1].to_bits())),
            )
            .collect();
        let mut orig: Vec<_> = (0..ds.len())
            .map(|i| (ds.labels()[i], ds.row(i)[0].to_bits(), ds.row(i)[1].to_bits()))
            .collect();
        all.sort_unstable();
        orig.sort_unstable();
        assert_eq!(all, orig);

        let (_, test2) = stratified_split(&ds, 0.2, &mut seeded_rng(2)).unwrap();
        assert_ne!(test.features(), test2.features());
    }

    #[test]
    fn split_needs_two_per_class() {
        let ds = toy(vec![0, 0, 1], 2);
        assert!(stratified_split(&ds, 0.5, &mut seeded_rng(0)).is_err());
        assert!(stratified_split(&toy(vec![0, 0, 1, 1], 2), 1.0, &mut seeded_rng(0)).is_err());
    }
}
