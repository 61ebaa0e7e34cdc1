//! Class-per-directory dataset ingestion and deterministic stratified
//! splitting.
//!
//! The expected layout is `<root>/<species_name>/<image_file>` with tiff,
//! tif, png, jpg or jpeg files (case-insensitive). Class indices are
//! assigned by ascending lexicographic order of the directory names, and
//! manifest record paths are stored relative to the root with `/`
//! separators so that identical inputs serialize byte-identically on any
//! platform.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

const IMAGE_EXTENSIONS: &[&str] = &["tiff", "tif", "png", "jpg", "jpeg"];

/// A class label: consecutive index plus the canonical directory name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeciesLabel {
    pub index: usize,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Test => write!(f, "test"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    /// Path relative to the dataset root, `/`-separated.
    pub path: String,
    pub class_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

/// The authoritative record of every image, its label, and (once assigned)
/// its train/test membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_fraction: Option<f64>,
    pub class_names: Vec<String>,
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn labels(&self) -> Vec<SpeciesLabel> {
        self.class_names
            .iter()
            .enumerate()
            .map(|(index, name)| SpeciesLabel {
                index,
                name: name.clone(),
            })
            .collect()
    }

    pub fn name_of(&self, index: usize) -> Result<&str> {
        self.class_names
            .get(index)
            .map(String::as_str)
            .ok_or(Error::ClassIndexOutOfRange {
                index,
                classes: self.class_names.len(),
            })
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|n| n == name)
    }

    /// Per-class record counts, indexed by class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.class_names.len()];
        for r in &self.records {
            counts[r.class_index] += 1;
        }
        counts
    }

    /// Per-class (train, test) counts; zero until a split is assigned.
    pub fn split_counts(&self) -> Vec<(usize, usize)> {
        let mut counts = vec![(0usize, 0usize); self.class_names.len()];
        for r in &self.records {
            match r.split {
                Some(Split::Train) => counts[r.class_index].0 += 1,
                Some(Split::Test) => counts[r.class_index].1 += 1,
                None => {}
            }
        }
        counts
    }

    pub fn split_assigned(&self) -> bool {
        self.records.iter().all(|r| r.split.is_some()) && !self.records.is_empty()
    }

    /// Records belonging to `split`, in manifest order.
    pub fn records_in(&self, split: Split) -> Vec<&ManifestRecord> {
        self.records
            .iter()
            .filter(|r| r.split == Some(split))
            .collect()
    }

    /// Deterministic serialization: pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::json("serializing manifest", e))?;
        s.push('\n');
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)
            .map_err(|e| Error::io(format!("writing manifest {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading manifest {}", path.display()), e))?;
        serde_json::from_str(&raw).map_err(|e| Error::json("parsing manifest", e))
    }
}

/// A skipped file noted during scanning.
#[derive(Debug, Clone)]
pub struct ScanWarning {
    pub path: PathBuf,
    pub reason: String,
}

/// Result of scanning a dataset root: manifest without split assignments
/// plus any per-file warnings.
#[derive(Debug)]
pub struct ScanOutcome {
    pub manifest: DatasetManifest,
    pub warnings: Vec<ScanWarning>,
}

fn has_image_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

/// Walk `<root>/<class>/<file>`, verify every candidate image decodes, and
/// build a manifest with lexicographic class order. Undecodable files are
/// skipped with a warning; an image-less class directory is fatal.
pub fn scan_dataset(root: &Path) -> Result<ScanOutcome> {
    if !root.is_dir() {
        return Err(Error::MissingRoot(root.to_path_buf()));
    }

    let mut class_dirs: Vec<(String, PathBuf)> = fs::read_dir(root)
        .map_err(|e| Error::io(format!("reading {}", root.display()), e))?
        .filter_map(|entry| entry.ok())
        .filter(|entry| entry.path().is_dir())
        .filter_map(|entry| {
            let name = entry.file_name().to_str()?.to_string();
            if name.starts_with('.') {
                None
            } else {
                Some((name, entry.path()))
            }
        })
        .collect();
    class_dirs.sort_by(|a, b| a.0.cmp(&b.0));

    if class_dirs.len() < 2 {
        return Err(Error::TooFewClasses(class_dirs.len()));
    }

    let mut warnings = Vec::new();
    let mut records = Vec::new();
    let mut class_names = Vec::with_capacity(class_dirs.len());

    for (class_index, (name, dir)) in class_dirs.iter().enumerate() {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(format!("reading {}", dir.display()), e))?
            .filter_map(|entry| entry.ok())
            .map(|entry| entry.path())
            .filter(|p| p.is_file() && has_image_extension(p))
            .collect();
        files.sort();

        let mut kept = 0usize;
        for file in files {
            // A full decode up front so a truncated file surfaces here as a
            // warning rather than mid-training.
            match image::open(&file) {
                Ok(_) => {
                    let file_name = file
                        .file_name()
                        .and_then(|n| n.to_str())
                        .unwrap_or_default()
                        .to_string();
                    records.push(ManifestRecord {
                        path: format!("{name}/{file_name}"),
                        class_index,
                        split: None,
                    });
                    kept += 1;
                }
                Err(e) => warnings.push(ScanWarning {
                    path: file,
                    reason: e.to_string(),
                }),
            }
        }
        if kept == 0 {
            return Err(Error::EmptyClass(name.clone()));
        }
        class_names.push(name.clone());
    }

    Ok(ScanOutcome {
        manifest: DatasetManifest {
            version: MANIFEST_VERSION,
            seed: None,
            test_fraction: None,
            class_names,
            records,
        },
        warnings,
    })
}

/// Round-half-away-from-zero test count for a class of size `total`.
fn test_count(total: usize, fraction: f64) -> usize {
    (fraction * total as f64).round() as usize
}

/// Assign a per-class stratified train/test split.
///
/// For every class exactly `round(test_fraction * class_total)` records go
/// to the test split; membership is a pure function of the seed and the
/// sorted record list. Record order in the returned manifest is unchanged.
pub fn stratified_split(
    manifest: &DatasetManifest,
    test_fraction: f64,
    seed: u64,
) -> Result<DatasetManifest> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidTestFraction(test_fraction));
    }
    if manifest.records.iter().any(|r| r.split.is_some()) {
        return Err(Error::SplitAlreadyAssigned);
    }

    // class index -> record positions, ordered by record path
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (pos, record) in manifest.records.iter().enumerate() {
        if record.class_index >= manifest.class_names.len() {
            return Err(Error::ClassIndexOutOfRange {
                index: record.class_index,
                classes: manifest.class_names.len(),
            });
        }
        by_class.entry(record.class_index).or_default().push(pos);
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = manifest.clone();

    for (&class_index, positions) in &by_class {
        let total = positions.len();
        let n_test = test_count(total, test_fraction);
        if n_test == 0 || n_test >= total {
            return Err(Error::ClassTooSmall {
                class: manifest.class_names[class_index].clone(),
                total,
                fraction: test_fraction,
            });
        }
        let mut shuffled: Vec<usize> = {
            let mut sorted = positions.clone();
            sorted.sort_by(|&a, &b| manifest.records[a].path.cmp(&manifest.records[b].path));
            sorted
        };
        shuffled.shuffle(&mut rng);
        for (i, &pos) in shuffled.iter().enumerate() {
            out.records[pos].split = Some(if i < n_test { Split::Test } else { Split::Train });
        }
    }

    out.seed = Some(seed);
    out.test_fraction = Some(test_fraction);
    Ok(out)
}

/// One-hot probability vector: 1 at `index`, 0 elsewhere.
pub fn one_hot<F: num_traits::Float>(index: usize, classes: usize) -> Result<Vec<F>> {
    if index >= classes {
        return Err(Error::ClassIndexOutOfRange { index, classes });
    }
    let mut v = vec![F::zero(); classes];
    v[index] = F::one();
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_manifest(class_sizes: &[usize]) -> DatasetManifest {
        let class_names: Vec<String> = (0..class_sizes.len()).map(|i| format!("sp{i:02}")).collect();
        let mut records = Vec::new();
        for (class_index, &n) in class_sizes.iter().enumerate() {
            for j in 0..n {
                records.push(ManifestRecord {
                    path: format!("{}/img{j:03}.png", class_names[class_index]),
                    class_index,
                    split: None,
                });
            }
        }
        DatasetManifest {
            version: MANIFEST_VERSION,
            seed: None,
            test_fraction: None,
            class_names,
            records,
        }
    }

    #[test]
    fn reference_shape_split_counts() {
        // 15 classes x 75 images at fraction 0.2 -> 15 test / 60 train each.
        let manifest = toy_manifest(&[75; 15]);
        let split = stratified_split(&manifest, 0.2, 42).unwrap();
        for (train, test) in split.split_counts() {
            assert_eq!(test, 15);
            assert_eq!(train, 60);
        }
        let total_test: usize = split.split_counts().iter().map(|c| c.1).sum();
        let total_train: usize = split.split_counts().iter().map(|c| c.0).sum();
        assert_eq!(total_test, 225);
        assert_eq!(total_train, 900);
    }

    #[test]
    fn two_image_classes_split_one_one() {
        let manifest = toy_manifest(&[2, 2, 2]);
        let split = stratified_split(&manifest, 0.5, 7).unwrap();
        for (train, test) in split.split_counts() {
            assert_eq!((train, test), (1, 1));
        }
    }

    #[test]
    fn same_seed_is_byte_identical_different_seed_is_not() {
        let manifest = toy_manifest(&[10, 10]);
        let a = stratified_split(&manifest, 0.2, 1).unwrap();
        let b = stratified_split(&manifest, 0.2, 1).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());

        let c = stratified_split(&manifest, 0.2, 2).unwrap();
        assert_ne!(a.to_json().unwrap(), c.to_json().unwrap());
        // ...but per-class counts stay identical.
        assert_eq!(a.split_counts(), c.split_counts());
    }

    #[test]
    fn class_too_small_is_fatal() {
        let manifest = toy_manifest(&[3, 3]);
        // round(0.1 * 3) = 0 test items
        assert!(matches!(
            stratified_split(&manifest, 0.1, 0),
            Err(Error::ClassTooSmall { .. })
        ));
    }

    #[test]
    fn double_split_is_rejected() {
        let manifest = toy_manifest(&[4, 4]);
        let split = stratified_split(&manifest, 0.25, 0).unwrap();
        assert!(matches!(
            stratified_split(&split, 0.25, 0),
            Err(Error::SplitAlreadyAssigned)
        ));
    }

    #[test]
    fn invalid_fraction_is_rejected() {
        let manifest = toy_manifest(&[4, 4]);
        for f in [0.0, 1.0, -0.5, 1.5] {
            assert!(matches!(
                stratified_split(&manifest, f, 0),
                Err(Error::InvalidTestFraction(_))
            ));
        }
    }

    #[test]
    fn label_round_trip() {
        let manifest = toy_manifest(&[2, 2, 2, 2]);
        for label in manifest.labels() {
            assert_eq!(manifest.index_of(&label.name), Some(label.index));
            assert_eq!(manifest.name_of(label.index).unwrap(), label.name);
        }
    }

    #[test]
    fn one_hot_basics() {
        assert_eq!(one_hot::<f64>(0, 3).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(one_hot::<f64>(2, 3).unwrap(), vec![0.0, 0.0, 1.0]);
        assert!(one_hot::<f64>(3, 3).is_err());
        let v = one_hot::<f64>(5, 9).unwrap();
        assert_eq!(v.iter().sum::<f64>(), 1.0);
    }

    proptest::proptest! {
        /// Split exactness: per-class counts are exact, the union covers all
        /// records, and the same seed reproduces the same assignment.
        #[test]
        fn split_counts_are_exact(
            sizes in proptest::collection::vec(2usize..40, 2..6),
            seed in proptest::prelude::any::<u64>(),
            fraction_pct in 10u32..90,
        ) {
            let fraction = fraction_pct as f64 / 100.0;
            let manifest = toy_manifest(&sizes);
            let result = stratified_split(&manifest, fraction, seed);
            let expect_fail = sizes.iter().any(|&n| {
                let t = test_count(n, fraction);
                t == 0 || t >= n
            });
            if expect_fail {
                proptest::prop_assert!(result.is_err());
            } else {
                let split = result.unwrap();
                for (class, &n) in sizes.iter().enumerate() {
                    let (train, test) = split.split_counts()[class];
                    proptest::prop_assert_eq!(test, test_count(n, fraction));
                    proptest::prop_assert_eq!(train + test, n);
                }
                proptest::prop_assert!(split.records.iter().all(|r| r.split.is_some()));
                let again = stratified_split(&manifest, fraction, seed).unwrap();
                proptest::prop_assert_eq!(split, again);
            }
        }
    }
}
