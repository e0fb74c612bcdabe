//! Curve catalog ingestion, experiment splits, class weights, and the
//! APV1 binary trace cache.
//!
//! Catalog CSV format: `label,a1,a2,a3,a4,a6,conductor,rank`, plain
//! integers, optional header line. Splits are driven entirely by a
//! SplitMix64 shuffle of curve ordinals so they reproduce bit-exactly
//! across runs and implementations.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::curve::{ApVector, CurveModel};
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("validation error at line {line}: {detail}")]
    Validation { line: usize, detail: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cache format error: {0}")]
    Format(String),
}

/// A loaded curve catalog.
#[derive(Debug, Clone)]
pub struct CurveCatalog {
    pub curves: Vec<CurveModel>,
    pub source: String,
}

impl CurveCatalog {
    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn conductor_range(&self) -> Option<(u64, u64)> {
        let lo = self.curves.iter().map(|c| c.conductor).min()?;
        let hi = self.curves.iter().map(|c| c.conductor).max()?;
        Some((lo, hi))
    }

    /// Ranks present, ascending.
    pub fn classes(&self) -> Vec<u8> {
        let mut seen = [false; 64];
        for c in &self.curves {
            seen[c.rank as usize] = true;
        }
        (0..64u8).filter(|&r| seen[r as usize]).collect()
    }
}

/// How to cut a catalog into train/validation/test.
#[derive(Debug, Clone)]
pub enum SplitSpec {
    /// Train and validate inside one conductor range, test on another.
    /// A `val_fraction` share of the training range is carved out for
    /// validation by seeded shuffle.
    TopRange {
        train_range: (u64, u64),
        test_range: (u64, u64),
        val_fraction: f64,
        seed: u64,
    },
    /// Seeded shuffle of the whole catalog, then fractional split.
    Uniform {
        fractions: (f64, f64, f64),
        seed: u64,
    },
}

/// Curve ordinals per partition.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SplitManifest {
    pub train: Vec<u32>,
    pub validation: Vec<u32>,
    pub test: Vec<u32>,
}

/// Inverse-frequency class weights, scaled so the frequency-weighted
/// mean (the average weight over training samples) is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights {
    pub weights: BTreeMap<u8, f64>,
}

impl ClassWeights {
    pub fn uniform(classes: &[u8]) -> Self {
        Self {
            weights: classes.iter().map(|&c| (c, 1.0)).collect(),
        }
    }

    pub fn get(&self, class: u8) -> f64 {
        self.weights.get(&class).copied().unwrap_or(1.0)
    }

    /// Weight vector indexed by position in `classes`.
    pub fn as_vec(&self, classes: &[u8]) -> Vec<f64> {
        classes.iter().map(|&c| self.get(c)).collect()
    }
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Load a curve CSV. Rows must parse, have nonzero discriminant,
/// positive conductor, and a rank inside `classes` (when given).
pub fn load_catalog(path: &Path, classes: Option<&[u8]>) -> Result<CurveCatalog, DatasetError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut curves = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if idx == 0 && trimmed.starts_with("label") {
            continue; // optional header
        }
        curves.push(parse_row(trimmed, lineno, classes)?);
    }
    Ok(CurveCatalog {
        curves,
        source: path.display().to_string(),
    })
}

fn parse_row(row: &str, line: usize, classes: Option<&[u8]>) -> Result<CurveModel, DatasetError> {
    let fields: Vec<&str> = row.split(',').map(str::trim).collect();
    if fields.len() != 8 {
        return Err(DatasetError::Parse {
            line,
            detail: format!("expected 8 fields, got {}", fields.len()),
        });
    }
    let int = |i: usize, name: &str| -> Result<i64, DatasetError> {
        fields[i].parse().map_err(|_| DatasetError::Parse {
            line,
            detail: format!("bad {name}: {:?}", fields[i]),
        })
    };
    let coeffs = [
        int(1, "a1")?,
        int(2, "a2")?,
        int(3, "a3")?,
        int(4, "a4")?,
        int(5, "a6")?,
    ];
    let conductor = int(6, "conductor")?;
    let rank = int(7, "rank")?;
    if conductor <= 0 {
        return Err(DatasetError::Validation {
            line,
            detail: format!("conductor must be positive, got {conductor}"),
        });
    }
    if !(0..64).contains(&rank) {
        return Err(DatasetError::Validation {
            line,
            detail: format!("rank out of range: {rank}"),
        });
    }
    let curve = CurveModel::new(coeffs, conductor as u64, rank as u8)
        .with_label(fields[0].to_string());
    if curve.discriminant() == 0 {
        return Err(DatasetError::Validation {
            line,
            detail: "singular model (discriminant 0)".into(),
        });
    }
    if let Some(classes) = classes {
        if !classes.contains(&(rank as u8)) {
            return Err(DatasetError::Validation {
                line,
                detail: format!("rank {rank} outside class set {classes:?}"),
            });
        }
    }
    Ok(curve)
}

/// Write a catalog in the same CSV format.
pub fn write_catalog(path: &Path, catalog: &CurveCatalog) -> Result<(), DatasetError> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    writeln!(out, "label,a1,a2,a3,a4,a6,conductor,rank").map_err(|e| io_err(path, e))?;
    for c in &catalog.curves {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            c.label.as_deref().unwrap_or("-"),
            c.a1,
            c.a2,
            c.a3,
            c.a4,
            c.a6,
            c.conductor,
            c.rank
        )
        .map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

/// Split a catalog into (train, validation, test) ordinals.
pub fn split(catalog: &CurveCatalog, spec: &SplitSpec) -> Result<SplitManifest, DatasetError> {
    let manifest = match spec {
        SplitSpec::Uniform { fractions, seed } => {
            let (ft, fv, fs) = *fractions;
            if (ft + fv + fs - 1.0).abs() > 1e-9 || ft <= 0.0 || fv < 0.0 || fs < 0.0 {
                return Err(DatasetError::Config(format!(
                    "fractions must be positive and sum to 1, got {fractions:?}"
                )));
            }
            let mut ids: Vec<u32> = (0..catalog.len() as u32).collect();
            SplitMix64::new(*seed).shuffle(&mut ids);
            let n = ids.len();
            let n_train = (n as f64 * ft).round() as usize;
            let n_val = (n as f64 * fv).round() as usize;
            let n_train = n_train.min(n);
            let n_val = n_val.min(n - n_train);
            SplitManifest {
                train: ids[..n_train].to_vec(),
                validation: ids[n_train..n_train + n_val].to_vec(),
                test: ids[n_train + n_val..].to_vec(),
            }
        }
        SplitSpec::TopRange {
            train_range,
            test_range,
            val_fraction,
            seed,
        } => {
            if ranges_overlap(*train_range, *test_range) {
                return Err(DatasetError::Config(format!(
                    "train range {train_range:?} overlaps test range {test_range:?}"
                )));
            }
            if !(0.0..1.0).contains(val_fraction) {
                return Err(DatasetError::Config(format!(
                    "val fraction must be in [0,1), got {val_fraction}"
                )));
            }
            let mut pool: Vec<u32> = Vec::new();
            let mut test: Vec<u32> = Vec::new();
            for (i, c) in catalog.curves.iter().enumerate() {
                if in_range(c.conductor, *train_range) {
                    pool.push(i as u32);
                } else if in_range(c.conductor, *test_range) {
                    test.push(i as u32);
                }
            }
            SplitMix64::new(*seed).shuffle(&mut pool);
            let n_val = (pool.len() as f64 * val_fraction).round() as usize;
            SplitManifest {
                validation: pool[..n_val].to_vec(),
                train: pool[n_val..].to_vec(),
                test,
            }
        }
    };
    if manifest.train.is_empty() || manifest.test.is_empty() {
        return Err(DatasetError::Config(
            "split produced an empty train or test partition".into(),
        ));
    }
    Ok(manifest)
}

fn in_range(x: u64, (lo, hi): (u64, u64)) -> bool {
    x >= lo && x <= hi
}

fn ranges_overlap(a: (u64, u64), b: (u64, u64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

/// Inverse-frequency weights over `classes` from the ranks of the given
/// curves; the average weight over the given ordinals is 1.
pub fn class_weights(
    catalog: &CurveCatalog,
    ordinals: &[u32],
    classes: &[u8],
) -> Result<ClassWeights, DatasetError> {
    let mut counts: BTreeMap<u8, usize> = classes.iter().map(|&c| (c, 0)).collect();
    for &i in ordinals {
        let rank = catalog.curves[i as usize].rank;
        match counts.get_mut(&rank) {
            Some(n) => *n += 1,
            None => {
                return Err(DatasetError::Config(format!(
                    "curve ordinal {i} has rank {rank} outside class set {classes:?}"
                )))
            }
        }
    }
    if let Some((&c, _)) = counts.iter().find(|(_, &n)| n == 0) {
        return Err(DatasetError::Config(format!(
            "class {c} absent from training partition; shrink the class set"
        )));
    }
    // w(c) = 1 / (freq(c) * n_classes): inverse frequency, scaled so the
    // average weight over training samples is 1
    let total: usize = counts.values().sum();
    let n_classes = counts.len() as f64;
    Ok(ClassWeights {
        weights: counts
            .iter()
            .map(|(&c, &n)| (c, total as f64 / (n as f64 * n_classes)))
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// APV1 binary cache
// ---------------------------------------------------------------------------

const APV_MAGIC: &[u8; 4] = b"APV1";
const APV_VERSION: u16 = 1;

/// Write aligned a_p vectors: magic, version u16, prime_limit u32,
/// n_primes u32, n_curves u64, then contiguous little-endian i16 per
/// curve in catalog order.
pub fn write_ap_cache(path: &Path, vectors: &[ApVector]) -> Result<(), DatasetError> {
    if vectors.is_empty() {
        return Err(DatasetError::Config("no vectors to write".into()));
    }
    let prime_limit = vectors[0].prime_limit;
    let n_primes = vectors[0].values.len();
    for v in vectors {
        if v.prime_limit != prime_limit || v.values.len() != n_primes {
            return Err(DatasetError::Config(
                "ap vectors disagree on prime limit or length".into(),
            ));
        }
    }
    let mut out = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    let werr = |e| io_err(path, e);
    out.write_all(APV_MAGIC).map_err(werr)?;
    out.write_all(&APV_VERSION.to_le_bytes()).map_err(werr)?;
    out.write_all(&(prime_limit as u32).to_le_bytes()).map_err(werr)?;
    out.write_all(&(n_primes as u32).to_le_bytes()).map_err(werr)?;
    out.write_all(&(vectors.len() as u64).to_le_bytes()).map_err(werr)?;
    for v in vectors {
        let mut buf = Vec::with_capacity(n_primes * 2);
        for &x in &v.values {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        out.write_all(&buf).map_err(werr)?;
    }
    Ok(())
}

/// Read an APV1 cache back.
pub fn read_ap_cache(path: &Path) -> Result<Vec<ApVector>, DatasetError> {
    let mut file = BufReader::new(File::open(path).map_err(|e| io_err(path, e))?);
    let rerr = |e| io_err(path, e);
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic).map_err(rerr)?;
    if &magic != APV_MAGIC {
        return Err(DatasetError::Format(format!(
            "bad magic {:?}, expected {:?}",
            magic, APV_MAGIC
        )));
    }
    let mut u16buf = [0u8; 2];
    file.read_exact(&mut u16buf).map_err(rerr)?;
    let version = u16::from_le_bytes(u16buf);
    if version != APV_VERSION {
        return Err(DatasetError::Format(format!("unsupported version {version}")));
    }
    let mut u32buf = [0u8; 4];
    file.read_exact(&mut u32buf).map_err(rerr)?;
    let prime_limit = u32::from_le_bytes(u32buf) as u64;
    file.read_exact(&mut u32buf).map_err(rerr)?;
    let n_primes = u32::from_le_bytes(u32buf) as usize;
    let mut u64buf = [0u8; 8];
    file.read_exact(&mut u64buf).map_err(rerr)?;
    let n_curves = u64::from_le_bytes(u64buf) as usize;
    let mut vectors = Vec::with_capacity(n_curves);
    let mut buf = vec![0u8; n_primes * 2];
    for i in 0..n_curves {
        file.read_exact(&mut buf).map_err(|_| {
            DatasetError::Format(format!("truncated at curve {i} of {n_curves}"))
        })?;
        let values = buf
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]))
            .collect();
        vectors.push(ApVector {
            prime_limit,
            values,
        });
    }
    Ok(vectors)
}
