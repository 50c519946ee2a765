//! Dataset ingestion and the synthetic teacher-student generator.

use std::path::Path;

use bsum::{build_network, network_output, Dataset64, InitScheme, Matrix64, Network64, NetworkSpec, RegularizerSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{ColumnRef, TeacherCfg};
use crate::error::{HarnessError, IngestError};

/// Loads a headed CSV file. Target columns become the rows of `Y`, every
/// other column a row of `X`; samples stay in file order. With
/// `standardize`, each feature row is shifted to mean 0 and scaled by its
/// population standard deviation (constant rows become 0).
pub fn load_csv_dataset(path: &Path, targets: &[ColumnRef], standardize: bool) -> Result<Dataset64, HarnessError> {
    let err = |row: Option<u64>, col: Option<usize>, message: String| IngestError {
        path: path.to_path_buf(),
        row,
        col,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| err(None, None, e.to_string()))?;
    let headers = reader.headers().map_err(|e| err(Some(1), None, e.to_string()))?.clone();
    let width = headers.len();

    let mut target_idx = Vec::with_capacity(targets.len());
    for t in targets {
        let idx = match t {
            ColumnRef::Index(i) if *i < width => *i,
            ColumnRef::Index(i) => {
                return Err(err(Some(1), None, format!("target column {i} outside 0..{width}")).into())
            }
            ColumnRef::Name(n) => headers
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| err(Some(1), None, format!("no column named {n:?}")))?,
        };
        if target_idx.contains(&idx) {
            return Err(err(Some(1), Some(idx + 1), "target column listed twice".into()).into());
        }
        target_idx.push(idx);
    }
    let feature_idx: Vec<usize> = (0..width).filter(|i| !target_idx.contains(i)).collect();
    if feature_idx.is_empty() {
        return Err(err(Some(1), None, "no feature columns left".into()).into());
    }

    let mut features: Vec<Vec<f64>> = vec![Vec::new(); feature_idx.len()];
    let mut labels: Vec<Vec<f64>> = vec![Vec::new(); target_idx.len()];
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line());
            err(line, None, e.to_string())
        })?;
        let line = record.position().map(|p| p.line());
        let cell = |i: usize| -> Result<f64, IngestError> {
            let raw = &record[i];
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(line, Some(i + 1), format!("non-numeric cell {raw:?}")))
        };
        for (row, &i) in features.iter_mut().zip(&feature_idx) {
            row.push(cell(i)?);
        }
        for (row, &i) in labels.iter_mut().zip(&target_idx) {
            row.push(cell(i)?);
        }
    }
    let n = features[0].len();
    if n == 0 {
        return Err(err(None, None, "no data rows".into()).into());
    }
    if standardize {
        for row in &mut features {
            zscore(row);
        }
    }
    let x = Matrix64::from_fn(features.len(), n, |r, c| features[r][c]);
    let y = Matrix64::from_fn(labels.len(), n, |r, c| labels[r][c]);
    Ok(Dataset64::new(x, y)?)
}

fn zscore(row: &mut [f64]) {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    for v in row.iter_mut() {
        *v = if std > 0.0 { (*v - mean) / std } else { 0.0 };
    }
}

/// Offset between a data seed and the seed of its teacher's weights.
pub const TEACHER_SEED_OFFSET: u64 = 100;

/// The teacher network used by [`synth_regression`] for `seed`.
pub fn teacher_network(seed: u64, teacher: &TeacherCfg) -> Result<Network64, HarnessError> {
    let spec = NetworkSpec::uniform(&teacher.dims, teacher.activation.into(), RegularizerSpec::NONE);
    Ok(build_network(
        spec,
        InitScheme::Gaussian { std: teacher.init_std },
        seed.wrapping_add(TEACHER_SEED_OFFSET),
    )?)
}

/// `N` standard-normal inputs of size `d_0 = teacher.dims[0]`, targets from
/// the seeded teacher plus gaussian noise of standard deviation
/// `teacher.noise_std`.
pub fn synth_regression(seed: u64, n: usize, teacher: &TeacherCfg) -> Result<Dataset64, HarnessError> {
    if n == 0 {
        return Err(HarnessError::Config("synthetic dataset needs n >= 1".into()));
    }
    if !(teacher.noise_std >= 0.0) {
        return Err(HarnessError::Config("noise_std must be >= 0".into()));
    }
    let net = teacher_network(seed, teacher)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let d0 = teacher.dims[0];
    let x = Matrix64::from_fn(d0, n, |_, _| std_normal.sample(&mut rng));
    let clean = network_output(&net, &x)?;
    let y = if teacher.noise_std > 0.0 {
        let noise = Normal::new(0.0, teacher.noise_std).map_err(|e| HarnessError::Config(e.to_string()))?;
        Matrix64::from_fn(clean.rows(), clean.cols(), |r, c| {
            clean[(r, c)] + noise.sample(&mut rng)
        })
    } else {
        clean
    };
    Ok(Dataset64::new(x, y)?)
}
