//! File formats: datasets as CSV, matrix sequences and estimates as JSON,
//! run configuration as TOML. All writes go through a temporary file that is
//! renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::datagen::GeneratorConfig;
use crate::error::{Error, Result};
use crate::evaluation::MccvPlan;
use crate::linalg::SymmetricMatrix;
use crate::model::{GroundTruth, Hyperparameters, NetworkEstimate, PenaltyKind, TimeSeriesDataset};
use crate::solver::ConvergenceReport;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl ToString) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| format_err(path, "not a file path"))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
        fs::rename(&tmp, path).map_err(io_err(path))
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

// ---------------------------------------------------------------- datasets

pub fn dataset_to_csv(data: &TimeSeriesDataset) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["time".to_string()];
    header.extend(data.variable_names().iter().cloned());
    // Writing into a Vec cannot fail.
    w.write_record(&header).expect("in-memory csv write");
    let mut row = Vec::with_capacity(data.dim() + 1);
    for (label, block) in data.time_labels().iter().zip(data.blocks()) {
        for r in 0..block.nrows() {
            row.clear();
            row.push(label.clone());
            row.extend(block.row(r).iter().map(|v| v.to_string()));
            w.write_record(&row).expect("in-memory csv write");
        }
    }
    w.into_inner().expect("in-memory csv flush")
}

/// Parses a dataset. Rows sharing a time label must be contiguous; blocks
/// keep the order in which their labels first appear.
pub fn dataset_from_csv(text: &[u8], path: &Path) -> Result<TimeSeriesDataset> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text);
    let header = r.headers().map_err(|e| format_err(path, e))?.clone();
    if header.len() < 2 || &header[0] != "time" {
        return Err(format_err(path, "header must be `time,<variable>,...`"));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let d = names.len();

    let mut labels: Vec<String> = Vec::new();
    let mut blocks: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format_err(path, e))?;
        if rec.len() != d + 1 {
            return Err(format_err(
                path,
                format!(
                    "row {} has {} fields, expected {}",
                    line + 2,
                    rec.len(),
                    d + 1
                ),
            ));
        }
        let label = &rec[0];
        if labels.last().map(String::as_str) != Some(label) {
            if labels.iter().any(|l| l == label) {
                return Err(format_err(
                    path,
                    format!("rows for time `{label}` are not contiguous"),
                ));
            }
            labels.push(label.to_string());
            blocks.push(Vec::new());
        }
        let block = blocks.last_mut().expect("block pushed above");
        for field in rec.iter().skip(1) {
            let v: f64 = field.trim().parse().map_err(|_| {
                format_err(path, format!("row {}: `{field}` is not a number", line + 2))
            })?;
            block.push(v);
        }
    }
    if blocks.is_empty() {
        return Err(format_err(path, "no data rows"));
    }
    let blocks = blocks
        .into_iter()
        .map(|v| DMatrix::from_row_slice(v.len() / d, d, &v))
        .collect();
    TimeSeriesDataset::new(blocks, names, labels)
}

pub fn write_dataset(path: &Path, data: &TimeSeriesDataset) -> Result<()> {
    write_atomic(path, &dataset_to_csv(data))
}

pub fn read_dataset(path: &Path) -> Result<TimeSeriesDataset> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    dataset_from_csv(&bytes, path)
}

// -------------------------------------------------------- matrix sequences

type Rows = Vec<Vec<f64>>;

fn to_rows(m: &DMatrix<f64>) -> Rows {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn from_rows(rows: &Rows, d: usize, what: &str) -> std::result::Result<DMatrix<f64>, String> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(format!("{what} is not {d}x{d}"));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn sym_from_rows(
    rows: &Rows,
    d: usize,
    what: &str,
) -> std::result::Result<SymmetricMatrix, String> {
    SymmetricMatrix::new(from_rows(rows, d, what)?).map_err(|e| format!("{what}: {e}"))
}

fn seq_from_rows(
    seq: &[Rows],
    t: usize,
    d: usize,
    what: &str,
) -> std::result::Result<Vec<SymmetricMatrix>, String> {
    if seq.len() != t {
        return Err(format!(
            "{what} has {} matrices, expected T = {t}",
            seq.len()
        ));
    }
    seq.iter()
        .enumerate()
        .map(|(i, m)| sym_from_rows(m, d, &format!("{what}[{i}]")))
        .collect()
}

#[derive(Serialize, Deserialize)]
struct SequenceFile {
    #[serde(rename = "T")]
    t: usize,
    d: usize,
    matrices: Vec<Rows>,
}

pub fn write_sequence(path: &Path, seq: &[SymmetricMatrix]) -> Result<()> {
    let d = crate::model::check_sequence(seq, "sequence")?;
    let file = SequenceFile {
        t: seq.len(),
        d,
        matrices: seq.iter().map(|m| to_rows(m)).collect(),
    };
    write_json(path, &file)
}

pub fn read_sequence(path: &Path) -> Result<Vec<SymmetricMatrix>> {
    let f: SequenceFile = read_json(path)?;
    seq_from_rows(&f.matrices, f.t, f.d, "matrices").map_err(|m| format_err(path, m))
}

#[derive(Serialize, Deserialize)]
struct EstimateFile {
    #[serde(rename = "T")]
    t: usize,
    d: usize,
    theta: Vec<Rows>,
    lowrank: Vec<Rows>,
    iterations: usize,
    converged: bool,
    /// `null` when the final iterate is infeasible.
    objective: Option<f64>,
    #[serde(default)]
    residual_history: Vec<ConvergenceReport>,
}

#[derive(Serialize, Deserialize)]
struct TruthFile {
    #[serde(rename = "T")]
    t: usize,
    d: usize,
    #[serde(rename = "H")]
    h: usize,
    theta: Vec<Rows>,
    lowrank: Vec<Rows>,
    loadings: Vec<Rows>,
}

/// The `theta`/`lowrank` pair shared by estimate and truth files.
#[derive(Deserialize)]
struct PairFile {
    #[serde(rename = "T")]
    t: usize,
    d: usize,
    theta: Vec<Rows>,
    lowrank: Vec<Rows>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| format_err(path, e))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_string(path)?).map_err(|e| format_err(path, e))
}

pub fn estimate_to_json(est: &NetworkEstimate, with_history: bool) -> Result<String> {
    let file = EstimateFile {
        t: est.time_points(),
        d: est.dim(),
        theta: est.theta_seq.iter().map(|m| to_rows(m)).collect(),
        lowrank: est.lowrank_seq.iter().map(|m| to_rows(m)).collect(),
        iterations: est.iterations,
        converged: est.converged,
        objective: est
            .objective_value
            .is_finite()
            .then_some(est.objective_value),
        residual_history: if with_history {
            est.residual_history.clone()
        } else {
            Vec::new()
        },
    };
    serde_json::to_string_pretty(&file).map_err(|e| Error::InvalidData(e.to_string()))
}

pub fn write_estimate(path: &Path, est: &NetworkEstimate, with_history: bool) -> Result<()> {
    let mut s = estimate_to_json(est, with_history)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_estimate(path: &Path) -> Result<NetworkEstimate> {
    let f: EstimateFile = read_json(path)?;
    let theta_seq = seq_from_rows(&f.theta, f.t, f.d, "theta").map_err(|m| format_err(path, m))?;
    let lowrank_seq =
        seq_from_rows(&f.lowrank, f.t, f.d, "lowrank").map_err(|m| format_err(path, m))?;
    Ok(NetworkEstimate {
        theta_seq,
        lowrank_seq,
        iterations: f.iterations,
        converged: f.converged,
        residual_history: f.residual_history,
        objective_value: f.objective.unwrap_or(f64::NAN),
    })
}

pub fn write_truth(path: &Path, truth: &GroundTruth) -> Result<()> {
    let file = TruthFile {
        t: truth.time_points(),
        d: truth.dim(),
        h: truth.latent_count,
        theta: truth.theta_seq.iter().map(|m| to_rows(m)).collect(),
        lowrank: truth.lowrank_seq.iter().map(|m| to_rows(m)).collect(),
        loadings: truth.loading_seq.iter().map(to_rows).collect(),
    };
    write_json(path, &file)
}

pub fn read_truth(path: &Path) -> Result<GroundTruth> {
    let f: TruthFile = read_json(path)?;
    let bad = |m: String| format_err(path, m);
    let theta_seq = seq_from_rows(&f.theta, f.t, f.d, "theta").map_err(bad)?;
    let lowrank_seq = seq_from_rows(&f.lowrank, f.t, f.d, "lowrank").map_err(bad)?;
    if f.loadings.len() != f.t {
        return Err(bad(format!(
            "{} loadings for T = {}",
            f.loadings.len(),
            f.t
        )));
    }
    let loading_seq = f
        .loadings
        .iter()
        .enumerate()
        .map(|(i, rows)| {
            if rows.len() != f.d || rows.iter().any(|r| r.len() != f.h) {
                return Err(bad(format!("loadings[{i}] is not {}x{}", f.d, f.h)));
            }
            Ok(DMatrix::from_fn(f.d, f.h, |a, b| rows[a][b]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroundTruth {
        theta_seq,
        lowrank_seq,
        latent_count: f.h,
        loading_seq,
    })
}

/// Reads the `(Θ, L)` sequences from either an estimate or a truth file.
pub fn read_network_pair(path: &Path) -> Result<(Vec<SymmetricMatrix>, Vec<SymmetricMatrix>)> {
    let f: PairFile = read_json(path)?;
    let theta = seq_from_rows(&f.theta, f.t, f.d, "theta").map_err(|m| format_err(path, m))?;
    let lowrank =
        seq_from_rows(&f.lowrank, f.t, f.d, "lowrank").map_err(|m| format_err(path, m))?;
    Ok((theta, lowrank))
}

// ----------------------------------------------------------------- configs

/// Lists of values whose cartesian product, applied on top of a base
/// hyperparameter set, forms a selection grid. Empty lists keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub alpha: Vec<f64>,
    pub tau: Vec<f64>,
    pub beta: Vec<f64>,
    pub eta: Vec<f64>,
    pub psi: Vec<PenaltyKind>,
    pub phi: Vec<PenaltyKind>,
}

impl GridSpec {
    pub fn expand(&self, base: &Hyperparameters) -> Vec<Hyperparameters> {
        fn or_base<T: Copy>(v: &[T], b: T) -> Vec<T> {
            if v.is_empty() {
                vec![b]
            } else {
                v.to_vec()
            }
        }
        let mut out = Vec::new();
        for &alpha in &or_base(&self.alpha, base.alpha) {
            for &tau in &or_base(&self.tau, base.tau) {
                for &beta in &or_base(&self.beta, base.beta) {
                    for &eta in &or_base(&self.eta, base.eta) {
                        for &psi in &or_base(&self.psi, base.psi) {
                            for &phi in &or_base(&self.phi, base.phi) {
                                out.push(Hyperparameters {
                                    alpha,
                                    tau,
                                    beta,
                                    eta,
                                    psi,
                                    phi,
                                    ..*base
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Contents of a `--config` file. Every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub hyperparameters: Hyperparameters,
    pub generator: GeneratorConfig,
    pub mccv: MccvPlan,
    pub grid: GridSpec,
}

pub fn config_from_toml(text: &str, path: &Path) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| format_err(path, e))
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    config_from_toml(&read_string(path)?, path)
}

pub fn config_to_toml(cfg: &RunConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::InvalidData(e.to_string()))
}
