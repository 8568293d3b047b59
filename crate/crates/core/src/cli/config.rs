//! Run configuration: one JSON document that names a generator, a signal,
//! a grid, the experiments to run, and tolerance overrides.

use crate::funcalc::HoloFunction;
use crate::numlin::CMatrix;
use crate::semigroup::Sign;
use crate::signal::{Grid, PresetParams, Signal};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const KNOWN_EXPERIMENTS: [&str; 7] = [
    "commutator",
    "norm_equality",
    "desimon",
    "adjoint",
    "residuals",
    "funcalc",
    "extended_commutator",
];

/// Default master seed when neither config nor flag provides one.
pub const DEFAULT_SEED: u64 = 42;
/// Default grid size.
pub const DEFAULT_N_SAMPLES: usize = 2048;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent input: exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// Input parsed but failed numerical validation (for example a
    /// non-sectorial generator): exit code 3.
    #[error("numerical validation error: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Subset of [`KNOWN_EXPERIMENTS`]; empty list is a valid no-op run.
    #[serde(default)]
    pub experiments: Vec<String>,
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub signal: Option<SignalSpec>,
    /// Second signal for the duality experiment; derived from `signal` with
    /// seed + 1 when absent.
    #[serde(default)]
    pub cosignal: Option<SignalSpec>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    /// "direct", "fourier", or "both"; applies to the commutator experiment.
    #[serde(default)]
    pub paths: Option<String>,
    #[serde(default)]
    pub tolerances: Option<ToleranceOverrides>,
    /// Twist functions for the extended commutator; both default to the
    /// constant 1, which reduces it to the plain commutator.
    #[serde(default)]
    pub b1: Option<FuncSpec>,
    #[serde(default)]
    pub b2: Option<FuncSpec>,
    /// Grid sizes for sweep and bench.
    #[serde(default)]
    pub n_list: Option<Vec<usize>>,
    /// Matrix dimensions for bench.
    #[serde(default)]
    pub dims: Option<Vec<usize>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// "csv" or "json".
    #[serde(default)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    /// One of "laplacian_1d", "random_sectorial", "jordan_like", "scalar".
    #[serde(default)]
    pub preset: Option<String>,
    /// Matrix file as an alternative to a preset.
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// random_sectorial: max |arg lambda| in radians, below pi/2.
    #[serde(default)]
    pub angle: Option<f64>,
    /// jordan_like: superdiagonal entry.
    #[serde(default)]
    pub coupling: Option<f64>,
    /// scalar: the single eigenvalue re + i im.
    #[serde(default)]
    pub re: Option<f64>,
    #[serde(default)]
    pub im: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: Option<PresetParams>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub n_samples: usize,
}

/// Per-experiment pass thresholds; omitted fields keep the defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default)]
    pub commutator: Option<f64>,
    #[serde(default)]
    pub norm_equality: Option<f64>,
    #[serde(default)]
    pub desimon: Option<f64>,
    #[serde(default)]
    pub adjoint: Option<f64>,
    #[serde(default)]
    pub residuals: Option<f64>,
    #[serde(default)]
    pub funcalc: Option<f64>,
    #[serde(default)]
    pub extended_commutator: Option<f64>,
    #[serde(default)]
    pub bench_agreement: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    pub commutator: f64,
    pub norm_equality: f64,
    pub desimon: f64,
    pub adjoint: f64,
    pub residuals: f64,
    pub funcalc: f64,
    pub extended_commutator: f64,
    pub bench_agreement: f64,
}

impl Default for Tolerances {
    fn default() -> Tolerances {
        Tolerances {
            commutator: 5e-3,
            norm_equality: 5e-3,
            desimon: 5e-3,
            adjoint: 5e-3,
            residuals: 2e-2,
            funcalc: 1e-9,
            extended_commutator: 5e-3,
            bench_agreement: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn with_overrides(overrides: Option<&ToleranceOverrides>) -> Tolerances {
        let mut t = Tolerances::default();
        if let Some(o) = overrides {
            if let Some(v) = o.commutator {
                t.commutator = v;
            }
            if let Some(v) = o.norm_equality {
                t.norm_equality = v;
            }
            if let Some(v) = o.desimon {
                t.desimon = v;
            }
            if let Some(v) = o.adjoint {
                t.adjoint = v;
            }
            if let Some(v) = o.residuals {
                t.residuals = v;
            }
            if let Some(v) = o.funcalc {
                t.funcalc = v;
            }
            if let Some(v) = o.extended_commutator {
                t.extended_commutator = v;
            }
            if let Some(v) = o.bench_agreement {
                t.bench_agreement = v;
            }
        }
        t
    }
}

/// Scalar function selector for the twist experiments. `num`/`den` are
/// complex coefficients as [re, im] pairs, ascending powers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuncSpec {
    pub kind: String,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub sign: Option<String>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub num: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub den: Option<Vec<[f64; 2]>>,
}

impl FuncSpec {
    pub fn to_function(&self) -> Result<HoloFunction, CliError> {
        let bad = |msg: String| CliError::Config(msg);
        match self.kind.as_str() {
            "const_one" => Ok(HoloFunction::ConstOne),
            "exp_scale" => {
                let t = self
                    .t
                    .ok_or_else(|| bad("exp_scale needs field t".into()))?;
                if !(t.is_finite() && t >= 0.0) {
                    return Err(bad(format!("exp_scale t {t} must be nonnegative")));
                }
                Ok(HoloFunction::ExpScale { t })
            }
            "resolvent_frac" => {
                let sigma = self
                    .sigma
                    .ok_or_else(|| bad("resolvent_frac needs field sigma".into()))?;
                if !sigma.is_finite() {
                    return Err(bad(format!("resolvent_frac sigma {sigma} must be finite")));
                }
                let sign = match self.sign.as_deref() {
                    Some("plus") | None => Sign::Plus,
                    Some("minus") => Sign::Minus,
                    Some(other) => {
                        return Err(bad(format!("sign must be plus or minus, got {other}")))
                    }
                };
                Ok(HoloFunction::ResolventFrac { sign, sigma })
            }
            "rational" => {
                let num = self
                    .num
                    .as_ref()
                    .ok_or_else(|| bad("rational needs field num".into()))?;
                let den = self
                    .den
                    .as_ref()
                    .ok_or_else(|| bad("rational needs field den".into()))?;
                if num.is_empty() || den.is_empty() {
                    return Err(bad("rational coefficient lists must be nonempty".into()));
                }
                let to_c = |pairs: &Vec<[f64; 2]>| -> Vec<Complex64> {
                    pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect()
                };
                Ok(HoloFunction::Rational {
                    numerator: to_c(num),
                    denominator: to_c(den),
                })
            }
            other => Err(bad(format!("unknown function kind {other}"))),
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let config: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    validate_config(&config)?;
    Ok(config)
}

fn validate_config(config: &RunConfig) -> Result<(), CliError> {
    for name in &config.experiments {
        if !KNOWN_EXPERIMENTS.contains(&name.as_str()) {
            return Err(CliError::Config(format!(
                "unknown experiment {name}; known: {}",
                KNOWN_EXPERIMENTS.join(", ")
            )));
        }
    }
    if let Some(paths) = &config.paths {
        if !["direct", "fourier", "both"].contains(&paths.as_str()) {
            return Err(CliError::Config(format!(
                "paths must be direct, fourier, or both, got {paths}"
            )));
        }
    }
    if let Some(format) = &config.format {
        if !["csv", "json"].contains(&format.as_str()) {
            return Err(CliError::Config(format!(
                "format must be csv or json, got {format}"
            )));
        }
    }
    let spec = &config.generator;
    match (&spec.preset, &spec.file) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "generator: give either preset or file, not both".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Config(
                "generator: one of preset or file is required".into(),
            ))
        }
        _ => {}
    }
    if let Some(signal) = &config.signal {
        validate_signal_spec(signal, "signal")?;
    }
    if let Some(cosignal) = &config.cosignal {
        validate_signal_spec(cosignal, "cosignal")?;
    }
    if let Some(list) = &config.n_list {
        validate_n_list(list)?;
    }
    if let Some(dims) = &config.dims {
        validate_dims(dims)?;
    }
    Ok(())
}

pub fn validate_dims(dims: &[usize]) -> Result<(), CliError> {
    if dims.is_empty() || dims.iter().any(|&n| n == 0 || n > 64) {
        return Err(CliError::Config(
            "dims must be a nonempty list of sizes in [1, 64]".into(),
        ));
    }
    Ok(())
}

fn validate_signal_spec(spec: &SignalSpec, label: &str) -> Result<(), CliError> {
    match (&spec.preset, &spec.file) {
        (Some(_), Some(_)) => Err(CliError::Config(format!(
            "{label}: give either preset or file, not both"
        ))),
        (None, None) => Err(CliError::Config(format!(
            "{label}: one of preset or file is required"
        ))),
        _ => Ok(()),
    }
}

pub fn validate_n_list(list: &[usize]) -> Result<(), CliError> {
    if list.is_empty() {
        return Err(CliError::Config("n_list must be nonempty".into()));
    }
    for &n in list {
        if !n.is_power_of_two() {
            return Err(CliError::Config(format!("n_list entry {n} is not a power of two")));
        }
    }
    for pair in list.windows(2) {
        if pair[0] >= pair[1] {
            return Err(CliError::Config("n_list must be strictly ascending".into()));
        }
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    n: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

/// Matrix file: { "n": int, "re": [[n x n]], "im": [[n x n]] }, row-major.
pub fn load_matrix(path: &Path) -> Result<CMatrix, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: MatrixFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let n = file.n;
    if n == 0 || n > 64 {
        return Err(CliError::Config(format!("matrix size {n} outside [1, 64]")));
    }
    check_shape(&file.re, n, n, "re", path)?;
    check_shape(&file.im, n, n, "im", path)?;
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let z = Complex64::new(file.re[i][j], file.im[i][j]);
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(CliError::Config(format!(
                    "{}: non-finite entry at ({i}, {j})",
                    path.display()
                )));
            }
            m[(i, j)] = z;
        }
    }
    Ok(m)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignalFile {
    #[serde(rename = "T")]
    horizon: f64,
    #[serde(rename = "N")]
    n_samples: usize,
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

/// Signal file: { "T": real, "N": int, "dim": int, "re": [[N x dim]],
/// "im": [[N x dim]] }.
pub fn load_signal(path: &Path) -> Result<Signal, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: SignalFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let grid = Grid::new(file.horizon, file.n_samples)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if file.dim == 0 || file.dim > 64 {
        return Err(CliError::Config(format!("signal dim {} outside [1, 64]", file.dim)));
    }
    check_shape(&file.re, file.n_samples, file.dim, "re", path)?;
    check_shape(&file.im, file.n_samples, file.dim, "im", path)?;
    let mut s = Signal::zeros(grid, file.dim);
    for j in 0..file.n_samples {
        let row = s.sample_mut(j);
        for d in 0..file.dim {
            row[d] = Complex64::new(file.re[j][d], file.im[j][d]);
        }
    }
    if !s.is_finite() {
        return Err(CliError::Config(format!("{}: non-finite sample", path.display())));
    }
    Ok(s)
}

fn check_shape(
    rows: &[Vec<f64>],
    want_rows: usize,
    want_cols: usize,
    label: &str,
    path: &Path,
) -> Result<(), CliError> {
    if rows.len() != want_rows || rows.iter().any(|r| r.len() != want_cols) {
        return Err(CliError::Config(format!(
            "{}: field {label} must be {want_rows} x {want_cols}",
            path.display()
        )));
    }
    Ok(())
}
