//! Experiment runner behind the command-line tool: JSON configs in, JSON and
//! CSV reports out. Every output embeds the resolved config, its SHA-256 and
//! the seed, and nothing depends on wall-clock time or the thread count.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::lattice::{hits, siegel_transform, ScalingVector};
use crate::minima::{count_below, family_values};
use crate::pairs::{fit_abc, PairKind, RegularPair};
use crate::samplers::{
    build_box_family, build_centered_family, build_cone_family, build_grid_family, map_indexed,
    mersenne, Measure, ScalingFamily, DEFAULT_HECKE_PRIME,
};
use crate::stats::{
    factorial_moments, hitting_prob_bounds, ks_distance, lattice_of, loglaw_trend, mean_and_se,
    rogers_check, rogers_reference, siegel_check, Distribution, MomentCheck,
};

/// The subcommands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Sample,
    Experiment,
    Verify,
    Loglaw,
    Volume,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Experiment => "experiment",
            Command::Verify => "verify",
            Command::Loglaw => "loglaw",
            Command::Volume => "volume",
        }
    }
}

/// Command-line overrides.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// Failure of a run, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    Failure(String),
}

impl RunError {
    /// 2 usage, 3 verification failure, 4 resource budget, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => 2,
            RunError::Verification(_) => 3,
            RunError::Budget(_) => 4,
            RunError::Failure(_) => 1,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Budget { .. } => RunError::Budget(e.to_string()),
            Error::Domain(_) | Error::Unsupported(_) | Error::Dimension { .. } => {
                RunError::Usage(e.to_string())
            }
            Error::Degenerate(_) | Error::Fit(_) => RunError::Failure(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> RunError {
    RunError::Failure(format!("{}: {e}", path.display()))
}

/// What a successful run produced.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// A Hecke index: a plain integer, a decimal string, or `{"mersenne": k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PrimeSpec {
    Int(u64),
    Decimal(String),
    Mersenne { mersenne: u32 },
}

impl PrimeSpec {
    fn value(&self) -> Result<BigUint, RunError> {
        match self {
            PrimeSpec::Int(p) => Ok(BigUint::from(*p)),
            PrimeSpec::Decimal(s) => s
                .parse()
                .map_err(|_| RunError::Usage(format!("p: '{s}' is not a decimal integer"))),
            PrimeSpec::Mersenne { mersenne: k } => Ok(mersenne(*k)),
        }
    }
}

/// Explicit `(a, b, c)` for polynomial pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exponents {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Scaling-family constructors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    /// `s in {1..ell}^{d-1}`, `theta = ell^omega`.
    Grid { ell: usize, omega: f64 },
    /// `s_k in {1..extents[k]}`.
    Box { extents: Vec<usize>, log_theta: f64 },
    /// `ell^{d-1}` members centred on the identity.
    Centered { ell: usize, log_theta: f64 },
    /// Products of powers of the generators (given as `log T` rows).
    Cone {
        generators: Vec<Vec<f64>>,
        ell: usize,
        log_theta: f64,
    },
}

impl FamilyConfig {
    fn build(&self, pair: &RegularPair) -> Result<ScalingFamily, RunError> {
        let d = pair.dim();
        Ok(match self {
            FamilyConfig::Grid { ell, omega } => build_grid_family(d, *ell, *omega)?,
            FamilyConfig::Box { extents, log_theta } => build_box_family(d, extents, *log_theta)?,
            FamilyConfig::Centered { ell, log_theta } => {
                build_centered_family(d, *ell, *log_theta)?
            }
            FamilyConfig::Cone {
                generators,
                ell,
                log_theta,
            } => {
                let (d1, d2) = pair.split().ok_or_else(|| {
                    RunError::Usage("family: cone families need a split pair".into())
                })?;
                let gens = generators
                    .iter()
                    .map(|g| ScalingVector::from_logs(g.clone()))
                    .collect::<crate::Result<Vec<_>>>()?;
                build_cone_family(d1, d2, &gens, *ell, log_theta.exp())?
            }
        })
    }

    fn ell(&self) -> Option<usize> {
        match self {
            FamilyConfig::Grid { ell, .. }
            | FamilyConfig::Centered { ell, .. }
            | FamilyConfig::Cone { ell, .. } => Some(*ell),
            FamilyConfig::Box { .. } => None,
        }
    }
}

/// Measure selection shared by the sampling commands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Mu,
    Nu,
}

fn build_measure(
    kind: MeasureKind,
    d: Option<usize>,
    d1: Option<usize>,
    d2: Option<usize>,
    p: &Option<PrimeSpec>,
) -> Result<Measure, RunError> {
    match kind {
        MeasureKind::Mu => {
            let d = d.ok_or_else(|| RunError::Usage("missing field `d` for measure mu".into()))?;
            let p = match p {
                Some(p) => p.value()?,
                None => BigUint::from(DEFAULT_HECKE_PRIME),
            };
            Ok(Measure::mu(d, p)?)
        }
        MeasureKind::Nu => {
            if p.is_some() {
                return Err(RunError::Usage("field `p` only applies to measure mu".into()));
            }
            let (d1, d2) = match (d1, d2) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(RunError::Usage("measure nu needs fields `d1` and `d2`".into())),
            };
            Ok(Measure::nu(d1, d2)?)
        }
    }
}

fn build_pair(kind: &PairKind, exponents: Option<Exponents>) -> Result<RegularPair, RunError> {
    match (kind, exponents) {
        (PairKind::Polynomial(p), Some(e)) => Ok(RegularPair::polynomial(p.clone(), e.a, e.b, e.c)?),
        (PairKind::Polynomial(_), None) => Err(RunError::Usage(
            "polynomial pairs need `exponents` {a, b, c} (see the volume command for a fit)".into(),
        )),
        (_, Some(_)) => Err(RunError::Usage(
            "`exponents` only applies to polynomial pairs".into(),
        )),
        (k, None) => Ok(RegularPair::new(k.clone())?),
    }
}

fn check_measure_matches(pair: &RegularPair, measure: &Measure) -> Result<(), RunError> {
    if pair.dim() != measure.dim() {
        return Err(RunError::Usage(format!(
            "pair dimension {} does not match measure dimension {}",
            pair.dim(),
            measure.dim()
        )));
    }
    if let (Measure::Nu { d1, d2, .. }, Some(split)) = (measure, pair.split()) {
        if split != (*d1, *d2) {
            return Err(RunError::Usage(format!(
                "pair split {split:?} does not match measure split ({d1}, {d2})"
            )));
        }
    }
    Ok(())
}

/// Warns when a Hecke index is too small for the skew of a family.
fn check_hecke_skew(measure: &Measure, family: &ScalingFamily) {
    if let Measure::Mu(h) = measure {
        let skew = family
            .members
            .iter()
            .map(|t| t.log_norm_inf())
            .fold(0.0, f64::max);
        let room = crate::exact::log2_biguint(h.prime()) * std::f64::consts::LN_2 * 2.0 / 3.0;
        if skew > room {
            eprintln!(
                "warning: family skew {skew:.1} exceeds 2/3 log p = {room:.1}; Hecke draws are biased (use a larger p)"
            );
        }
    }
}

// ---------------------------------------------------------------------------
// configs

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub measure: MeasureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<PrimeSpec>,
    pub n: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Weibull,
    Poisson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pair: PairKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Exponents>,
    pub measure: MeasureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<PrimeSpec>,
    pub family: FamilyConfig,
    pub n_samples: usize,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<u32>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    Siegel,
    Rogers,
    HittingBand,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub identity: Identity,
    pub d: usize,
    pub volumes: Vec<f64>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<PrimeSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoglawConfig {
    pub pair: PairKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Exponents>,
    pub measure: MeasureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<PrimeSpec>,
    pub delta: f64,
    pub stages: Vec<FamilyConfig>,
    pub n_samples: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeConfig {
    pub pair: PairKind,
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub mc_samples: u64,
    #[serde(default = "default_true")]
    pub fit: bool,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

fn default_true() -> bool {
    true
}

// ---------------------------------------------------------------------------
// output helpers

/// Serialises a float, mapping non-finite values to the strings
/// `"inf"`, `"-inf"` and `"nan"`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(fmt_f64(x))
    }
}

/// Locale-free float formatting (shortest round-trip, `inf` sentinel).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        serde_json::Number::from_f64(x).map(|n| n.to_string()).unwrap_or_default()
    }
}

struct Provenance {
    command: Command,
    config: Value,
    hash: String,
    seed: u64,
}

impl Provenance {
    fn new<C: Serialize>(command: Command, config: &C, seed: u64) -> Result<Self, RunError> {
        // `Value` objects are key-sorted, which makes the text canonical
        let config = serde_json::to_value(config).map_err(|e| RunError::Failure(e.to_string()))?;
        let text = serde_json::to_string(&config).map_err(|e| RunError::Failure(e.to_string()))?;
        let hash = hex::encode(Sha256::digest(text.as_bytes()));
        Ok(Provenance {
            command,
            config,
            hash,
            seed,
        })
    }

    fn header(&self) -> Value {
        json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command.name(),
            "seed": self.seed,
            "config_hash": self.hash,
            "config": self.config,
        })
    }

    fn csv_comment(&self) -> String {
        format!(
            "# {} {} seed={} config_hash={} config={}\n",
            env!("CARGO_PKG_NAME"),
            self.command.name(),
            self.seed,
            self.hash,
            self.config
        )
    }

    fn report(&self, body: Value) -> Value {
        let mut v = json!({ "provenance": self.header() });
        if let (Value::Object(out), Value::Object(extra)) = (&mut v, body) {
            out.extend(extra);
        }
        v
    }
}

struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<(), RunError> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| RunError::Failure(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    fn csv(&mut self, name: &str, prov: &Provenance, header: &str, rows: &[Vec<String>]) -> Result<(), RunError> {
        let mut text = prov.csv_comment();
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write(name, &text)
    }
}

fn load<C: DeserializeOwned>(path: &Path) -> Result<C, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| RunError::Usage(format!("invalid config {}: {e}", path.display())))
}

fn resolve(config_seed: &mut Option<u64>, config_threads: Option<usize>, opts: &RunOptions) -> Result<(u64, usize), RunError> {
    if let Some(s) = opts.seed {
        *config_seed = Some(s);
    }
    let seed = config_seed
        .ok_or_else(|| RunError::Usage("no seed: set `seed` in the config or pass --seed".into()))?;
    let threads = opts.threads.or(config_threads).unwrap_or(1);
    if threads == 0 {
        return Err(RunError::Usage("threads must be at least 1".into()));
    }
    Ok((seed, threads))
}

fn require_positive(name: &str, n: usize) -> Result<(), RunError> {
    if n == 0 {
        Err(RunError::Usage(format!("`{name}` must be positive")))
    } else {
        Ok(())
    }
}

/// Runs one subcommand.
pub fn run(command: Command, opts: &RunOptions) -> Result<RunReport, RunError> {
    match command {
        Command::Sample => cmd_sample(load(&opts.config)?, opts),
        Command::Experiment => cmd_experiment(load(&opts.config)?, opts),
        Command::Verify => cmd_verify(load(&opts.config)?, opts),
        Command::Loglaw => cmd_loglaw(load(&opts.config)?, opts),
        Command::Volume => cmd_volume(load(&opts.config)?, opts),
    }
}

// ---------------------------------------------------------------------------
// sample

pub fn cmd_sample(mut cfg: SampleConfig, opts: &RunOptions) -> Result<RunReport, RunError> {
    let (seed, threads) = resolve(&mut cfg.seed, cfg.threads, opts)?;
    require_positive("n", cfg.n)?;
    let measure = build_measure(cfg.measure, cfg.d, cfg.d1, cfg.d2, &cfg.p)?;
    let prov = Provenance::new(Command::Sample, &cfg, seed)?;
    let lines = map_indexed(cfg.n, threads, |i| {
        let s = measure.sample(seed, i as u64)?;
        let mut line = json!({
            "index": i,
            "seed": seed,
            "config_hash": prov.hash,
            "config": prov.config,
        });
        match &s.alpha {
            Some(alpha) => {
                line["lattice"] = serde_json::to_value(alpha.lattice()?).unwrap_or(Value::Null);
                line["alpha"] = json!({
                    "bits": alpha.bits(),
                    "numerators": alpha
                        .numerators()
                        .iter()
                        .map(|r| r.iter().map(|n| n.to_string()).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                });
            }
            None => {
                line["lattice"] = serde_json::to_value(lattice_of(&s.source)?).unwrap_or(Value::Null);
            }
        }
        Ok(serde_json::to_string(&line).unwrap_or_default())
    })?;
    let mut out = Outputs::new(&opts.out)?;
    let mut text = lines.join("\n");
    text.push('\n');
    out.write("samples.jsonl", &text)?;
    Ok(RunReport {
        summary: format!("wrote {} draws", cfg.n),
        files: out.files,
    })
}

// ---------------------------------------------------------------------------
// experiment

pub fn cmd_experiment(mut cfg: ExperimentConfig, opts: &RunOptions) -> Result<RunReport, RunError> {
    let (seed, threads) = resolve(&mut cfg.seed, cfg.threads, opts)?;
    require_positive("n_samples", cfg.n_samples)?;
    let pair = build_pair(&cfg.pair, cfg.exponents)?;
    let measure = build_measure(cfg.measure, cfg.d, cfg.d1, cfg.d2, &cfg.p)?;
    check_measure_matches(&pair, &measure)?;
    let d = pair.dim();
    if matches!(measure, Measure::Mu(_)) && d < 3 {
        return Err(RunError::Usage(
            "refused: the limit laws for the invariant measure are established only for d >= 3; \
             the planar case d = 2 is open"
                .into(),
        ));
    }
    let constants = pair.theorem_constants(d)?;
    let u_grid = match (cfg.mode, &cfg.u_grid) {
        (Mode::Poisson, Some(u)) if !u.is_empty() => u.clone(),
        (Mode::Poisson, _) => return Err(RunError::Usage("poisson mode needs a non-empty `u_grid`".into())),
        (Mode::Weibull, Some(_)) => return Err(RunError::Usage("`u_grid` only applies to poisson mode".into())),
        (Mode::Weibull, None) => Vec::new(),
    };
    if u_grid.iter().any(|u| !(*u > 0.0) || !u.is_finite()) {
        return Err(RunError::Usage("`u_grid` entries must be positive".into()));
    }
    let r_max = cfg.r_max.unwrap_or(2);
    if r_max == 0 {
        return Err(RunError::Usage("`r_max` must be at least 1".into()));
    }
    let family = cfg.family.build(&pair)?;
    if family.len() < 2 {
        return Err(RunError::Usage("the family needs at least two members".into()));
    }
    check_hecke_skew(&measure, &family);
    let delta = pair.delta_n(family.len() as f64)?;
    let prov = Provenance::new(Command::Experiment, &cfg, seed)?;

    let per_sample = map_indexed(cfg.n_samples, threads, |i| {
        let sample = measure.sample(seed, i as u64)?;
        let values = family_values(&pair, &family.members, &sample.source)?;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min) / delta;
        let counts: Vec<u64> = u_grid.iter().map(|u| count_below(&values, delta * u)).collect();
        Ok((min, counts))
    })?;
    let minima: Vec<f64> = per_sample.iter().map(|(m, _)| *m).collect();

    let mut body = json!({
        "mode": cfg.mode,
        "pair": pair,
        "family": {
            "size": family.len(),
            "rank": family.rank,
            "spread": num(family.spread),
            "spread_ratio": num(family.spread_ratio()),
            "min_floor": family.min_floor.map(num),
            "floor_ratio": family.floor_ratio().map(num),
        },
        "delta_n": num(delta),
        "theorem": constants,
        "n_samples": cfg.n_samples,
    });
    let summary;
    let mut out = Outputs::new(&opts.out)?;
    match cfg.mode {
        Mode::Weibull => {
            let reference = Distribution::Weibull {
                scale: constants.weibull_scale,
                shape: constants.weibull_shape,
            };
            let ks = ks_distance(&minima, &reference)?;
            body["reference"] = serde_json::to_value(reference).unwrap_or(Value::Null);
            body["ks_distance"] = num(ks.distance);
            body["n_finite"] = json!(ks.n_finite);
            body["n_infinite"] = json!(ks.n_infinite);
            body["factorial_moments"] = json!([]);
            summary = format!(
                "weibull: ks = {} against scale {} shape {} ({} samples)",
                fmt_f64(ks.distance),
                fmt_f64(constants.weibull_scale),
                fmt_f64(constants.weibull_shape),
                cfg.n_samples
            );
        }
        Mode::Poisson => {
            let mut moments = Vec::new();
            let mut rows = Vec::new();
            let mut lines = Vec::new();
            for (k, &u) in u_grid.iter().enumerate() {
                let mean = constants.m_o * u.powf(pair.a);
                let counts: Vec<u64> = per_sample.iter().map(|(_, c)| c[k]).collect();
                let fm = factorial_moments(&counts, r_max, mean)?;
                for m in &fm {
                    lines.push(format!(
                        "u={} r={}: {} vs {} (se {})",
                        fmt_f64(u),
                        m.r,
                        fmt_f64(m.estimate),
                        fmt_f64(m.reference),
                        fmt_f64(m.std_error)
                    ));
                }
                moments.push(json!({
                    "u": num(u),
                    "reference": Distribution::Poisson { mean },
                    "moments": fm,
                }));
                for (i, c) in counts.iter().enumerate() {
                    rows.push(vec![i.to_string(), fmt_f64(u), c.to_string()]);
                }
            }
            body["reference"] = Value::Null;
            body["ks_distance"] = Value::Null;
            body["factorial_moments"] = Value::Array(moments);
            out.csv("counts.csv", &prov, "sample_index,u,value", &rows)?;
            summary = format!("poisson:\n  {}", lines.join("\n  "));
        }
    }
    body["samples"] = Value::Array(minima.iter().map(|&x| num(x)).collect());
    out.json("result.json", &prov.report(body))?;
    let rows: Vec<Vec<String>> = minima
        .iter()
        .enumerate()
        .map(|(i, &x)| vec![i.to_string(), fmt_f64(x)])
        .collect();
    out.csv("samples.csv", &prov, "sample_index,value", &rows)?;
    Ok(RunReport {
        summary,
        files: out.files,
    })
}

// ---------------------------------------------------------------------------
// verify

pub fn cmd_verify(mut cfg: VerifyConfig, opts: &RunOptions) -> Result<RunReport, RunError> {
    let (seed, threads) = resolve(&mut cfg.seed, cfg.threads, opts)?;
    require_positive("n", cfg.n)?;
    if cfg.volumes.is_empty() {
        return Err(RunError::Usage("`volumes` must be non-empty".into()));
    }
    if cfg.volumes.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(RunError::Usage("`volumes` entries must be positive".into()));
    }
    let d = cfg.d;
    for &v in &cfg.volumes {
        match cfg.identity {
            Identity::Siegel => {
                crate::stats::siegel_reference(d, v)?;
            }
            Identity::Rogers => {
                rogers_reference(d, v)?;
            }
            Identity::HittingBand => {
                hitting_prob_bounds(v, d)?;
            }
        }
    }
    let measure = build_measure(MeasureKind::Mu, Some(d), None, None, &cfg.p)?;
    let prov = Provenance::new(Command::Verify, &cfg, seed)?;
    let id = ScalingVector::identity(d);
    let radii: Vec<f64> = cfg.volumes.iter().map(|v| 0.5 * v.powf(1.0 / d as f64)).collect();
    let identity = cfg.identity;
    let counts = map_indexed(cfg.n, threads, |i| {
        let lattice = lattice_of(&measure.sample(seed, i as u64)?.source)?;
        radii
            .iter()
            .map(|&r| match identity {
                Identity::HittingBand => hits(&lattice, &id, r).map(|h| if h { 1.0 } else { 0.0 }),
                _ => siegel_transform(&lattice, &id, r).map(|c| c as f64),
            })
            .collect::<crate::Result<Vec<f64>>>()
    })?;

    let mut rows = Vec::new();
    let mut table = Vec::new();
    let mut all_pass = true;
    for (k, &v) in cfg.volumes.iter().enumerate() {
        let column: Vec<f64> = counts.iter().map(|c| c[k]).collect();
        let (reference, lower, upper, estimate, se, z, pass) = match identity {
            Identity::Siegel | Identity::Rogers => {
                let check: MomentCheck = if identity == Identity::Siegel {
                    siegel_check(&column, d, v)?
                } else {
                    rogers_check(&column, d, v)?
                };
                let z = check.z_score();
                let pass = z.abs() <= 4.0;
                (check.reference, check.reference, check.reference, check.estimate, check.std_error, z, pass)
            }
            Identity::HittingBand => {
                let b = hitting_prob_bounds(v, d)?;
                let (p, se) = mean_and_se(&column);
                let pass = p >= b.lower - 4.0 * se && p <= b.upper + 4.0 * se;
                let z = if p < b.lower {
                    (p - b.lower) / se
                } else if p > b.upper {
                    (p - b.upper) / se
                } else {
                    0.0
                };
                (b.center, b.lower, b.upper, p, se, z, pass)
            }
        };
        all_pass &= pass;
        rows.push(vec![
            fmt_f64(v),
            fmt_f64(reference),
            fmt_f64(lower),
            fmt_f64(upper),
            fmt_f64(estimate),
            fmt_f64(se),
            fmt_f64(z),
            pass.to_string(),
        ]);
        table.push(json!({
            "volume": num(v),
            "reference": num(reference),
            "lower": num(lower),
            "upper": num(upper),
            "estimate": num(estimate),
            "std_error": num(se),
            "z_score": num(z),
            "pass": pass,
        }));
    }
    let body = json!({ "identity": identity, "n": cfg.n, "rows": table, "pass": all_pass });
    let mut out = Outputs::new(&opts.out)?;
    out.json("verify.json", &prov.report(body))?;
    out.csv(
        "verify.csv",
        &prov,
        "volume,reference,lower,upper,estimate,std_error,z_score,pass",
        &rows,
    )?;
    let mut summary = String::new();
    for r in &rows {
        let _ = writeln!(
            summary,
            "V={} reference={} estimate={} se={} z={} {}",
            r[0],
            r[1],
            r[4],
            r[5],
            r[6],
            if r[7] == "true" { "pass" } else { "FAIL" }
        );
    }
    if all_pass {
        Ok(RunReport {
            summary,
            files: out.files,
        })
    } else {
        Err(RunError::Verification(summary))
    }
}

// ---------------------------------------------------------------------------
// loglaw

pub fn cmd_loglaw(mut cfg: LoglawConfig, opts: &RunOptions) -> Result<RunReport, RunError> {
    let (seed, threads) = resolve(&mut cfg.seed, cfg.threads, opts)?;
    require_positive("n_samples", cfg.n_samples)?;
    if cfg.stages.is_empty() {
        return Err(RunError::Usage("`stages` must be non-empty".into()));
    }
    let pair = build_pair(&cfg.pair, cfg.exponents)?;
    let measure = build_measure(cfg.measure, cfg.d, cfg.d1, cfg.d2, &cfg.p)?;
    check_measure_matches(&pair, &measure)?;
    let stages = cfg
        .stages
        .iter()
        .map(|s| s.build(&pair))
        .collect::<Result<Vec<_>, _>>()?;
    for family in &stages {
        let bound = family.rank as f64;
        if !(cfg.delta >= 0.0 && cfg.delta < bound) {
            return Err(RunError::Usage(format!(
                "refused: delta = {} must satisfy 0 <= delta < {bound}, the dimension of the set the family is drawn from",
                cfg.delta
            )));
        }
    }
    if let Some(last) = stages.last() {
        check_hecke_skew(&measure, last);
    }
    let prov = Provenance::new(Command::Loglaw, &cfg, seed)?;
    let trend = loglaw_trend(&pair, &measure, cfg.delta, &stages, cfg.n_samples, seed, threads)?;
    let decreasing = trend.windows(2).all(|w| w[1].median < w[0].median);
    let rows: Vec<Vec<String>> = trend
        .iter()
        .zip(&cfg.stages)
        .map(|(s, c)| {
            vec![
                s.stage.to_string(),
                c.ell().map(|l| l.to_string()).unwrap_or_default(),
                s.family_size.to_string(),
                fmt_f64(s.spread_ratio),
                fmt_f64(s.median),
            ]
        })
        .collect();
    let body = json!({
        "pair": pair,
        "delta": num(cfg.delta),
        "exponent": num(cfg.delta / pair.a),
        "n_samples": cfg.n_samples,
        "stages": trend.iter().zip(&cfg.stages).map(|(s, c)| json!({
            "stage": s.stage,
            "ell": c.ell(),
            "family_size": s.family_size,
            "spread_ratio": num(s.spread_ratio),
            "median": num(s.median),
        })).collect::<Vec<_>>(),
        "strictly_decreasing": decreasing,
    });
    let mut out = Outputs::new(&opts.out)?;
    out.json("loglaw.json", &prov.report(body))?;
    out.csv("loglaw.csv", &prov, "stage,ell,family_size,spread_ratio,median", &rows)?;
    let mut summary: String = rows
        .iter()
        .map(|r| format!("stage {} ell={} |F|={} spread_ratio={} median={}\n", r[0], r[1], r[2], r[3], r[4]))
        .collect();
    let _ = write!(summary, "strictly decreasing: {decreasing}");
    Ok(RunReport {
        summary,
        files: out.files,
    })
}

// ---------------------------------------------------------------------------
// volume

pub fn cmd_volume(mut cfg: VolumeConfig, opts: &RunOptions) -> Result<RunReport, RunError> {
    let (seed, threads) = resolve(&mut cfg.seed, cfg.threads, opts)?;
    if cfg.t_grid.is_empty() {
        return Err(RunError::Usage("`t_grid` must be non-empty".into()));
    }
    let pair = match &cfg.pair {
        // exponents do not enter the volume computations
        PairKind::Polynomial(p) => RegularPair::polynomial(p.clone(), 1.0, 0.0, 1.0)?,
        k => RegularPair::new(k.clone())?,
    };
    let closed_form = !matches!(pair.kind, PairKind::Polynomial(_));
    if !closed_form && cfg.mc_samples == 0 {
        return Err(RunError::Usage(
            "polynomial pairs have no closed-form volume; set `mc_samples`".into(),
        ));
    }
    let prov = Provenance::new(Command::Volume, &cfg, seed)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunError::Failure(e.to_string()))?;
    let rows = pool.install(|| {
        cfg.t_grid
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let exact = if closed_form { Some(pair.volume_c(t)?) } else { None };
                let mc = if cfg.mc_samples > 0 {
                    Some(pair.mc_volume(t, cfg.mc_samples, seed.wrapping_add(k as u64))?)
                } else {
                    None
                };
                Ok((t, exact, mc))
            })
            .collect::<crate::Result<Vec<_>>>()
    })?;

    let mut table = Vec::new();
    let mut csv = Vec::new();
    for &(t, exact, mc) in &rows {
        let z = match (exact, mc) {
            (Some(v), Some((m, se))) if se > 0.0 => Some((m - v) / se),
            (Some(v), Some((m, _))) => Some(if m == v { 0.0 } else { f64::INFINITY }),
            _ => None,
        };
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        csv.push(vec![
            fmt_f64(t),
            opt(exact),
            opt(mc.map(|m| m.0)),
            opt(mc.map(|m| m.1)),
            opt(z),
        ]);
        table.push(json!({
            "t": num(t),
            "closed_form": exact.map(num),
            "mc": mc.map(|m| num(m.0)),
            "mc_std_error": mc.map(|m| num(m.1)),
            "z_score": z.map(num),
        }));
    }
    let fit = if cfg.fit {
        let volumes: Vec<f64> = rows
            .iter()
            .map(|(_, e, m)| e.or(m.map(|m| m.0)).unwrap_or(0.0))
            .collect();
        Some(fit_abc(&cfg.t_grid, &volumes)?)
    } else {
        None
    };
    let body = json!({
        "pair": pair.kind,
        "exact_exponents": if closed_form { json!({"a": pair.a, "b": pair.b, "c": pair.c}) } else { Value::Null },
        "rows": table,
        "fit": fit,
    });
    let mut out = Outputs::new(&opts.out)?;
    out.json("volume.json", &prov.report(body))?;
    out.csv("volume.csv", &prov, "t,closed_form,mc,mc_std_error,z_score", &csv)?;
    let mut summary: String = csv
        .iter()
        .map(|r| format!("t={} closed={} mc={} se={} z={}\n", r[0], r[1], r[2], r[3], r[4]))
        .collect();
    if let Some(f) = fit {
        let _ = write!(summary, "fit: a={} b={} c={}", fmt_f64(f.a), fmt_f64(f.b), fmt_f64(f.c));
    }
    Ok(RunReport {
        summary,
        files: out.files,
    })
}
