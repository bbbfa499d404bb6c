//! Experiment settings from `section.key = value` files and `--set` overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hyperrom::burgers::{BurgersConfig, InitialCondition};
use hyperrom::rom::HyperReduction;
use hyperrom::snapshots::Truncation;

use crate::CliError;

/// Every accepted key with its default value.
const DEFAULTS: &[(&str, &str)] = &[
    ("fom.n", "1000"),
    ("fom.domain_length", "2.0"),
    ("fom.dx", ""),
    ("fom.dt", "0.001"),
    ("fom.n_steps", "500"),
    ("fom.init", "sine"),
    ("pod.k", "30"),
    ("pod.energy", ""),
    ("pod.u_ref", "initial"),
    ("pod.nonlinear_k", "30"),
    ("pod.nonlinear_basis", "nonlinear_pod"),
    ("sample.algorithm", "s_opt"),
    ("sample.n", "60"),
    ("sample.oversampling", ""),
    ("sample.sweep_min", "30"),
    ("sample.sweep_max", "60"),
    ("sample.algorithms", "s_opt,deim"),
    ("sample.log_stride", "50"),
    ("rom.projection", "lspg"),
    ("rom.hyper", "gappy_pod"),
    ("io.out", "out"),
    ("io.timing", "false"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceState {
    Initial,
    Mean,
    Zero,
}

/// Where the hyper-reduction basis comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonlinearSource {
    /// POD of the right-hand side evaluated along the FOM trajectory.
    NonlinearPod,
    /// The state basis itself (identity subspace map).
    Sns,
}

#[derive(Debug, Clone)]
pub struct PodSettings {
    pub truncation: Truncation,
    pub reference: ReferenceState,
    pub nonlinear_modes: usize,
    pub nonlinear_source: NonlinearSource,
}

#[derive(Debug, Clone)]
pub struct SampleSettings {
    pub algorithm: String,
    pub n: usize,
    pub sweep: std::ops::RangeInclusive<usize>,
    pub sweep_algorithms: Vec<String>,
    /// Stride between snapshots used for projection-error diagnostics.
    pub log_stride: usize,
}

#[derive(Debug, Clone)]
pub struct RomSettings {
    pub projection: String,
    pub hyper: HyperReduction,
}

#[derive(Debug, Clone)]
pub struct IoSettings {
    pub out: PathBuf,
    /// Record measured wall time in CSV output; off keeps files byte-identical across runs.
    pub timing: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub fom: BurgersConfig,
    pub pod: PodSettings,
    pub sample: SampleSettings,
    pub rom: RomSettings,
    pub io: IoSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_pairs(std::iter::empty()).expect("defaults are valid")
    }
}

impl ExperimentConfig {
    /// Reads a settings file and applies `key=value` overrides on top.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut pairs = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                parse_settings(&text)?
            }
            None => Vec::new(),
        };
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("override '{o}' is not key=value")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Self::from_pairs(pairs)
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, String)>) -> Result<Self, CliError> {
        let mut values: BTreeMap<&str, String> =
            DEFAULTS.iter().map(|(k, v)| (*k, v.to_string())).collect();
        for (k, v) in pairs {
            let Some((key, _)) = DEFAULTS.iter().find(|(d, _)| *d == k) else {
                return Err(CliError::Config(format!("unknown key '{k}'")));
            };
            values.insert(key, v);
        }
        let get = |k: &str| values[k].as_str();

        let n: usize = parse(get, "fom.n")?;
        let domain_length: f64 = parse(get, "fom.domain_length")?;
        let dt: f64 = parse(get, "fom.dt")?;
        let n_steps: usize = parse(get, "fom.n_steps")?;
        let mut fom = BurgersConfig::with_grid(n, domain_length, dt, n_steps);
        if !get("fom.dx").is_empty() {
            fom.dx = parse(get, "fom.dx")?;
        }
        fom.init = match get("fom.init") {
            "sine" => InitialCondition::Sine,
            other => match other.strip_prefix("constant:").map(str::parse::<f64>) {
                Some(Ok(c)) => InitialCondition::Constant(c),
                _ => return Err(invalid("fom.init", other, "sine or constant:<value>")),
            },
        };
        fom.validate()
            .map_err(|e| CliError::Config(format!("fom: {e}")))?;

        let truncation = if get("pod.energy").is_empty() {
            Truncation::Count(parse(get, "pod.k")?)
        } else {
            Truncation::Energy(parse(get, "pod.energy")?)
        };
        let reference = match get("pod.u_ref") {
            "initial" => ReferenceState::Initial,
            "mean" => ReferenceState::Mean,
            "zero" => ReferenceState::Zero,
            other => return Err(invalid("pod.u_ref", other, "initial, mean or zero")),
        };
        let nonlinear_source = match get("pod.nonlinear_basis") {
            "nonlinear_pod" => NonlinearSource::NonlinearPod,
            "sns" => NonlinearSource::Sns,
            other => {
                return Err(invalid(
                    "pod.nonlinear_basis",
                    other,
                    "nonlinear_pod or sns",
                ))
            }
        };
        let pod = PodSettings {
            truncation,
            reference,
            nonlinear_modes: parse(get, "pod.nonlinear_k")?,
            nonlinear_source,
        };

        let sample_n = if get("sample.oversampling").is_empty() {
            parse(get, "sample.n")?
        } else {
            let ratio: f64 = parse(get, "sample.oversampling")?;
            (ratio * pod.nonlinear_modes as f64).round() as usize
        };
        let sweep_min: usize = parse(get, "sample.sweep_min")?;
        let sweep_max: usize = parse(get, "sample.sweep_max")?;
        if sweep_min > sweep_max {
            return Err(CliError::Config(format!(
                "sample.sweep_min = {sweep_min} exceeds sample.sweep_max = {sweep_max}"
            )));
        }
        let sweep_algorithms: Vec<String> = get("sample.algorithms")
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if sweep_algorithms.is_empty() {
            return Err(CliError::Config("sample.algorithms is empty".into()));
        }
        let log_stride: usize = parse(get, "sample.log_stride")?;
        if log_stride == 0 {
            return Err(CliError::Config(
                "sample.log_stride must be positive".into(),
            ));
        }
        let sample = SampleSettings {
            algorithm: get("sample.algorithm").to_string(),
            n: sample_n,
            sweep: sweep_min..=sweep_max,
            sweep_algorithms,
            log_stride,
        };

        let rom = RomSettings {
            projection: get("rom.projection").to_string(),
            hyper: get("rom.hyper")
                .parse()
                .map_err(|e| CliError::Config(format!("rom.hyper: {e}")))?,
        };
        let io = IoSettings {
            out: PathBuf::from(get("io.out")),
            timing: parse(get, "io.timing")?,
        };
        Ok(Self {
            fom,
            pod,
            sample,
            rom,
            io,
        })
    }
}

fn parse<'a, T: std::str::FromStr>(
    get: impl Fn(&str) -> &'a str,
    key: &str,
) -> Result<T, CliError> {
    let raw = get(key);
    raw.parse()
        .map_err(|_| CliError::Config(format!("invalid value '{raw}' for key '{key}'")))
}

fn invalid(key: &str, value: &str, expected: &str) -> CliError {
    CliError::Config(format!(
        "invalid value '{value}' for key '{key}' (expected {expected})"
    ))
}

/// `section.key = value` lines; `[section]` headers prefix the keys that follow.
/// `#` and `;` start comments.
pub fn parse_settings(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut section = String::new();
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("line {}: expected key = value", lineno + 1))
        })?;
        let key = if section.is_empty() || k.contains('.') {
            k.trim().to_string()
        } else {
            format!("{section}.{}", k.trim())
        };
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}
