//! Line-based `key = value` experiment configuration.
//!
//! Comments start with `#` and may follow a value. Unknown keys, malformed
//! lines and out-of-range values are errors carrying the line number.
//! Duplicate keys keep the last value and add a warning to the parse
//! result, which the runner prints in its report.

use std::fmt;
use std::str::FromStr;

use pnc_core::galois;

/// Desk-scale caps: exhaustive decoders and enumerations stay tractable.
pub const MAX_CODEBOOK: u64 = 1 << 16;
pub const MAX_BLOCKLENGTH: usize = 64;
pub const MAX_USERS: usize = 4;
pub const MAX_RADIUS: i64 = 6;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    /// Line could not be split into `key = value`.
    Malformed { line: usize },
    UnknownKey { line: usize, key: String },
    BadValue { line: usize, key: String, value: String },
    OutOfRange { line: usize, key: String, reason: String },
    MissingKey { key: &'static str },
    /// Cross-field validation failure (no single line to blame).
    Invalid { reason: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Malformed { line } => {
                write!(f, "line {}: expected `key = value`", line)
            }
            ConfigError::UnknownKey { line, key } => {
                write!(f, "line {}: unknown key `{}`", line, key)
            }
            ConfigError::BadValue { line, key, value } => {
                write!(f, "line {}: cannot parse `{}` for key `{}`", line, value, key)
            }
            ConfigError::OutOfRange { line, key, reason } => {
                write!(f, "line {}: key `{}` out of range: {}", line, key, reason)
            }
            ConfigError::MissingKey { key } => write!(f, "missing required key `{}`", key),
            ConfigError::Invalid { reason } => write!(f, "invalid config: {}", reason),
        }
    }
}

impl std::error::Error for ConfigError {}

/// The experiments the runner knows how to dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    TwowayCurves,
    TwowaySim,
    Geteqm3,
    ModqDemo,
    CfSingle,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::TwowayCurves => "twoway_curves",
            ExperimentKind::TwowaySim => "twoway_sim",
            ExperimentKind::Geteqm3 => "geteqm3",
            ExperimentKind::ModqDemo => "modq_demo",
            ExperimentKind::CfSingle => "cf_single",
        }
    }

    /// Stream-derivation tag, stable across releases.
    pub fn tag(&self) -> u64 {
        match self {
            ExperimentKind::TwowayCurves => 1,
            ExperimentKind::TwowaySim => 2,
            ExperimentKind::Geteqm3 => 3,
            ExperimentKind::ModqDemo => 4,
            ExperimentKind::CfSingle => 5,
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "twoway_curves" => Ok(ExperimentKind::TwowayCurves),
            "twoway_sim" => Ok(ExperimentKind::TwowaySim),
            "geteqm3" => Ok(ExperimentKind::Geteqm3),
            "modq_demo" => Ok(ExperimentKind::ModqDemo),
            "cf_single" => Ok(ExperimentKind::CfSingle),
            _ => Err(()),
        }
    }
}

/// A fully validated experiment description. Defaults are documented in the
/// README; every field is reproducible from the config text alone.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub snr_db_start: f64,
    pub snr_db_stop: f64,
    pub snr_db_step: f64,
    pub q: u32,
    pub k: usize,
    pub n: usize,
    pub users: usize,
    pub trials: usize,
    pub seed: u64,
    pub search_radius: i64,
    pub output: String,
}

impl ExperimentConfig {
    /// The SNR grid in dB, inclusive of the endpoint within a half-step.
    pub fn snr_grid(&self) -> Vec<f64> {
        let mut grid = Vec::new();
        let mut v = self.snr_db_start;
        while v <= self.snr_db_stop + 1e-9 {
            grid.push(v);
            v += self.snr_db_step;
        }
        grid
    }
}

/// Result of parsing: the config plus any non-fatal warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConfig {
    pub config: ExperimentConfig,
    pub warnings: Vec<String>,
}

pub fn parse_config(text: &str) -> Result<ParsedConfig, ConfigError> {
    let mut experiment: Option<ExperimentKind> = None;
    let mut snr_db_start = -5.0;
    let mut snr_db_stop = 25.0;
    let mut snr_db_step = 5.0;
    let mut q: u32 = 5;
    let mut k: usize = 2;
    let mut n: usize = 8;
    let mut users: Option<usize> = None;
    let mut trials: usize = 1000;
    let mut seed: u64 = 0;
    let mut search_radius: i64 = 2;
    let mut output = String::from("results.csv");

    let mut seen: Vec<(String, usize)> = Vec::new();
    let mut warnings = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(ConfigError::Malformed { line: line_no })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if value.is_empty() {
            return Err(ConfigError::Malformed { line: line_no });
        }
        if let Some((_, first)) = seen.iter().find(|(k2, _)| *k2 == key) {
            warnings.push(format!(
                "duplicate key `{}` on line {} overrides line {} (last one wins)",
                key, line_no, first
            ));
        } else {
            seen.push((key.clone(), line_no));
        }

        let bad = |v: &str| ConfigError::BadValue {
            line: line_no,
            key: key.clone(),
            value: v.to_string(),
        };
        let range = |reason: String| ConfigError::OutOfRange {
            line: line_no,
            key: key.clone(),
            reason,
        };

        match key.as_str() {
            "experiment" => {
                experiment =
                    Some(ExperimentKind::from_str(&value).map_err(|_| bad(&value))?);
            }
            "snr_db_start" => snr_db_start = value.parse().map_err(|_| bad(&value))?,
            "snr_db_stop" => snr_db_stop = value.parse().map_err(|_| bad(&value))?,
            "snr_db_step" => {
                snr_db_step = value.parse().map_err(|_| bad(&value))?;
                if snr_db_step <= 0.0 {
                    return Err(range("step must be positive".into()));
                }
            }
            "q" => {
                q = value.parse().map_err(|_| bad(&value))?;
                if !galois::is_prime(q) || q >= galois::MAX_MODULUS {
                    return Err(range(format!("{} is not a prime below 2^16", q)));
                }
            }
            "k" => {
                k = value.parse().map_err(|_| bad(&value))?;
                if k == 0 {
                    return Err(range("k must be at least 1".into()));
                }
            }
            "n" => {
                n = value.parse().map_err(|_| bad(&value))?;
                if n == 0 || n > MAX_BLOCKLENGTH {
                    return Err(range(format!("n must be in 1..={}", MAX_BLOCKLENGTH)));
                }
            }
            "L" | "users" => {
                let u: usize = value.parse().map_err(|_| bad(&value))?;
                if u == 0 || u > MAX_USERS {
                    return Err(range(format!("L must be in 1..={}", MAX_USERS)));
                }
                users = Some(u);
            }
            "trials" => {
                trials = value.parse().map_err(|_| bad(&value))?;
                if trials == 0 {
                    return Err(range("trials must be at least 1".into()));
                }
            }
            "seed" => seed = value.parse().map_err(|_| bad(&value))?,
            "search_radius" => {
                search_radius = value.parse().map_err(|_| bad(&value))?;
                if !(1..=MAX_RADIUS).contains(&search_radius) {
                    return Err(range(format!("search_radius must be in 1..={}", MAX_RADIUS)));
                }
            }
            "output" => output = value,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: line_no,
                    key,
                })
            }
        }
    }

    let experiment = experiment.ok_or(ConfigError::MissingKey { key: "experiment" })?;
    let users = users.unwrap_or(match experiment {
        ExperimentKind::Geteqm3 => 3,
        _ => 2,
    });

    let config = ExperimentConfig {
        experiment,
        snr_db_start,
        snr_db_stop,
        snr_db_step,
        q,
        k,
        n,
        users,
        trials,
        seed,
        search_radius,
        output,
    };
    validate(&config)?;
    Ok(ParsedConfig { config, warnings })
}

fn validate(c: &ExperimentConfig) -> Result<(), ConfigError> {
    if c.snr_grid().is_empty() {
        return Err(ConfigError::Invalid {
            reason: format!(
                "empty SNR grid: start {} > stop {}",
                c.snr_db_start, c.snr_db_stop
            ),
        });
    }
    let codebook = (c.q as u64).saturating_pow(c.k as u32);
    if codebook > MAX_CODEBOOK {
        return Err(ConfigError::Invalid {
            reason: format!("q^k = {} exceeds the {} cap", codebook, MAX_CODEBOOK),
        });
    }
    let needs_lattice = matches!(
        c.experiment,
        ExperimentKind::TwowaySim | ExperimentKind::CfSingle
    );
    if needs_lattice {
        if c.q < 3 {
            return Err(ConfigError::Invalid {
                reason: "lattice experiments need an odd prime q".into(),
            });
        }
        if c.n < c.k + 1 {
            return Err(ConfigError::Invalid {
                reason: format!("n = {} must exceed k = {} for the lattice code", c.n, c.k),
            });
        }
    }
    if c.experiment == ExperimentKind::Geteqm3 && c.users != 3 {
        return Err(ConfigError::Invalid {
            reason: "geteqm3 is the three-transmitter experiment; L must be 3".into(),
        });
    }
    Ok(())
}
