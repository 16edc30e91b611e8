//! Experiment spec files: one `key = value` pair per line, `#` starts a
//! comment, lists are comma separated.
//!
//! ```text
//! kind = ber_run
//! seed = 7
//! mode = mdpsm
//! n_t1 = 4
//! n_t2 = 4
//! n_r = 4
//! scheme1 = QPSK
//! scheme2 = QPSK
//! theta = 33
//! snr_db = 0, 5, 10, 15, 20
//! ```

use std::collections::BTreeMap;
use std::str::FromStr;

use mdpsm_core::angle_optimizer::AngleGrid;
use mdpsm_core::detector::ComplexityConfig;
use mdpsm_core::harness::{DetectorKind, StopRule};
use mdpsm_core::{Scheme, SystemConfig};

use crate::error::CliError;

/// Every key the parser accepts, across all kinds.
pub const KNOWN_KEYS: &[&str] = &[
    "kind",
    "seed",
    "output",
    "mode",
    "n_t",
    "n_t1",
    "n_t2",
    "n_r",
    "scheme",
    "scheme1",
    "scheme2",
    "theta",
    "theta_start",
    "theta_stop",
    "theta_step",
    "thetas",
    "snr_db",
    "snr_start",
    "snr_stop",
    "snr_step",
    "min_errors",
    "max_uses",
    "target_ber",
    "detector",
    "coherence_uses",
    "trials",
    "pilot_target",
    "pilot_trials",
    "rows",
    "draws",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    AngleSweep,
    BerRun,
    BerVsTheta,
    ComplexityReport,
    ChannelStats,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::AngleSweep => "angle_sweep",
            Kind::BerRun => "ber_run",
            Kind::BerVsTheta => "ber_vs_theta",
            Kind::ComplexityReport => "complexity_report",
            Kind::ChannelStats => "channel_stats",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Kind::BerRun | Kind::BerVsTheta | Kind::ChannelStats)
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "angle_sweep" => Kind::AngleSweep,
            "ber_run" => Kind::BerRun,
            "ber_vs_theta" => Kind::BerVsTheta,
            "complexity_report" => Kind::ComplexityReport,
            "channel_stats" => Kind::ChannelStats,
            _ => {
                return Err(format!(
                    "unknown kind `{s}` (expected angle_sweep, ber_run, ber_vs_theta, complexity_report or channel_stats)"
                ))
            }
        })
    }
}

/// SNR used by an angle refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefineSnr {
    Fixed(f64),
    /// Chosen by a pilot run of the PSM baseline.
    Pilot { target_ber: f64, trials: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    AngleSweep { scheme1: Scheme, scheme2: Scheme, grid: AngleGrid },
    BerRun {
        config: SystemConfig,
        snr_db: Vec<f64>,
        stop: StopRule,
        target_ber: f64,
        detector: DetectorKind,
        coherence_uses: u64,
    },
    BerVsTheta { config: SystemConfig, thetas: Vec<f64>, snr: RefineSnr, trials: u64 },
    ComplexityReport { rows: Vec<ComplexityConfig> },
    ChannelStats { n_t: usize, n_r: usize, draws: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: Kind,
    pub experiment: Experiment,
    pub seed: Option<u64>,
    /// File stem for the artifacts.
    pub output: String,
}

struct Entry {
    line: usize,
    value: String,
}

struct Fields {
    map: BTreeMap<String, Entry>,
}

impl Fields {
    fn parse(text: &str) -> Result<Self, CliError> {
        let mut map: BTreeMap<String, Entry> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(CliError::spec(line, format!("expected `key = value`, found `{body}`")));
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(CliError::spec(line, "empty key"));
            }
            if !KNOWN_KEYS.contains(&k) {
                return Err(CliError::spec(line, format!("unknown key `{k}`")));
            }
            if v.is_empty() {
                return Err(CliError::spec(line, format!("`{k}` has no value")));
            }
            if let Some(prev) = map.get(k) {
                return Err(CliError::spec(line, format!("`{k}` already set on line {}", prev.line)));
            }
            map.insert(k.to_string(), Entry { line, value: v.to_string() });
        }
        Ok(Self { map })
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn raw(&self, key: &str) -> Result<&Entry, CliError> {
        self.map.get(key).ok_or_else(|| CliError::MissingField(key.to_string()))
    }

    fn get<T: FromStr>(&self, key: &str, what: &str) -> Result<T, CliError> {
        let e = self.raw(key)?;
        e.value
            .parse()
            .map_err(|_| CliError::spec(e.line, format!("`{key}` must be {what}, found `{}`", e.value)))
    }

    fn get_or<T: FromStr>(&self, key: &str, what: &str, default: T) -> Result<T, CliError> {
        if self.has(key) {
            self.get(key, what)
        } else {
            Ok(default)
        }
    }

    fn list_f64(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let e = self.raw(key)?;
        e.value
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::spec(e.line, format!("`{key}` holds a non-numeric entry `{}`", s.trim())))
            })
            .collect()
    }

    fn scheme(&self, key: &str) -> Result<Scheme, CliError> {
        let e = self.raw(key)?;
        e.value.parse().map_err(|err: mdpsm_core::Error| CliError::spec(e.line, err.to_string()))
    }

    fn line_of(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |e| e.line)
    }

    /// A list given directly under `list_key`, or as a start/stop/step range.
    fn grid(&self, list_key: &str, prefix: &str) -> Result<Vec<f64>, CliError> {
        if self.has(list_key) {
            return self.list_f64(list_key);
        }
        let start: f64 = self.get(&format!("{prefix}_start"), "a number")?;
        let stop: f64 = self.get(&format!("{prefix}_stop"), "a number")?;
        let step_key = format!("{prefix}_step");
        let step: f64 = self.get(&step_key, "a number")?;
        if !(step > 0.0) || stop < start {
            return Err(CliError::spec(self.line_of(&step_key), format!("`{prefix}` range is empty")));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect())
    }
}

fn system_config(f: &Fields) -> Result<SystemConfig, CliError> {
    let mode: String = f.get("mode", "`psm` or `mdpsm`")?;
    let pos = "a positive integer";
    let config = match mode.as_str() {
        "psm" => SystemConfig::psm(f.get("n_t", pos)?, f.get("n_r", pos)?, f.scheme("scheme")?),
        "mdpsm" => SystemConfig::mdpsm(
            f.get("n_t1", pos)?,
            f.get("n_t2", pos)?,
            f.get("n_r", pos)?,
            f.scheme("scheme1")?,
            f.scheme("scheme2")?,
            f.get("theta", "an angle in degrees")?,
        ),
        other => return Err(CliError::spec(f.line_of("mode"), format!("`mode` must be psm or mdpsm, found `{other}`"))),
    };
    config
        .validate()
        .map_err(|e| CliError::spec(f.line_of("n_r"), e.to_string()))?;
    Ok(config)
}

/// Parses `psm:4:4:6` or `mdpsm:4:4:4:2:2`.
fn complexity_row(s: &str) -> Option<ComplexityConfig> {
    let mut parts = s.trim().split(':');
    let mode = parts.next()?.trim().to_ascii_lowercase();
    let nums: Vec<u32> = parts.map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
    match (mode.as_str(), nums.as_slice()) {
        ("psm", &[n_t, n_r, q]) if n_r.is_power_of_two() && n_r >= 2 => {
            Some(ComplexityConfig::Psm { n_t: n_t as usize, n_r: n_r as usize, q })
        }
        ("mdpsm", &[n_t1, n_t2, n_r, q1, q2]) if n_r.is_power_of_two() && n_r >= 2 => Some(ComplexityConfig::MdPsm {
            n_t1: n_t1 as usize,
            n_t2: n_t2 as usize,
            n_r: n_r as usize,
            q1,
            q2,
        }),
        _ => None,
    }
}

pub fn parse_spec(text: &str) -> Result<ExperimentSpec, CliError> {
    let f = Fields::parse(text)?;
    let kind: Kind = {
        let e = f.raw("kind")?;
        e.value.parse().map_err(|m| CliError::spec(e.line, m))?
    };
    let seed = if f.has("seed") { Some(f.get("seed", "a non-negative integer")?) } else { None };
    let output = f.get_or("output", "a file stem", kind.name().to_string())?;
    if output.contains('/') || output.contains('\\') {
        return Err(CliError::spec(f.line_of("output"), "`output` must be a bare file stem"));
    }

    let experiment = match kind {
        Kind::AngleSweep => {
            let (scheme1, scheme2) = (f.scheme("scheme1")?, f.scheme("scheme2")?);
            let default = AngleGrid::default_for(
                &mdpsm_core::Constellation::new(scheme1),
                &mdpsm_core::Constellation::new(scheme2),
            );
            let grid = AngleGrid::new(
                f.get_or("theta_start", "a number", default.start_deg)?,
                f.get_or("theta_stop", "a number", default.stop_deg)?,
                f.get_or("theta_step", "a number", default.step_deg)?,
            );
            grid.thetas().map_err(|e| CliError::spec(f.line_of("theta_step"), e.to_string()))?;
            Experiment::AngleSweep { scheme1, scheme2, grid }
        }
        Kind::BerRun => {
            let config = system_config(&f)?;
            let default = StopRule::default();
            let stop = StopRule {
                min_bit_errors: f.get_or("min_errors", "a non-negative integer", default.min_bit_errors)?,
                max_channel_uses: f.get_or("max_uses", "a positive integer", default.max_channel_uses)?,
            };
            if stop.max_channel_uses == 0 {
                return Err(CliError::spec(f.line_of("max_uses"), "`max_uses` must be positive"));
            }
            let detector = match f.get_or("detector", "`fast` or `joint`", "fast".to_string())?.as_str() {
                "fast" => DetectorKind::Fast,
                "joint" => DetectorKind::Joint,
                other => {
                    return Err(CliError::spec(f.line_of("detector"), format!("`detector` must be fast or joint, found `{other}`")))
                }
            };
            let coherence_uses: u64 = f.get_or("coherence_uses", "a positive integer", 1)?;
            if coherence_uses == 0 {
                return Err(CliError::spec(f.line_of("coherence_uses"), "`coherence_uses` must be positive"));
            }
            Experiment::BerRun {
                config,
                snr_db: f.grid("snr_db", "snr")?,
                stop,
                target_ber: f.get_or("target_ber", "a probability", 1e-4)?,
                detector,
                coherence_uses,
            }
        }
        Kind::BerVsTheta => {
            let config = system_config(&f)?;
            if !matches!(config, SystemConfig::MdPsm(_)) {
                return Err(CliError::spec(f.line_of("mode"), "ber_vs_theta needs `mode = mdpsm`"));
            }
            let snr = if f.has("snr_db") {
                let e = f.raw("snr_db")?;
                if e.value == "pilot" {
                    None
                } else {
                    Some(f.get::<f64>("snr_db", "a number or `pilot`")?)
                }
            } else {
                None
            };
            let snr = match snr {
                Some(v) => RefineSnr::Fixed(v),
                None => RefineSnr::Pilot {
                    target_ber: f.get_or("pilot_target", "a probability", 1e-3)?,
                    trials: f.get_or("pilot_trials", "a positive integer", 200_000)?,
                },
            };
            let trials: u64 = f.get("trials", "a positive integer")?;
            if trials < 10_000 {
                return Err(CliError::spec(f.line_of("trials"), "`trials` must be at least 10000 channel uses"));
            }
            Experiment::BerVsTheta { config, thetas: f.grid("thetas", "theta")?, snr, trials }
        }
        Kind::ComplexityReport => {
            let e = f.raw("rows")?;
            let rows = e
                .value
                .split(',')
                .map(|r| {
                    complexity_row(r).ok_or_else(|| {
                        CliError::spec(e.line, format!("`rows` entry `{}` is not psm:n_t:n_r:q or mdpsm:n_t1:n_t2:n_r:q1:q2", r.trim()))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Experiment::ComplexityReport { rows }
        }
        Kind::ChannelStats => {
            let pos = "a positive integer";
            let (n_t, n_r): (usize, usize) = (f.get("n_t", pos)?, f.get("n_r", pos)?);
            if n_r == 0 || n_t < n_r {
                return Err(CliError::spec(f.line_of("n_t"), "channel_stats needs n_t >= n_r >= 1"));
            }
            let draws: usize = f.get_or("draws", pos, 100_000)?;
            if draws == 0 {
                return Err(CliError::spec(f.line_of("draws"), "`draws` must be positive"));
            }
            Experiment::ChannelStats { n_t, n_r, draws }
        }
    };
    Ok(ExperimentSpec { kind, experiment, seed, output })
}
