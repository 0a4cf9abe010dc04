//! Optional TOML configuration mirroring the library field names.

use std::fs;
use std::path::{Path, PathBuf};

use hawkes_intraday::simulate::JumpSampler;
use hawkes_intraday::HawkesParams;
use serde::Deserialize;

use crate::args::{ParamArgs, Preset, SamplerKind, SessionArgs};
use crate::error::CliError;
use crate::ingest::{parse_time_of_day, SessionRule};

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_OUT_DIR: &str = "out";
pub const DEFAULT_WINDOW: &str = "9h:1h";

pub const BASE: HawkesParams = HawkesParams {
    mu0: 2.0,
    kappa: 1.0,
    alpha: 5.0,
    beta: 10.0,
    horizon: 8.0,
    mean_j: 0.13,
    mean_j2: 0.066,
    f0: 0.0,
};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub window: Option<String>,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub session: SessionConfig,
    pub sampler: Option<SamplerConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub preset: Option<String>,
    pub mu0: Option<f64>,
    pub kappa: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    #[serde(alias = "T")]
    pub horizon: Option<f64>,
    pub mean_j: Option<f64>,
    pub mean_j2: Option<f64>,
    pub f0: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub delivery_time: Option<String>,
    pub open_time: Option<String>,
    pub open_days_before: Option<i64>,
    pub close_minutes_before: Option<f64>,
}

/// Jump law; omitted parameters are matched to the model moments.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerConfig {
    Lognormal {
        meanlog: Option<f64>,
        sdlog: Option<f64>,
    },
    Exponential {
        mean: Option<f64>,
    },
    Constant {
        value: Option<f64>,
    },
    Empirical {
        samples: Vec<f64>,
    },
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Preset, then config values, then flags.
    pub fn params(&self, flags: &ParamArgs, fallback: Preset) -> Result<HawkesParams, CliError> {
        let preset = match (flags.preset, &self.params.preset) {
            (Some(p), _) => p,
            (None, Some(name)) => <Preset as clap::ValueEnum>::from_str(name, true)
                .map_err(|_| CliError::Usage(format!("unknown preset `{name}`")))?,
            (None, None) => fallback,
        };
        let mut p = match preset {
            Preset::H18 => HawkesParams::FITTED_18H,
            Preset::H19 => HawkesParams::FITTED_19H,
            Preset::H20 => HawkesParams::FITTED_20H,
            Preset::Base => BASE,
        };
        let c = &self.params;
        let layers = [
            (&mut p.mu0, c.mu0, flags.mu0),
            (&mut p.kappa, c.kappa, flags.kappa),
            (&mut p.alpha, c.alpha, flags.alpha),
            (&mut p.beta, c.beta, flags.beta),
            (&mut p.horizon, c.horizon, flags.horizon),
            (&mut p.mean_j, c.mean_j, flags.mean_j),
            (&mut p.mean_j2, c.mean_j2, flags.mean_j2),
            (&mut p.f0, c.f0, flags.f0),
        ];
        for (field, from_config, from_flag) in layers {
            if let Some(v) = from_flag.or(from_config) {
                *field = v;
            }
        }
        Ok(p.validate_allow_poisson()?)
    }

    pub fn sampler(
        &self,
        flag: Option<SamplerKind>,
        params: &HawkesParams,
    ) -> Result<JumpSampler, CliError> {
        let matched_lognormal =
            || JumpSampler::lognormal_from_moments(params.mean_j, params.mean_j2);
        let sampler = match (flag, &self.sampler) {
            (Some(SamplerKind::Lognormal), _) | (None, None) => matched_lognormal()?,
            (Some(SamplerKind::Exponential), _) => JumpSampler::Exponential {
                mean: params.mean_j,
            }
            .checked()?,
            (Some(SamplerKind::Constant), _) => JumpSampler::Constant {
                value: params.mean_j,
            }
            .checked()?,
            (None, Some(cfg)) => match cfg.clone() {
                SamplerConfig::Lognormal {
                    meanlog: Some(meanlog),
                    sdlog: Some(sdlog),
                } => JumpSampler::LogNormal { meanlog, sdlog }.checked()?,
                SamplerConfig::Lognormal { .. } => matched_lognormal()?,
                SamplerConfig::Exponential { mean } => JumpSampler::Exponential {
                    mean: mean.unwrap_or(params.mean_j),
                }
                .checked()?,
                SamplerConfig::Constant { value } => JumpSampler::Constant {
                    value: value.unwrap_or(params.mean_j),
                }
                .checked()?,
                SamplerConfig::Empirical { samples } => JumpSampler::empirical(samples)?,
            },
        };
        Ok(sampler)
    }

    pub fn session_rule(&self, flags: &SessionArgs) -> Result<SessionRule, CliError> {
        let mut rule = SessionRule::default();
        let s = &self.session;
        if let Some(t) = flags
            .delivery_time
            .as_deref()
            .or(s.delivery_time.as_deref())
        {
            rule.delivery_time_ms = parse_time_of_day(t)?;
        }
        if let Some(t) = flags.open_time.as_deref().or(s.open_time.as_deref()) {
            rule.open_time_ms = parse_time_of_day(t)?;
        }
        if let Some(d) = s.open_days_before {
            rule.open_days_before = d;
        }
        if let Some(m) = s.close_minutes_before {
            rule.close_minutes_before = m;
        }
        Ok(rule)
    }
}

/// Parses a duration such as `9h`, `30m`, `90s` or a bare number of hours.
fn parse_hours(s: &str) -> Option<f64> {
    let s = s.trim();
    let (num, scale) = if let Some(v) = s.strip_suffix('h') {
        (v, 1.0)
    } else if let Some(v) = s.strip_suffix('m') {
        (v, 1.0 / 60.0)
    } else if let Some(v) = s.strip_suffix('s') {
        (v, 1.0 / 3600.0)
    } else {
        (s, 1.0)
    };
    num.trim().parse::<f64>().ok().map(|x| x * scale)
}

/// `(start, end)` in hours before delivery.
pub fn parse_window(s: &str) -> Result<(f64, f64), CliError> {
    let bad = || {
        CliError::Usage(format!(
            "window `{s}` is not `<start>:<end>` such as `9h:1h`"
        ))
    };
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let (start, end) = (
        parse_hours(a).ok_or_else(bad)?,
        parse_hours(b).ok_or_else(bad)?,
    );
    if !(start > end && end >= 0.0) {
        return Err(CliError::Usage(format!(
            "window `{s}` must start before it ends"
        )));
    }
    Ok((start, end))
}
