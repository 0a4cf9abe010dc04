//! Tick files to one-second price grids.

use std::path::Path;

use hawkes_intraday::empirics::GridSeries;
use serde::Deserialize;

use crate::error::CliError;

const DAY_MS: i64 = 86_400_000;
const HOUR_MS: f64 = 3_600_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct TickRecord {
    pub timestamp_ms: i64,
    pub price: f64,
    #[serde(default)]
    pub volume: Option<f64>,
}

/// Trading session of one delivery product, in epoch milliseconds UTC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionSpec {
    pub delivery_start_ms: i64,
    pub open_ms: i64,
    pub close_ms: i64,
}

impl SessionSpec {
    /// Seconds from the session open to `hours_before` delivery.
    pub fn offset_seconds(&self, hours_before: f64) -> f64 {
        (self.delivery_start_ms as f64 - hours_before * HOUR_MS - self.open_ms as f64) / 1000.0
    }
}

/// How sessions are placed around the ticks of a file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionRule {
    /// Delivery start as milliseconds after midnight UTC.
    pub delivery_time_ms: i64,
    /// Session open as milliseconds after midnight UTC.
    pub open_time_ms: i64,
    pub open_days_before: i64,
    pub close_minutes_before: f64,
}

impl Default for SessionRule {
    fn default() -> Self {
        SessionRule {
            delivery_time_ms: 18 * 3_600_000,
            open_time_ms: 15 * 3_600_000,
            open_days_before: 1,
            close_minutes_before: 5.0,
        }
    }
}

impl SessionRule {
    fn close_gap_ms(&self) -> i64 {
        (self.close_minutes_before * 60_000.0).round() as i64
    }

    /// The first delivery at the configured time of day whose trading
    /// session is still open at `last_tick_ms`.
    pub fn resolve(&self, last_tick_ms: i64) -> SessionSpec {
        let day = last_tick_ms.div_euclid(DAY_MS) * DAY_MS;
        let mut delivery = day + self.delivery_time_ms;
        if delivery - self.close_gap_ms() < last_tick_ms {
            delivery += DAY_MS;
        }
        let open = delivery.div_euclid(DAY_MS) * DAY_MS - self.open_days_before * DAY_MS
            + self.open_time_ms;
        SessionSpec {
            delivery_start_ms: delivery,
            open_ms: open,
            close_ms: delivery - self.close_gap_ms(),
        }
    }
}

/// Parses `HH:MM` into milliseconds after midnight.
pub fn parse_time_of_day(s: &str) -> Result<i64, CliError> {
    let bad = || CliError::Usage(format!("time of day `{s}` is not HH:MM"));
    let (h, m) = s.split_once(':').ok_or_else(bad)?;
    let (h, m): (i64, i64) = (
        h.trim().parse().map_err(|_| bad())?,
        m.trim().parse().map_err(|_| bad())?,
    );
    if !(0..24).contains(&h) || !(0..60).contains(&m) {
        return Err(bad());
    }
    Ok((h * 60 + m) * 60_000)
}

pub fn read_ticks(path: &Path) -> Result<Vec<TickRecord>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let mut ticks = Vec::new();
    for (k, row) in reader.deserialize::<TickRecord>().enumerate() {
        // header is line 1
        let line = k + 2;
        let tick = row.map_err(|e| CliError::Parse {
            path: path.display().to_string(),
            line,
            message: e.to_string(),
        })?;
        let problem = if !tick.price.is_finite() {
            Some("price is not finite")
        } else if tick.volume.is_some_and(|v| !(v >= 0.0 && v.is_finite())) {
            Some("volume must be a non-negative number")
        } else if ticks
            .last()
            .is_some_and(|p: &TickRecord| p.timestamp_ms > tick.timestamp_ms)
        {
            Some("timestamps decrease")
        } else {
            None
        };
        if let Some(message) = problem {
            return Err(CliError::Parse {
                path: path.display().to_string(),
                line,
                message: message.into(),
            });
        }
        ticks.push(tick);
    }
    Ok(ticks)
}

/// One-second grid over `[open, close]`: each second holds the
/// volume-weighted mean price of its ticks, empty seconds carry the last
/// value forward and seconds before the first trade take its price.
pub fn build_grid(
    ticks: &[TickRecord],
    spec: &SessionSpec,
    label: &str,
) -> Result<GridSeries, CliError> {
    let seconds = ((spec.close_ms - spec.open_ms) / 1000).max(0) as usize;
    let mut sums = vec![(0.0f64, 0.0f64); seconds + 1];
    let mut outside = 0usize;
    for t in ticks {
        let offset = t.timestamp_ms - spec.open_ms;
        if offset < 0 || t.timestamp_ms > spec.close_ms {
            outside += 1;
            continue;
        }
        let k = (offset / 1000) as usize;
        let w = t.volume.unwrap_or(1.0);
        sums[k].0 += w * t.price;
        sums[k].1 += w;
    }
    if outside > 0 {
        log::warn!("{label}: {outside} ticks outside the session were ignored");
    }
    let first = sums
        .iter()
        .find(|s| s.1 > 0.0)
        .map(|s| s.0 / s.1)
        .ok_or_else(|| CliError::EmptySession(label.to_string()))?;
    let mut level = first;
    let values = sums
        .iter()
        .map(|&(pw, w)| {
            if w > 0.0 {
                level = pw / w;
            }
            level
        })
        .collect();
    GridSeries::new(spec.open_ms, 1.0, values, label).map_err(|e| CliError::Data(e.to_string()))
}

pub fn ingest(path: &Path, rule: &SessionRule) -> Result<(GridSeries, SessionSpec), CliError> {
    let ticks = read_ticks(path)?;
    let last = ticks
        .last()
        .ok_or_else(|| CliError::EmptySession(path.display().to_string()))?;
    let spec = rule.resolve(last.timestamp_ms);
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok((build_grid(&ticks, &spec, &label)?, spec))
}
