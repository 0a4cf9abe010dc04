//! Table and report files. Floats are written in shortest round-trip form.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use hawkes_intraday::empirics::GridSeries;
use hawkes_intraday::{CurveTable, EventStream, MarkedEvent, Sign};
use serde::Serialize;

use crate::error::CliError;

const HORIZON_KEY: &str = "# horizon_hours=";

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(path).map_err(|e| CliError::io(path, e))?;
        Ok(OutDir(path.to_path_buf()))
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    fn write(&self, name: &str, body: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.file(name);
        let mut f = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        f.write_all(body).map_err(|e| CliError::io(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    /// `x,value[,stderr]`; undefined points are written as `NaN`.
    pub fn curve(&self, name: &str, table: &CurveTable) -> Result<PathBuf, CliError> {
        let mut out = String::from(if table.stderr.is_some() {
            "x,value,stderr\n"
        } else {
            "x,value\n"
        });
        for (k, (x, y)) in table.points().enumerate() {
            match &table.stderr {
                Some(se) => out.push_str(&format!("{x},{y},{}\n", se[k])),
                None => out.push_str(&format!("{x},{y}\n")),
            }
        }
        self.write(name, out.as_bytes())
    }

    /// `t_hours,sign,mark` preceded by a `# horizon_hours=` line.
    pub fn events(&self, name: &str, stream: &EventStream) -> Result<PathBuf, CliError> {
        let mut out = format!("{HORIZON_KEY}{}\nt_hours,sign,mark\n", stream.horizon);
        for e in stream.events() {
            out.push_str(&format!("{},{},{}\n", e.t, e.sign.symbol(), e.mark));
        }
        self.write(name, out.as_bytes())
    }

    /// `timestamp_ms,price`, one row per grid point; re-ingestible as ticks.
    pub fn grid(&self, name: &str, series: &GridSeries) -> Result<PathBuf, CliError> {
        let mut out = String::from("timestamp_ms,price\n");
        let step_ms = series.step_seconds * 1000.0;
        for (k, v) in series.values.iter().enumerate() {
            let ts = series.t0_ms + (k as f64 * step_ms).round() as i64;
            out.push_str(&format!("{ts},{v}\n"));
        }
        self.write(name, out.as_bytes())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut body =
            serde_json::to_vec_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
        body.push(b'\n');
        self.write(name, &body)
    }

    pub fn text(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        self.write(name, body.as_bytes())
    }
}

pub fn read_events(path: &Path) -> Result<EventStream, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let parse_err = |line: usize, message: String| CliError::Parse {
        path: path.display().to_string(),
        line,
        message,
    };
    let first = text.lines().next().unwrap_or_default();
    let horizon: f64 = first
        .strip_prefix(HORIZON_KEY)
        .and_then(|h| h.trim().parse().ok())
        .ok_or_else(|| parse_err(1, format!("expected `{HORIZON_KEY}<hours>`")))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut events = Vec::new();
    for (k, row) in reader.records().enumerate() {
        let line = k + 3;
        let row = row.map_err(|e| parse_err(line, e.to_string()))?;
        let field = |i: usize| row.get(i).unwrap_or_default();
        let t: f64 = field(0)
            .parse()
            .map_err(|_| parse_err(line, format!("bad time `{}`", field(0))))?;
        let sign = Sign::parse(field(1))
            .ok_or_else(|| parse_err(line, format!("bad sign `{}`", field(1))))?;
        let mark: f64 = field(2)
            .parse()
            .map_err(|_| parse_err(line, format!("bad mark `{}`", field(2))))?;
        events.push(MarkedEvent::new(t, sign, mark));
    }
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    EventStream::new(label, horizon, events)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Expands a glob into a sorted, nonempty list of files.
pub fn expand(pattern: &str) -> Result<Vec<PathBuf>, CliError> {
    let paths = glob::glob(pattern)
        .map_err(|e| CliError::Usage(format!("bad pattern `{pattern}`: {e}")))?;
    let mut files: Vec<PathBuf> = paths
        .filter_map(Result::ok)
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Data(format!("no files match `{pattern}`")));
    }
    Ok(files)
}
