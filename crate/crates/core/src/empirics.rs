//! Model-free estimators on price grids and event streams.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::snapped_floor;
use crate::curve::{CurveError, CurveTable, MeanVar};
use crate::model::{EventStream, SECONDS_PER_HOUR};
use crate::simulate::realized_signature;

/// Default Epanechnikov bandwidth, in seconds.
pub const DEFAULT_BANDWIDTH_SECONDS: f64 = 300.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmpiricsError {
    #[error("bad window: {0}")]
    BadWindow(String),
    #[error("evaluation grid is empty")]
    EmptyGrid,
    #[error("not enough data: {0}")]
    DegenerateData(String),
    #[error("cumulative intensity decreases at index {0}")]
    NonMonotoneIntensity(usize),
    #[error("invalid grid series: {0}")]
    BadSeries(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Prices on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSeries {
    /// Absolute time of the first value, epoch milliseconds.
    pub t0_ms: i64,
    pub step_seconds: f64,
    pub values: Vec<f64>,
    pub label: String,
}

impl GridSeries {
    pub fn new(
        t0_ms: i64,
        step_seconds: f64,
        values: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self, EmpiricsError> {
        if !(step_seconds > 0.0 && step_seconds.is_finite()) {
            return Err(EmpiricsError::BadSeries(format!("step {step_seconds}")));
        }
        if values.is_empty() {
            return Err(EmpiricsError::BadSeries("no values".into()));
        }
        Ok(GridSeries {
            t0_ms,
            step_seconds,
            values,
            label: label.into(),
        })
    }

    /// Seconds between the first and last grid point.
    pub fn span_seconds(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step_seconds
    }

    /// Last value at or before `offset_seconds` after the first point.
    pub fn value_at_offset(&self, offset_seconds: f64) -> f64 {
        let k = snapped_floor((offset_seconds / self.step_seconds).max(0.0)) as usize;
        self.values[k.min(self.values.len() - 1)]
    }

    /// Number of grid steps in `seconds`, if it is a whole multiple.
    fn steps_in(&self, seconds: f64) -> Option<usize> {
        let x = seconds / self.step_seconds;
        let k = x.round();
        ((x - k).abs() <= 1e-9 * x.max(1.0) && k >= 1.0).then_some(k as usize)
    }
}

/// Outcome of a Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub m: Option<usize>,
    pub rejected_at_95: bool,
}

impl TestResult {
    fn new(statistic: f64, p_value: f64, n: usize, m: Option<usize>) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        TestResult {
            statistic,
            p_value,
            n,
            m,
            rejected_at_95: p_value < 0.05,
        }
    }
}

/// Realized signature plot `Ĉ(t, δ) = (1/t) Σ_{i ≤ ⌊t/δ⌋} (f_{iδ} − f_{(i−1)δ})²`
/// of a grid series, per hour. `t` and every `δ` are in seconds and each
/// `δ` must be a whole number of grid steps. The abscissa of the result is
/// `δ` in seconds.
pub fn empirical_signature_plot(
    series: &GridSeries,
    t_seconds: f64,
    deltas_seconds: &[f64],
) -> Result<CurveTable, EmpiricsError> {
    if !(t_seconds > 0.0) || t_seconds > series.span_seconds() * (1.0 + 1e-12) {
        return Err(EmpiricsError::BadWindow(format!(
            "t={t_seconds}s outside the series span {}s",
            series.span_seconds()
        )));
    }
    let t_hours = t_seconds / SECONDS_PER_HOUR;
    let mut values = Vec::with_capacity(deltas_seconds.len());
    for &delta in deltas_seconds {
        if delta > t_seconds * (1.0 + 1e-12) {
            return Err(EmpiricsError::BadWindow(format!(
                "delta={delta}s exceeds t={t_seconds}s"
            )));
        }
        let lag = series.steps_in(delta).ok_or_else(|| {
            EmpiricsError::BadWindow(format!(
                "delta={delta}s is not a multiple of the {}s grid step",
                series.step_seconds
            ))
        })?;
        let n = snapped_floor(t_seconds / delta) as usize;
        let v = &series.values;
        let sum: f64 = (1..=n)
            .map(|i| {
                let d = v[i * lag] - v[(i - 1) * lag];
                d * d
            })
            .sum();
        values.push(sum / t_hours);
    }
    Ok(CurveTable::new(
        format!("signature_plot_{}", series.label),
        deltas_seconds.to_vec(),
        values,
    )?)
}

/// Realized signature plot of an event stream's price path; `t` and `δ` in
/// hours.
pub fn stream_signature_plot(
    stream: &EventStream,
    t: f64,
    deltas: &[f64],
) -> Result<CurveTable, EmpiricsError> {
    if !(t > 0.0 && t <= stream.horizon * (1.0 + 1e-12)) {
        return Err(EmpiricsError::BadWindow(format!(
            "t={t} outside (0, {}]",
            stream.horizon
        )));
    }
    if let Some(d) = deltas
        .iter()
        .find(|&&d| !(d > 0.0 && d <= t * (1.0 + 1e-12)))
    {
        return Err(EmpiricsError::BadWindow(format!(
            "delta={d} not in (0, {t}]"
        )));
    }
    let values = deltas
        .iter()
        .map(|&d| realized_signature(stream, t, d))
        .collect();
    Ok(CurveTable::new(
        format!("signature_plot_{}", stream.session_id),
        deltas.to_vec(),
        values,
    )?)
}

fn epanechnikov(u: f64) -> f64 {
    if u.abs() <= 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// `∫_{-1}^{x} K(u) du` for the Epanechnikov kernel.
fn epanechnikov_cdf(x: f64) -> f64 {
    let x = x.clamp(-1.0, 1.0);
    0.75 * (x - x * x * x / 3.0) + 0.5
}

/// Boundary-corrected kernel estimate of an event intensity (events per
/// hour): `Σ K_h(t − τ) / ∫₀ᵀ K_h(t − s) ds` with the Epanechnikov kernel.
///
/// `times` and `t_grid` are in hours; `times` must be sorted.
pub fn kernel_intensity(
    times: &[f64],
    horizon: f64,
    bandwidth_seconds: f64,
    t_grid: &[f64],
) -> Result<CurveTable, EmpiricsError> {
    if t_grid.is_empty() {
        return Err(EmpiricsError::EmptyGrid);
    }
    if !(bandwidth_seconds > 0.0) {
        return Err(EmpiricsError::BadWindow(format!(
            "bandwidth {bandwidth_seconds}s"
        )));
    }
    if let Some(t) = t_grid.iter().find(|&&t| !(0.0..=horizon).contains(&t)) {
        return Err(EmpiricsError::BadWindow(format!(
            "grid point {t} outside [0, {horizon}]"
        )));
    }
    let h = bandwidth_seconds / SECONDS_PER_HOUR;
    let values = t_grid
        .iter()
        .map(|&t| {
            let lo = times.partition_point(|&s| s < t - h);
            let hi = times.partition_point(|&s| s <= t + h);
            let num: f64 = times[lo..hi]
                .iter()
                .map(|&s| epanechnikov((t - s) / h) / h)
                .sum();
            let mass = epanechnikov_cdf(t / h) - epanechnikov_cdf((t - horizon) / h);
            num / mass
        })
        .collect();
    Ok(CurveTable::new(
        "kernel_intensity",
        t_grid.to_vec(),
        values,
    )?)
}

/// Number of events with time `≤ t` at each grid point.
pub fn cumulative_counts(
    stream: &EventStream,
    t_grid: &[f64],
) -> Result<CurveTable, EmpiricsError> {
    let events = stream.events();
    let values = t_grid
        .iter()
        .map(|&t| events.partition_point(|e| e.t <= t) as f64)
        .collect();
    Ok(CurveTable::new(
        format!("cumulative_counts_{}", stream.session_id),
        t_grid.to_vec(),
        values,
    )?)
}

/// Cross-session average of cumulative counts, the estimate of the
/// cumulative intensity used by the time-change diagnostic.
pub fn average_cumulative_counts(
    streams: &[EventStream],
    t_grid: &[f64],
) -> Result<CurveTable, EmpiricsError> {
    if streams.is_empty() {
        return Err(EmpiricsError::DegenerateData("no sessions".into()));
    }
    let curves = streams
        .iter()
        .map(|s| cumulative_counts(s, t_grid))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CurveTable::average("mean_cumulative_counts", &curves)?)
}

/// Time-changed inter-arrival times and their Exp(1) Q-Q pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeChangeResiduals {
    pub residuals: Vec<f64>,
    /// Abscissa: Exp(1) quantiles at `(i − 0.5)/n`; values: sorted residuals.
    pub qq: CurveTable,
}

/// `Λ(τᵢ) − Λ(τᵢ₋₁)` with `τ₀ = 0`, where `Λ` is the estimated cumulative
/// intensity interpolated linearly between its grid points.
pub fn time_change_residuals(
    event_times: &[f64],
    cum_intensity: &CurveTable,
) -> Result<TimeChangeResiduals, EmpiricsError> {
    if let Some(i) = cum_intensity.values.windows(2).position(|w| w[1] < w[0]) {
        return Err(EmpiricsError::NonMonotoneIntensity(i + 1));
    }
    if cum_intensity.is_empty() {
        return Err(EmpiricsError::EmptyGrid);
    }
    let lambda = |t: f64| {
        if t <= 0.0 && cum_intensity.abscissa[0] > 0.0 {
            0.0
        } else {
            cum_intensity.interpolate(t)
        }
    };
    let mut prev = lambda(0.0);
    let residuals: Vec<f64> = event_times
        .iter()
        .map(|&t| {
            let cur = lambda(t);
            let r = cur - prev;
            prev = cur;
            r
        })
        .collect();
    let n = residuals.len();
    let mut sorted = residuals.clone();
    sorted.sort_by(f64::total_cmp);
    let theoretical = (1..=n)
        .map(|i| -(-(i as f64 - 0.5) / n as f64).ln_1p())
        .collect();
    Ok(TimeChangeResiduals {
        residuals,
        qq: CurveTable::new("qq_exponential", theoretical, sorted)?,
    })
}

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if !(x > 0.0) {
        return 1.0;
    }
    if x < 1.18 {
        // Theta-function form converges fast for small x.
        let mut cdf = 0.0;
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
        for k in 1..100 {
            let odd = (2 * k - 1) as f64;
            let term = (-odd * odd * c).exp();
            cdf += term;
            if term < 1e-17 {
                break;
            }
        }
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / x * cdf;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for k in 1..100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * x * x).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-12 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

fn finite_sorted(sample: &[f64]) -> Result<Vec<f64>, EmpiricsError> {
    if sample.is_empty() {
        return Err(EmpiricsError::DegenerateData("empty sample".into()));
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(EmpiricsError::DegenerateData("sample contains NaN".into()));
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF, with the
/// asymptotic p-value `Q(√n D)`.
pub fn ks_test_one_sample(
    sample: &[f64],
    cdf: impl Fn(f64) -> f64,
) -> Result<TestResult, EmpiricsError> {
    let xs = finite_sorted(sample)?;
    let n = xs.len();
    let nf = n as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / nf - f).max(f - i as f64 / nf)
        })
        .fold(0.0, f64::max);
    Ok(TestResult::new(
        d,
        kolmogorov_survival(nf.sqrt() * d),
        n,
        None,
    ))
}

/// One-sample test of time-changed residuals against Exp(1).
pub fn ks_test_exponential(residuals: &[f64]) -> Result<TestResult, EmpiricsError> {
    ks_test_one_sample(residuals, |x| if x <= 0.0 { 0.0 } else { -(-x).exp_m1() })
}

/// Two-sample Kolmogorov-Smirnov test with effective size `nm/(n+m)`.
pub fn ks_test_two_sample(xs: &[f64], ys: &[f64]) -> Result<TestResult, EmpiricsError> {
    let a = finite_sorted(xs)?;
    let b = finite_sorted(ys)?;
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = (n as f64 * m as f64 / (n + m) as f64).sqrt();
    Ok(TestResult::new(d, kolmogorov_survival(en * d), n, Some(m)))
}

/// Mean and standard deviation of jump sizes against the cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpProfile {
    pub mean: CurveTable,
    pub sd: CurveTable,
    pub count: CurveTable,
}

/// Pooled mean and standard deviation of jump sizes that occur at most `x`
/// hours before maturity, for each cutoff `x`. Streams end
/// `maturity_gap_hours` before maturity. Cutoffs with no jump are NaN.
pub fn jump_moment_profile(
    sessions: &[EventStream],
    maturity_gap_hours: f64,
    cutoffs_hours: &[f64],
) -> Result<JumpProfile, EmpiricsError> {
    let mut mean = Vec::with_capacity(cutoffs_hours.len());
    let mut sd = Vec::with_capacity(cutoffs_hours.len());
    let mut count = Vec::with_capacity(cutoffs_hours.len());
    for &cut in cutoffs_hours {
        let acc: MeanVar = sessions
            .iter()
            .flat_map(|s| {
                s.events()
                    .iter()
                    .filter(move |e| s.horizon - e.t + maturity_gap_hours <= cut)
                    .map(|e| e.mark)
            })
            .collect();
        count.push(acc.count() as f64);
        mean.push(acc.mean());
        sd.push(match acc.count() {
            0 => f64::NAN,
            1 => 0.0,
            _ => acc.std_dev(),
        });
    }
    Ok(JumpProfile {
        mean: CurveTable::new("jump_mean_vs_cutoff", cutoffs_hours.to_vec(), mean)?,
        sd: CurveTable::new("jump_sd_vs_cutoff", cutoffs_hours.to_vec(), sd)?,
        count: CurveTable::new("jump_count_vs_cutoff", cutoffs_hours.to_vec(), count)?,
    })
}

/// Realized correlation `Σ ΔaΔb / √(Σ Δa² Σ Δb²)` of two series sampled
/// every `δ` seconds on their common span. Zero variance gives NaN.
pub fn epps_correlation(
    a: &GridSeries,
    b: &GridSeries,
    deltas_seconds: &[f64],
) -> Result<CurveTable, EmpiricsError> {
    let end = |s: &GridSeries| s.t0_ms as f64 + s.span_seconds() * 1000.0;
    let start_ms = a.t0_ms.max(b.t0_ms) as f64;
    let end_ms = end(a).min(end(b));
    if end_ms <= start_ms {
        return Err(EmpiricsError::BadWindow("series do not overlap".into()));
    }
    let span = (end_ms - start_ms) / 1000.0;
    let min_step = a.step_seconds.max(b.step_seconds);
    let mut values = Vec::with_capacity(deltas_seconds.len());
    for &delta in deltas_seconds {
        if delta < min_step * (1.0 - 1e-12) || delta > span * (1.0 + 1e-12) {
            return Err(EmpiricsError::BadWindow(format!(
                "delta={delta}s must lie in [{min_step}, {span}]"
            )));
        }
        let n = snapped_floor(span / delta) as usize;
        let sample = |s: &GridSeries, i: usize| {
            let offset = (start_ms - s.t0_ms as f64) / 1000.0 + i as f64 * delta;
            s.value_at_offset(offset)
        };
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for i in 1..=n {
            let da = sample(a, i) - sample(a, i - 1);
            let db = sample(b, i) - sample(b, i - 1);
            sab += da * db;
            saa += da * da;
            sbb += db * db;
        }
        values.push(if saa > 0.0 && sbb > 0.0 {
            (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
        } else {
            f64::NAN
        });
    }
    Ok(CurveTable::new(
        "epps_correlation",
        deltas_seconds.to_vec(),
        values,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MarkedEvent, Sign};

    fn grid(values: Vec<f64>) -> GridSeries {
        GridSeries::new(0, 1.0, values, "g").unwrap()
    }

    #[test]
    fn signature_plot_of_ramp() {
        let s = grid((0..=100).map(|k| k as f64).collect());
        let c = empirical_signature_plot(&s, 100.0, &[1.0, 2.0, 3.0]).unwrap();
        // per-hour normalisation: multiply by t in hours to get Σ squares / 100
        let scale = 100.0 / SECONDS_PER_HOUR / 100.0;
        assert!((c.values[0] * scale - 1.0).abs() < 1e-12);
        assert!((c.values[1] * scale - 2.0).abs() < 1e-12);
        // 33 complete increments of size 3
        assert!((c.values[2] * scale - 33.0 * 9.0 / 100.0).abs() < 1e-12);
    }

    #[test]
    fn signature_plot_constant_and_invariances() {
        let flat = grid(vec![5.0; 50]);
        let c = empirical_signature_plot(&flat, 40.0, &[1.0, 4.0]).unwrap();
        assert!(c.values.iter().all(|&v| v == 0.0));

        let vals: Vec<f64> = (0..200).map(|k| ((k * 37 % 11) as f64).sin()).collect();
        let base = empirical_signature_plot(&grid(vals.clone()), 150.0, &[1.0, 5.0]).unwrap();
        let shifted = empirical_signature_plot(
            &grid(vals.iter().map(|v| v + 7.0).collect()),
            150.0,
            &[1.0, 5.0],
        )
        .unwrap();
        let scaled = empirical_signature_plot(
            &grid(vals.iter().map(|v| v * 3.0).collect()),
            150.0,
            &[1.0, 5.0],
        )
        .unwrap();
        for k in 0..2 {
            assert!((base.values[k] - shifted.values[k]).abs() < 1e-9 * base.values[k]);
            assert!((9.0 * base.values[k] - scaled.values[k]).abs() < 1e-9 * scaled.values[k]);
        }
    }

    #[test]
    fn signature_plot_window_errors() {
        let s = grid(vec![1.0; 10]);
        assert!(empirical_signature_plot(&s, 20.0, &[1.0]).is_err());
        assert!(empirical_signature_plot(&s, 5.0, &[6.0]).is_err());
        assert!(empirical_signature_plot(&s, 5.0, &[1.5]).is_err());
    }

    #[test]
    fn kernel_at_boundary_event() {
        let h_s = 300.0;
        let h = h_s / SECONDS_PER_HOUR;
        let c = kernel_intensity(&[0.0], 8.0, h_s, &[0.0]).unwrap();
        assert!((c.values[0] - 3.0 / (2.0 * h)).abs() < 1e-9);
        let none = kernel_intensity(&[], 8.0, h_s, &[0.0, 1.0, 8.0]).unwrap();
        assert!(none.values.iter().all(|&v| v == 0.0));
        assert_eq!(
            kernel_intensity(&[], 8.0, h_s, &[]),
            Err(EmpiricsError::EmptyGrid)
        );
    }

    #[test]
    fn cumulative_counts_steps() {
        let s = EventStream::new(
            "s",
            1.0,
            vec![
                MarkedEvent::new(0.2, Sign::Up, 1.0),
                MarkedEvent::new(0.5, Sign::Down, 1.0),
            ],
        )
        .unwrap();
        let c = cumulative_counts(&s, &[0.0, 0.2, 0.3, 0.5, 1.0]).unwrap();
        assert_eq!(c.values, vec![0.0, 1.0, 1.0, 2.0, 2.0]);
        let e = cumulative_counts(&EventStream::empty("e", 1.0).unwrap(), &[0.0, 1.0]).unwrap();
        assert_eq!(e.values, vec![0.0, 0.0]);
    }

    #[test]
    fn identity_time_change_gives_gaps() {
        let lambda = CurveTable::new("id", vec![0.0, 10.0], vec![0.0, 10.0]).unwrap();
        let times = [0.5, 1.25, 4.0, 9.0];
        let r = time_change_residuals(&times, &lambda).unwrap();
        assert_eq!(r.residuals, vec![0.5, 0.75, 2.75, 5.0]);
        assert_eq!(r.qq.values, vec![0.5, 0.75, 2.75, 5.0]);
        let bad = CurveTable::new("b", vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 1.0]).unwrap();
        assert_eq!(
            time_change_residuals(&times, &bad),
            Err(EmpiricsError::NonMonotoneIntensity(2))
        );
    }

    #[test]
    fn ks_exponential_quantiles() {
        let n = 1000;
        let q: Vec<f64> = (1..=n)
            .map(|i| -(-(i as f64 - 0.5) / n as f64).ln_1p())
            .collect();
        let r = ks_test_exponential(&q).unwrap();
        assert!((r.statistic - 0.5 / n as f64).abs() < 1e-12);
        assert!(r.p_value > 0.999999);
        assert!(!r.rejected_at_95);

        let zeros = ks_test_exponential(&[0.0; 50]).unwrap();
        assert_eq!(zeros.statistic, 1.0);
        assert!(zeros.p_value < 1e-12);
        assert!(zeros.rejected_at_95);
        assert!(ks_test_exponential(&[]).is_err());
    }

    #[test]
    fn ks_two_sample_extremes() {
        let xs = [0.3, 0.1, 0.7, 0.7];
        let r = ks_test_two_sample(&xs, &xs).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let r = ks_test_two_sample(&[0.0; 20], &[1.0; 30]).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert_eq!(r.m, Some(30));
        assert!(r.rejected_at_95);
    }

    #[test]
    fn kolmogorov_known_values() {
        // Classical critical values: P(K > 1.3581) = 0.05, P(K > 1.6276) = 0.01.
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
        assert!((kolmogorov_survival(0.8276) - 0.5).abs() < 1e-3);
        // The two series agree where they meet.
        let x: f64 = 1.18;
        let alt = 2.0
            * (1..50)
                .map(|k| {
                    let kf = k as f64;
                    let s = if k % 2 == 1 { 1.0 } else { -1.0 };
                    s * (-2.0 * kf * kf * x * x).exp()
                })
                .sum::<f64>();
        assert!((kolmogorov_survival(x - 1e-15) - alt).abs() < 1e-12);
    }

    #[test]
    fn jump_profile_basics() {
        let s = EventStream::new("s", 8.0, vec![MarkedEvent::new(6.0, Sign::Up, 0.5)]).unwrap();
        // event is 8 - 6 + 1 = 3h before maturity
        let p = jump_moment_profile(&[s], 1.0, &[2.0, 3.0, 9.0]).unwrap();
        assert!(p.mean.values[0].is_nan());
        assert_eq!(p.mean.values[1], 0.5);
        assert_eq!(p.sd.values[2], 0.0);

        let s = EventStream::new(
            "m",
            8.0,
            vec![
                MarkedEvent::new(0.5, Sign::Up, 5.0),
                MarkedEvent::new(7.0, Sign::Down, 0.1),
                MarkedEvent::new(7.5, Sign::Up, 0.1),
            ],
        )
        .unwrap();
        let p = jump_moment_profile(&[s], 1.0, &[3.0, 9.0]).unwrap();
        assert!(p.mean.values[1] > p.mean.values[0]);
    }

    #[test]
    fn epps_perfect_correlation() {
        let vals: Vec<f64> = (0..500)
            .map(|k| ((k * 7919 % 101) as f64 * 0.37).sin())
            .collect();
        let a = grid(vals.clone());
        let b = GridSeries::new(0, 1.0, vals.iter().map(|v| 2.0 * v + 1.0).collect(), "b").unwrap();
        let neg = GridSeries::new(0, 1.0, vals.iter().map(|v| -v).collect(), "n").unwrap();
        let c = epps_correlation(&a, &b, &[1.0, 5.0, 60.0]).unwrap();
        assert!(c.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let c = epps_correlation(&a, &neg, &[1.0, 5.0]).unwrap();
        assert!(c.values.iter().all(|&v| (v + 1.0).abs() < 1e-12));
        let flat = grid(vec![1.0; 500]);
        assert!(epps_correlation(&a, &flat, &[1.0]).unwrap().values[0].is_nan());
        assert!(epps_correlation(&a, &b, &[0.5]).is_err());
        let far = GridSeries::new(10_000_000, 1.0, vals, "far").unwrap();
        assert!(epps_correlation(&a, &far, &[1.0]).is_err());
    }
}
