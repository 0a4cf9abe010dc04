//! Thinning simulation of the marked bivariate Hawkes process.
//!
//! The dominating rate on a lookahead window `[t, t + w]` is
//! `2 μ(min(t + w, T)/T) + α (s⁺ + s⁻)(t)`: the baseline is non-decreasing and
//! the excitation only decays between events, so the bound holds on the whole
//! window. Proposals beyond the window restart the search at its end, which
//! is exact by memorylessness of the exponential waiting time.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::snapped_floor;
use crate::curve::{CurveError, CurveTable, MeanVar};
use crate::empirics::GridSeries;
use crate::model::{
    EventStream, HawkesParams, IntensityState, MarkedEvent, ModelError, Sign, SECONDS_PER_HOUR,
};

/// Proposal budget per path before the simulator gives up.
pub const MAX_PROPOSALS: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulateError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("rejection loop exceeded {0} proposals")]
    SeedExhausted(u64),
    #[error("dominating rate {bound} below intensity {intensity} at t={t}")]
    BoundViolated { t: f64, intensity: f64, bound: f64 },
    #[error("grid step must be positive, got {0}")]
    BadStep(f64),
    #[error("invalid jump sampler: {0}")]
    BadSampler(String),
    #[error("Monte Carlo needs at least 2 paths, got {0}")]
    TooFewPaths(usize),
    #[error("invalid probe: {0}")]
    BadProbe(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Law of the positive jump sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpSampler {
    /// Resampling from observed jump sizes.
    Empirical {
        samples: Vec<f64>,
    },
    LogNormal {
        meanlog: f64,
        sdlog: f64,
    },
    Exponential {
        mean: f64,
    },
    Constant {
        value: f64,
    },
}

impl JumpSampler {
    pub fn empirical(samples: Vec<f64>) -> Result<Self, SimulateError> {
        if samples.is_empty() {
            return Err(SimulateError::BadSampler(
                "empirical sample list is empty".into(),
            ));
        }
        JumpSampler::Empirical { samples }.checked()
    }

    /// Log-normal law with the given first two moments.
    pub fn lognormal_from_moments(mean_j: f64, mean_j2: f64) -> Result<Self, SimulateError> {
        if !(mean_j > 0.0 && mean_j2 >= mean_j * mean_j) {
            return Err(SimulateError::BadSampler(format!(
                "moments ({mean_j}, {mean_j2}) are not those of a positive law"
            )));
        }
        let var_log = (mean_j2 / (mean_j * mean_j)).ln();
        JumpSampler::LogNormal {
            meanlog: mean_j.ln() - 0.5 * var_log,
            sdlog: var_log.sqrt(),
        }
        .checked()
    }

    /// Log-normal law matched to the jump moments carried by `params`.
    pub fn matched(params: &HawkesParams) -> Result<Self, SimulateError> {
        Self::lognormal_from_moments(params.mean_j, params.mean_j2)
    }

    pub fn checked(self) -> Result<Self, SimulateError> {
        let ok = match &self {
            JumpSampler::Empirical { samples } => {
                !samples.is_empty() && samples.iter().all(|x| *x > 0.0 && x.is_finite())
            }
            JumpSampler::LogNormal { meanlog, sdlog } => {
                meanlog.is_finite() && *sdlog >= 0.0 && sdlog.is_finite()
            }
            JumpSampler::Exponential { mean } => *mean > 0.0 && mean.is_finite(),
            JumpSampler::Constant { value } => *value > 0.0 && value.is_finite(),
        };
        if ok {
            Ok(self)
        } else {
            Err(SimulateError::BadSampler(format!("{self:?}")))
        }
    }

    /// `(E[J], E[J²])` of the law.
    pub fn moments(&self) -> (f64, f64) {
        match self {
            JumpSampler::Empirical { samples } => {
                let n = samples.len() as f64;
                let m1 = samples.iter().sum::<f64>() / n;
                let m2 = samples.iter().map(|x| x * x).sum::<f64>() / n;
                (m1, m2)
            }
            JumpSampler::LogNormal { meanlog, sdlog } => {
                let s2 = sdlog * sdlog;
                ((meanlog + 0.5 * s2).exp(), (2.0 * meanlog + 2.0 * s2).exp())
            }
            JumpSampler::Exponential { mean } => (*mean, 2.0 * mean * mean),
            JumpSampler::Constant { value } => (*value, value * value),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            JumpSampler::Empirical { samples } => samples[rng.gen_range(0..samples.len())],
            JumpSampler::LogNormal { meanlog, sdlog } => {
                let z: f64 = StandardNormal.sample(rng);
                (meanlog + sdlog * z).exp()
            }
            JumpSampler::Exponential { mean } => {
                let e: f64 = Exp1.sample(rng);
                // Exp1 can return exactly zero.
                (mean * e).max(f64::MIN_POSITIVE)
            }
            JumpSampler::Constant { value } => *value,
        }
    }

    /// Warns when the law's moments differ from `params` by more than 1%.
    pub fn warn_if_inconsistent(&self, params: &HawkesParams) -> bool {
        let (m1, m2) = self.moments();
        let off = |a: f64, b: f64| (a - b).abs() > 0.01 * b.abs();
        let mismatch = off(m1, params.mean_j) || off(m2, params.mean_j2);
        if mismatch {
            log::warn!(
                "jump sampler moments ({m1}, {m2}) differ from parameters ({}, {}) by more than 1%",
                params.mean_j,
                params.mean_j2
            );
        }
        mismatch
    }
}

/// Random stream for path `index` under `master_seed`.
///
/// ChaCha stream selection gives independent, counter-based streams, so a
/// path's randomness does not depend on which thread simulates it.
pub fn path_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Simulates one session on `[0, T]` with a fixed seed.
pub fn simulate_session(
    params: &HawkesParams,
    sampler: &JumpSampler,
    seed: u64,
) -> Result<EventStream, SimulateError> {
    sampler.warn_if_inconsistent(params);
    simulate_with_rng(
        params,
        sampler,
        &mut path_rng(seed, 0),
        format!("sim-{seed}"),
    )
}

/// Thinning simulation driven by an explicit random source.
pub fn simulate_with_rng<R: Rng + ?Sized>(
    params: &HawkesParams,
    sampler: &JumpSampler,
    rng: &mut R,
    session_id: String,
) -> Result<EventStream, SimulateError> {
    let params = params.validate_allow_poisson()?;
    let horizon = params.horizon;
    let mut state = IntensityState::at(0.0);
    let mut events = Vec::new();
    let mut window = 1.0 / (2.0 * params.mu0);
    let mut proposals: u64 = 0;

    while state.t < horizon {
        let window_end = (state.t + window).min(horizon);
        let bound =
            2.0 * params.baseline(window_end) + params.alpha * (state.s_plus + state.s_minus);
        window = 1.0 / bound;

        proposals += 1;
        if proposals > MAX_PROPOSALS {
            return Err(SimulateError::SeedExhausted(MAX_PROPOSALS));
        }
        let wait: f64 = Exp1.sample(rng);
        let candidate = state.t + wait / bound;
        if candidate > window_end {
            let dt = window_end - state.t;
            state = state.advance(params.beta, dt, None)?;
            state.t = window_end;
            continue;
        }
        state = state.advance(params.beta, candidate - state.t, None)?;
        let up = state.intensity_up(&params);
        let down = state.intensity_down(&params);
        let total = up + down;
        if total > bound * (1.0 + 1e-12) {
            return Err(SimulateError::BoundViolated {
                t: candidate,
                intensity: total,
                bound,
            });
        }
        if rng.gen::<f64>() * bound > total {
            continue;
        }
        if events
            .last()
            .is_some_and(|e: &MarkedEvent| e.t >= candidate)
        {
            continue;
        }
        let sign = if rng.gen::<f64>() * total < up {
            Sign::Up
        } else {
            Sign::Down
        };
        let mark = sampler.sample(rng);
        state = state.advance(params.beta, 0.0, Some((sign, mark)))?;
        events.push(MarkedEvent::new(candidate, sign, mark));
    }
    Ok(EventStream::new(session_id, horizon, events)?)
}

/// Right-continuous piecewise-constant price `f(t) = f₀ + f⁺(t) − f⁻(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePath {
    pub f0: f64,
    stream: EventStream,
    cum_up: Vec<f64>,
    cum_down: Vec<f64>,
}

impl PricePath {
    pub fn stream(&self) -> &EventStream {
        &self.stream
    }

    pub fn horizon(&self) -> f64 {
        self.stream.horizon
    }

    /// Number of events with time `≤ t`.
    fn count_until(&self, t: f64) -> usize {
        self.stream.events().partition_point(|e| e.t <= t)
    }

    /// `(f⁺(t), f⁻(t))`.
    pub fn components_at(&self, t: f64) -> (f64, f64) {
        let k = self.count_until(t);
        if k == 0 {
            (0.0, 0.0)
        } else {
            (self.cum_up[k - 1], self.cum_down[k - 1])
        }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let (up, down) = self.components_at(t);
        self.f0 + up - down
    }

    /// Values at a nondecreasing list of times, by a single merge pass.
    pub fn values_at_sorted(&self, times: &[f64]) -> Vec<f64> {
        let events = self.stream.events();
        let mut k = 0;
        let mut level = self.f0;
        times
            .iter()
            .map(|&t| {
                while k < events.len() && events[k].t <= t {
                    level += events[k].signed_mark();
                    k += 1;
                }
                level
            })
            .collect()
    }

    pub fn terminal_value(&self) -> f64 {
        self.value_at(self.horizon())
    }
}

pub fn build_price_path(stream: &EventStream, f0: f64) -> PricePath {
    let mut up = 0.0;
    let mut down = 0.0;
    let mut cum_up = Vec::with_capacity(stream.len());
    let mut cum_down = Vec::with_capacity(stream.len());
    for e in stream.events() {
        match e.sign {
            Sign::Up => up += e.mark,
            Sign::Down => down += e.mark,
        }
        cum_up.push(up);
        cum_down.push(down);
    }
    PricePath {
        f0,
        stream: stream.clone(),
        cum_up,
        cum_down,
    }
}

/// Samples the path at `k · step` seconds for every grid point in `[0, T]`.
pub fn sample_to_grid(path: &PricePath, step_seconds: f64) -> Result<GridSeries, SimulateError> {
    if !(step_seconds > 0.0 && step_seconds.is_finite()) {
        return Err(SimulateError::BadStep(step_seconds));
    }
    let horizon_s = path.horizon() * SECONDS_PER_HOUR;
    let n = snapped_floor(horizon_s / step_seconds) as usize;
    let times: Vec<f64> = (0..=n)
        .map(|k| k as f64 * step_seconds / SECONDS_PER_HOUR)
        .collect();
    let values = path.values_at_sorted(&times);
    Ok(
        GridSeries::new(0, step_seconds, values, path.stream().session_id.clone())
            .expect("grid has at least one point and a positive step"),
    )
}

/// Realized variance per unit time of the path sampled every `delta` hours
/// over `[0, t]`, counting only the `⌊t/δ⌋` complete increments.
///
/// Only buckets containing events contribute, so the cost is linear in the
/// number of events.
pub fn realized_signature(stream: &EventStream, t: f64, delta: f64) -> f64 {
    let n = snapped_floor(t / delta);
    let mut total = 0.0;
    let mut bucket: u64 = 0;
    let mut acc = 0.0;
    for e in stream.events() {
        // Event at τ enters the increment ending at the first grid point ≥ τ.
        let i = (e.t / delta).ceil().max(1.0) as u64;
        if i > n {
            break;
        }
        if i != bucket {
            total += acc * acc;
            acc = 0.0;
            bucket = i;
        }
        acc += e.signed_mark();
    }
    total += acc * acc;
    total / t
}

/// Probe points of a Monte Carlo run (all times in hours).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McProbes {
    pub times: Vec<f64>,
    pub signature_time: f64,
    pub deltas: Vec<f64>,
}

/// How per-path random streams are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McSeeding {
    /// Path `i` uses stream `i` of the master seed.
    Split(u64),
    /// Every path uses the same stream; only useful for degenerate checks.
    Fixed(u64),
}

/// Monte Carlo estimates with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub n_paths: usize,
    /// `E[f⁺_t]` at the probe times.
    pub mean_up: CurveTable,
    /// `E[f⁻_t]` at the probe times.
    pub mean_down: CurveTable,
    /// `E[f_t²]` at the probe times.
    pub second_moment: CurveTable,
    /// `E[N⁺_t + N⁻_t]` at the probe times.
    pub event_count: CurveTable,
    /// Realized `C(t, δ)` at the signature time, abscissa `δ` in hours.
    pub signature_plot: CurveTable,
}

struct PathStats {
    up: Vec<f64>,
    down: Vec<f64>,
    square: Vec<f64>,
    count: Vec<f64>,
    signature: Vec<f64>,
}

fn path_stats(stream: &EventStream, f0: f64, probes: &McProbes) -> PathStats {
    let path = build_price_path(stream, f0);
    let mut up = Vec::with_capacity(probes.times.len());
    let mut down = Vec::with_capacity(probes.times.len());
    let mut square = Vec::with_capacity(probes.times.len());
    let mut count = Vec::with_capacity(probes.times.len());
    for &t in &probes.times {
        let (u, d) = path.components_at(t);
        let f = f0 + u - d;
        up.push(u);
        down.push(d);
        square.push(f * f);
        count.push(path.count_until(t) as f64);
    }
    let signature = probes
        .deltas
        .iter()
        .map(|&d| realized_signature(stream, probes.signature_time, d))
        .collect();
    PathStats {
        up,
        down,
        square,
        count,
        signature,
    }
}

/// Simulates `n_paths` sessions (in parallel on the current rayon pool) and
/// returns moment and signature-plot estimates at the probes.
///
/// Results depend only on the inputs: per-path streams are seeded by index
/// and reduction runs in index order.
pub fn monte_carlo_report(
    params: &HawkesParams,
    sampler: &JumpSampler,
    n_paths: usize,
    probes: &McProbes,
    seeding: McSeeding,
) -> Result<McReport, SimulateError> {
    if n_paths < 2 {
        return Err(SimulateError::TooFewPaths(n_paths));
    }
    let params = params.validate_allow_poisson()?;
    check_probes(&params, probes)?;
    sampler.warn_if_inconsistent(&params);

    let stats = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = match seeding {
                McSeeding::Split(seed) => path_rng(seed, i as u64),
                McSeeding::Fixed(seed) => path_rng(seed, 0),
            };
            let stream = simulate_with_rng(&params, sampler, &mut rng, format!("path-{i}"))?;
            Ok(path_stats(&stream, params.f0, probes))
        })
        .collect::<Result<Vec<_>, SimulateError>>()?;

    let summarize = |label: &str, abscissa: &[f64], pick: &dyn Fn(&PathStats) -> &Vec<f64>| {
        let k = abscissa.len();
        let mut acc = vec![MeanVar::default(); k];
        for s in &stats {
            for (a, v) in acc.iter_mut().zip(pick(s)) {
                a.push(*v);
            }
        }
        CurveTable::with_stderr(
            label,
            abscissa.to_vec(),
            acc.iter().map(MeanVar::mean).collect(),
            acc.iter().map(MeanVar::std_error).collect(),
        )
    };

    Ok(McReport {
        n_paths,
        mean_up: summarize("mc_mean_f_plus", &probes.times, &|s| &s.up)?,
        mean_down: summarize("mc_mean_f_minus", &probes.times, &|s| &s.down)?,
        second_moment: summarize("mc_second_moment", &probes.times, &|s| &s.square)?,
        event_count: summarize("mc_event_count", &probes.times, &|s| &s.count)?,
        signature_plot: summarize("mc_signature_plot", &probes.deltas, &|s| &s.signature)?,
    })
}

fn check_probes(params: &HawkesParams, probes: &McProbes) -> Result<(), SimulateError> {
    let h = params.horizon;
    if let Some(t) = probes.times.iter().find(|&&t| !(0.0..=h).contains(&t)) {
        return Err(SimulateError::BadProbe(format!(
            "time {t} outside [0, {h}]"
        )));
    }
    let st = probes.signature_time;
    if !(st > 0.0 && st <= h) {
        return Err(SimulateError::BadProbe(format!(
            "signature time {st} outside (0, {h}]"
        )));
    }
    if let Some(d) = probes
        .deltas
        .iter()
        .find(|&&d| !(d > 0.0 && d <= st * (1.0 + 1e-12)))
    {
        return Err(SimulateError::BadProbe(format!(
            "sampling step {d} not in (0, {st}]"
        )));
    }
    Ok(())
}
