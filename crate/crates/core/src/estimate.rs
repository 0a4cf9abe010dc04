//! Event extraction, exact likelihood, maximum-likelihood fitting and jump
//! moment estimation.

use argmin::core::{
    CostFunction, Error as ArgminError, Executor, State, TerminationReason, TerminationStatus,
};
use argmin::solver::neldermead::NelderMead;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::signature_plot_stationary;
use crate::curve::{CurveTable, MeanVar};
use crate::empirics::{stream_signature_plot, EmpiricsError, GridSeries};
use crate::model::{
    EventStream, HawkesParams, IntensityState, MarkedEvent, ModelError, Sign, SECONDS_PER_HOUR,
};

/// Initial value of the baseline growth exponent.
pub const DEFAULT_KAPPA0: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("empty extraction window [{start}s, {end}s]")]
    EmptyWindow { start: f64, end: f64 },
    #[error("non-positive intensity {value} at t={t}")]
    NumericalUnderflow { t: f64, value: f64 },
    #[error("session horizon {session} differs from parameter horizon {params}")]
    HorizonMismatch { session: f64, params: f64 },
    #[error("not enough data: {0}")]
    DegenerateData(String),
    #[error("optimizer failed: {0}")]
    Optimizer(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Empirics(#[from] EmpiricsError),
}

/// One observed session on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionData {
    pub stream: EventStream,
    pub horizon: f64,
}

impl From<EventStream> for SessionData {
    fn from(stream: EventStream) -> Self {
        SessionData {
            horizon: stream.horizon,
            stream,
        }
    }
}

/// One event per grid step where the price changes, over the window
/// `(start, end]` given in seconds from the first grid point. Times are
/// shifted so that `start` maps to 0 and converted to hours.
pub fn extract_events(
    series: &GridSeries,
    start_seconds: f64,
    end_seconds: f64,
) -> Result<EventStream, EstimateError> {
    let empty = || EstimateError::EmptyWindow {
        start: start_seconds,
        end: end_seconds,
    };
    let step = series.step_seconds;
    if !(start_seconds >= 0.0 && start_seconds < end_seconds)
        || end_seconds > series.span_seconds() * (1.0 + 1e-12)
    {
        return Err(empty());
    }
    let first = (start_seconds / step + 1e-9).floor() as usize + 1;
    let last = (end_seconds / step + 1e-9).floor() as usize;
    let v = &series.values;
    let events = (first..=last.min(v.len() - 1))
        .filter_map(|k| {
            let change = v[k] - v[k - 1];
            (change != 0.0).then(|| {
                let t = (k as f64 * step - start_seconds) / SECONDS_PER_HOUR;
                let sign = if change > 0.0 { Sign::Up } else { Sign::Down };
                MarkedEvent::new(t, sign, change.abs())
            })
        })
        .collect();
    let horizon = (end_seconds - start_seconds) / SECONDS_PER_HOUR;
    Ok(EventStream::new(series.label.clone(), horizon, events)?)
}

fn check_horizon(params: &HawkesParams, session: &SessionData) -> Result<(), EstimateError> {
    let (a, b) = (session.horizon, params.horizon);
    if (a - b).abs() > 1e-9 * b.abs() {
        return Err(EstimateError::HorizonMismatch {
            session: a,
            params: b,
        });
    }
    Ok(())
}

/// Compensator terms common to both implementations:
/// `2T − 2∫₀ᵀμ − Σ (α/β) J (1 − e^{−β(T−τ)})` over all events.
fn compensator(params: &HawkesParams, stream: &EventStream) -> f64 {
    let t = params.horizon;
    let residual: f64 = stream
        .events()
        .iter()
        .map(|e| params.alpha / params.beta * e.mark * -(-params.beta * (t - e.t)).exp_m1())
        .sum();
    2.0 * (t - params.integrated_baseline(t)) - residual
}

/// Exact session log-likelihood, summing the upward and downward
/// components, with the excitation maintained by an O(N) recursion.
pub fn log_likelihood(params: &HawkesParams, session: &SessionData) -> Result<f64, EstimateError> {
    let params = params.validate_allow_poisson()?;
    check_horizon(&params, session)?;
    let mut state = IntensityState::at(0.0);
    let mut log_sum = 0.0;
    for e in session.stream.events() {
        state = state.advance(params.beta, e.t - state.t, None)?;
        let lambda = match e.sign {
            Sign::Up => state.intensity_up(&params),
            Sign::Down => state.intensity_down(&params),
        };
        if !(lambda > 0.0) {
            return Err(EstimateError::NumericalUnderflow {
                t: e.t,
                value: lambda,
            });
        }
        log_sum += lambda.ln();
        state = state.advance(params.beta, 0.0, Some((e.sign, e.mark)))?;
    }
    Ok(log_sum + compensator(&params, &session.stream))
}

/// Same value as [`log_likelihood`] by direct double summation.
pub fn log_likelihood_bruteforce(
    params: &HawkesParams,
    session: &SessionData,
) -> Result<f64, EstimateError> {
    let params = params.validate_allow_poisson()?;
    check_horizon(&params, session)?;
    let events = session.stream.events();
    let mut log_sum = 0.0;
    for (i, e) in events.iter().enumerate() {
        let excitation: f64 = events[..i]
            .iter()
            .filter(|o| o.sign != e.sign)
            .map(|o| params.alpha * o.mark * (-params.beta * (e.t - o.t)).exp())
            .sum();
        let lambda = params.baseline(e.t) + excitation;
        if !(lambda > 0.0) {
            return Err(EstimateError::NumericalUnderflow {
                t: e.t,
                value: lambda,
            });
        }
        log_sum += lambda.ln();
    }
    Ok(log_sum + compensator(&params, &session.stream))
}

/// Sum of session log-likelihoods, evaluated in parallel and added in
/// session order.
pub fn total_log_likelihood(
    params: &HawkesParams,
    sessions: &[SessionData],
) -> Result<f64, EstimateError> {
    let parts = sessions
        .par_iter()
        .map(|s| log_likelihood(params, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(parts.iter().sum())
}

/// Point estimate and normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    fn from_acc(acc: &MeanVar) -> Self {
        let value = acc.mean();
        let half = if acc.count() < 2 {
            0.0
        } else {
            1.96 * acc.std_error()
        };
        Estimate {
            value,
            ci_low: value - half,
            ci_high: value + half,
        }
    }
}

/// Empirical `E[J]` and `E[J²]` from a set of marks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkMoments {
    pub n: u64,
    pub mean_j: Estimate,
    pub mean_j2: Estimate,
}

impl MarkMoments {
    fn from_marks(marks: impl Iterator<Item = f64> + Clone) -> Option<Self> {
        let first: MeanVar = marks.clone().collect();
        if first.count() == 0 {
            return None;
        }
        let second: MeanVar = marks.map(|j| j * j).collect();
        Some(MarkMoments {
            n: first.count(),
            mean_j: Estimate::from_acc(&first),
            mean_j2: Estimate::from_acc(&second),
        })
    }
}

/// Jump moments pooled over signs and split by sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpMoments {
    pub pooled: MarkMoments,
    pub up: Option<MarkMoments>,
    pub down: Option<MarkMoments>,
}

pub fn jump_moments(sessions: &[SessionData]) -> Result<JumpMoments, EstimateError> {
    let events = || sessions.iter().flat_map(|s| s.stream.events().iter());
    let pooled = MarkMoments::from_marks(events().map(|e| e.mark))
        .ok_or_else(|| EstimateError::DegenerateData("no events in any session".into()))?;
    let by_sign =
        |sign| MarkMoments::from_marks(events().filter(move |e| e.sign == sign).map(|e| e.mark));
    Ok(JumpMoments {
        pooled,
        up: by_sign(Sign::Up),
        down: by_sign(Sign::Down),
    })
}

/// Options of the simplex search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iters: u64,
    /// Convergence threshold on the standard deviation of the simplex costs.
    pub cost_tolerance: f64,
    /// Size of the initial simplex in log-parameter units.
    pub initial_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iters: 2000,
            cost_tolerance: 1e-7,
            initial_step: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: HawkesParams,
    pub loglik: f64,
    pub n_sessions: usize,
    pub n_events: usize,
    pub converged: bool,
    pub iterations: u64,
    pub initialization: HawkesParams,
    pub init_loglik: f64,
}

fn from_log(template: &HawkesParams, theta: &[f64]) -> HawkesParams {
    HawkesParams {
        mu0: theta[0].exp(),
        kappa: theta[1].exp(),
        alpha: theta[2].exp(),
        beta: theta[3].exp(),
        ..*template
    }
}

fn simplex(start: &[f64], step: f64) -> Vec<Vec<f64>> {
    let mut vertices = vec![start.to_vec()];
    for k in 0..start.len() {
        let mut v = start.to_vec();
        v[k] += step;
        vertices.push(v);
    }
    vertices
}

struct NegLogLik<'a> {
    template: HawkesParams,
    sessions: &'a [SessionData],
}

impl CostFunction for NegLogLik<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, theta: &Vec<f64>) -> Result<f64, ArgminError> {
        let p = from_log(&self.template, theta);
        Ok(match total_log_likelihood(&p, self.sessions) {
            Ok(l) if l.is_finite() => -l,
            _ => f64::INFINITY,
        })
    }
}

/// Maximizes the summed log-likelihood over `(μ₀, κ, α, β)` by Nelder-Mead
/// in log-parameter space. Jump moments are the pooled empirical ones and
/// any candidate with `α Ê(J) ≥ β` scores −∞. Hitting the iteration cap
/// returns the best point with `converged == false`.
pub fn fit_mle(
    sessions: &[SessionData],
    init: &HawkesParams,
    options: &FitOptions,
) -> Result<FitResult, EstimateError> {
    let first = sessions
        .first()
        .ok_or_else(|| EstimateError::DegenerateData("no sessions".into()))?;
    if let Some(s) = sessions
        .iter()
        .find(|s| (s.horizon - first.horizon).abs() > 1e-9 * first.horizon)
    {
        return Err(EstimateError::HorizonMismatch {
            session: s.horizon,
            params: first.horizon,
        });
    }
    let moments = jump_moments(sessions)?;
    let template = HawkesParams {
        horizon: first.horizon,
        mean_j: moments.pooled.mean_j.value,
        mean_j2: moments.pooled.mean_j2.value,
        ..*init
    };
    let start = [template.mu0, template.kappa, template.alpha, template.beta].map(f64::ln);
    if start.iter().any(|x| !x.is_finite()) {
        return Err(ModelError::NonPositiveParameter {
            name: "init",
            value: f64::NAN,
        }
        .into());
    }
    let problem = NegLogLik { template, sessions };
    let init_cost = problem
        .cost(&start.to_vec())
        .map_err(|e| EstimateError::Optimizer(e.to_string()))?;
    let solver = NelderMead::new(simplex(&start, options.initial_step))
        .with_sd_tolerance(options.cost_tolerance)
        .map_err(|e| EstimateError::Optimizer(e.to_string()))?;
    let res = Executor::new(problem, solver)
        .configure(|s| s.max_iters(options.max_iters))
        .run()
        .map_err(|e| EstimateError::Optimizer(e.to_string()))?;
    let state = res.state();
    let best = state
        .get_best_param()
        .ok_or_else(|| EstimateError::Optimizer("no best point".into()))?;
    let best_cost = state.get_best_cost();
    if !best_cost.is_finite() {
        return Err(EstimateError::Optimizer("no stable point found".into()));
    }
    let converged = matches!(
        state.get_termination_status(),
        TerminationStatus::Terminated(TerminationReason::SolverConverged)
    );
    if !converged {
        log::warn!(
            "likelihood search stopped after {} iterations without converging",
            state.get_iter()
        );
    }
    Ok(FitResult {
        params: from_log(&template, best),
        loglik: -best_cost,
        n_sessions: sessions.len(),
        n_events: sessions.iter().map(|s| s.stream.len()).sum(),
        converged,
        iterations: state.get_iter(),
        initialization: template,
        init_loglik: -init_cost,
    })
}

/// Session-averaged realized signature plot at `t = T` for sampling steps
/// `1..=max_lag_seconds` seconds; abscissa in seconds.
pub fn averaged_signature_plot(
    sessions: &[SessionData],
    max_lag_seconds: usize,
) -> Result<CurveTable, EstimateError> {
    let first = sessions
        .first()
        .ok_or_else(|| EstimateError::DegenerateData("no sessions".into()))?;
    let deltas: Vec<f64> = (1..=max_lag_seconds)
        .map(|k| k as f64 / SECONDS_PER_HOUR)
        .collect();
    let curves = sessions
        .par_iter()
        .map(|s| stream_signature_plot(&s.stream, first.horizon, &deltas))
        .collect::<Result<Vec<_>, _>>()?;
    let mut avg =
        CurveTable::average("mean_signature_plot", &curves).map_err(EmpiricsError::from)?;
    avg.abscissa = (1..=max_lag_seconds).map(|k| k as f64).collect();
    Ok(avg)
}

/// Result of the signature-plot initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigplotInit {
    pub params: HawkesParams,
    /// Sum of squared distances at `params`.
    pub objective: f64,
    /// Same objective at `μ₀ = 1, α = 1, β = 2`.
    pub reference_objective: f64,
}

/// Reference starting point of the least-squares search, `(μ₀, α, β)`.
pub const SIGPLOT_REFERENCE: [f64; 3] = [1.0, 1.0, 2.0];

fn sigplot_distance(
    template: &HawkesParams,
    target: &CurveTable,
    mu0: f64,
    alpha: f64,
    beta: f64,
) -> f64 {
    let p = HawkesParams {
        mu0,
        alpha,
        beta,
        ..*template
    };
    if p.alpha * p.mean_j >= p.beta {
        return f64::INFINITY;
    }
    target
        .points()
        .map(
            |(secs, c)| match signature_plot_stationary(&p, secs / SECONDS_PER_HOUR) {
                Ok(model) => (model - c).powi(2),
                Err(_) => f64::INFINITY,
            },
        )
        .sum()
}

struct SigplotFit<'a> {
    template: HawkesParams,
    target: &'a CurveTable,
}

impl CostFunction for SigplotFit<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, theta: &Vec<f64>) -> Result<f64, ArgminError> {
        let d = sigplot_distance(
            &self.template,
            self.target,
            theta[0].exp(),
            theta[1].exp(),
            theta[2].exp(),
        );
        Ok(if d.is_finite() { d } else { f64::INFINITY })
    }
}

/// Least-squares fit of the stationary signature plot to the
/// session-averaged empirical one over `δ = 1..300` seconds. Returns
/// `(μ₀, α, β)` with `κ = kappa0` and empirical jump moments.
pub fn init_from_stationary_sigplot(
    sessions: &[SessionData],
    kappa0: f64,
) -> Result<SigplotInit, EstimateError> {
    let moments = jump_moments(sessions)?;
    let target = averaged_signature_plot(sessions, 300)?;
    let template = HawkesParams {
        mu0: 1.0,
        kappa: kappa0,
        alpha: 1.0,
        beta: 2.0,
        horizon: sessions[0].horizon,
        mean_j: moments.pooled.mean_j.value,
        mean_j2: moments.pooled.mean_j2.value,
        f0: 0.0,
    };
    let [r_mu, r_alpha, r_beta] = SIGPLOT_REFERENCE;
    let reference_objective = sigplot_distance(&template, &target, r_mu, r_alpha, r_beta);

    let mut starts = vec![SIGPLOT_REFERENCE.map(f64::ln).to_vec()];
    // Moment-matching start: micro level, plateau ratio and a one-minute decay.
    let micro = target.values[0];
    let plateau = *target.values.last().unwrap_or(&micro);
    if micro > 0.0 && plateau > 0.0 {
        let r = ((micro / plateau).sqrt() - 1.0).clamp(0.05, 0.95);
        let mu0 = micro * (1.0 - r) / (2.0 * template.mean_j2);
        for decay_seconds in [10.0, 60.0] {
            let beta = SECONDS_PER_HOUR / decay_seconds / (1.0 + r);
            let alpha = r * beta / template.mean_j;
            starts.push(vec![mu0.ln(), alpha.ln(), beta.ln()]);
        }
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in starts {
        let problem = SigplotFit {
            template,
            target: &target,
        };
        let solver = NelderMead::new(simplex(&start, 0.3))
            .with_sd_tolerance(1e-14 * micro.max(1e-300).powi(2))
            .map_err(|e| EstimateError::Optimizer(e.to_string()))?;
        let res = Executor::new(problem, solver)
            .configure(|s| s.max_iters(3000))
            .run()
            .map_err(|e| EstimateError::Optimizer(e.to_string()))?;
        let state = res.state();
        if let Some(p) = state.get_best_param() {
            let cost = state.get_best_cost();
            if best.as_ref().is_none_or(|(_, c)| cost < *c) {
                best = Some((p.clone(), cost));
            }
        }
    }
    let (theta, objective) = best.filter(|(_, c)| c.is_finite()).ok_or_else(|| {
        EstimateError::DegenerateData("signature plot fit found no stable point".into())
    })?;
    Ok(SigplotInit {
        params: HawkesParams {
            mu0: theta[0].exp(),
            alpha: theta[1].exp(),
            beta: theta[2].exp(),
            ..template
        },
        objective,
        reference_objective,
    })
}
