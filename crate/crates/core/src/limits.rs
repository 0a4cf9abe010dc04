//! Monte Carlo checks of the large-horizon behavior: law of large numbers
//! for counts and mark sums, and the Brownian limit of the price with its
//! time-dependent volatility.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::analytics::{AnalyticsError, Moments};
use crate::curve::MeanVar;
use crate::empirics::{ks_test_one_sample, EmpiricsError, TestResult};
use crate::model::{HawkesParams, Sign};
use crate::simulate::{build_price_path, path_rng, simulate_with_rng, JumpSampler, SimulateError};

/// Sub-steps used for the realized variance of one window.
pub const WINDOW_SUBSTEPS: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitError {
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Empirics(#[from] EmpiricsError),
    #[error("invalid limit-check setup: {0}")]
    BadSetup(String),
}

/// Law-of-large-numbers check for one mark power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlnReport {
    /// Mark power: 0 for counts, 1 for price components, 2 for squared marks.
    pub order: u32,
    pub horizon_used: f64,
    pub n_paths: usize,
    /// Monte Carlo mean over paths of the sup over the grid of the gap norm.
    pub sup_error: f64,
    pub sup_error_stderr: f64,
    /// Per-component limit at `v = 1`.
    pub terminal_limit: f64,
    pub pass: bool,
    pub criterion: String,
}

/// One macroscopic window `[start, end] ⊂ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowCheck {
    pub start: f64,
    pub end: f64,
    pub realized_variance: f64,
    pub stderr: f64,
    pub theoretical: f64,
    pub z_score: f64,
}

/// Brownian-limit check of the rescaled price `(f_{vT} − f₀)/√T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub horizon_used: f64,
    pub n_paths: usize,
    pub windows: Vec<WindowCheck>,
    /// Least-squares slope of log realized variance against window midpoint.
    pub log_variance_slope: Option<f64>,
    pub terminal_mean: f64,
    pub terminal_mean_stderr: f64,
    pub terminal_variance: f64,
    pub terminal_variance_stderr: f64,
    pub terminal_variance_theory: f64,
    pub normality: TestResult,
    pub pass: bool,
    pub criterion: String,
}

impl CltReport {
    /// Ratio of realized variances of windows `a` and `b`, and the ratio of
    /// their theoretical integrated variances.
    pub fn variance_ratio(&self, a: usize, b: usize) -> Option<(f64, f64)> {
        let (wa, wb) = (self.windows.get(a)?, self.windows.get(b)?);
        Some((
            wa.realized_variance / wb.realized_variance,
            wa.theoretical / wb.theoretical,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitCheckReport {
    Lln(LlnReport),
    Clt(CltReport),
}

fn scaled(params: &HawkesParams, t_scale: f64) -> Result<HawkesParams, LimitError> {
    if !(t_scale > 0.0) {
        return Err(LimitError::BadSetup(format!("T scale {t_scale}")));
    }
    Ok(params
        .with_horizon(params.horizon * t_scale)
        .validate_allow_poisson()
        .map_err(SimulateError::from)?)
}

fn mark_moment(params: &HawkesParams, order: u32) -> Result<f64, LimitError> {
    match order {
        0 => Ok(1.0),
        1 => Ok(params.mean_j),
        2 => Ok(params.mean_j2),
        _ => Err(LimitError::BadSetup(format!(
            "mark power {order} not in {{0, 1, 2}}"
        ))),
    }
}

/// Per-component limit `((I₂ − K)⁻¹ (1,1)ᵀ)ⱼ E(Jⁱ) ∫₀ᵛ μ(s) ds` with the
/// baseline normalized to `μ(s) = μ₀ e^{κ s}`.
pub fn lln_limit(params: &HawkesParams, order: u32, v: f64) -> Result<f64, LimitError> {
    let inv = params.inverse_branching_matrix();
    let row = inv[0][0] + inv[0][1];
    let integral = params.mu0 * (params.kappa * v).exp_m1() / params.kappa;
    Ok(row * mark_moment(params, order)? * integral)
}

/// Simulates `n_paths` sessions of horizon `T_scale · T` and reports, for
/// each mark power in `orders`, the Monte Carlo mean of
/// `sup_v ‖T⁻¹ Nⁱ_{vT} − limit(v)(1,1)ᵀ‖` over `v_grid`.
pub fn lln_check_orders(
    params: &HawkesParams,
    sampler: &JumpSampler,
    orders: &[u32],
    t_scale: f64,
    n_paths: usize,
    v_grid: &[f64],
    seed: u64,
) -> Result<Vec<LlnReport>, LimitError> {
    if n_paths < 2 {
        return Err(SimulateError::TooFewPaths(n_paths).into());
    }
    if v_grid.is_empty()
        || v_grid.windows(2).any(|w| w[1] < w[0])
        || v_grid.iter().any(|v| !(0.0..=1.0).contains(v))
    {
        return Err(LimitError::BadSetup(
            "v grid must be sorted inside [0, 1]".into(),
        ));
    }
    let p = scaled(params, t_scale)?;
    let horizon = p.horizon;
    let limits = orders
        .iter()
        .map(|&o| {
            v_grid
                .iter()
                .map(|&v| lln_limit(&p, o, v))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;

    let errors = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let stream = simulate_with_rng(
                &p,
                sampler,
                &mut path_rng(seed, i as u64),
                format!("lln-{i}"),
            )?;
            let events = stream.events();
            let sups = orders
                .iter()
                .zip(&limits)
                .map(|(&order, limit)| {
                    let mut k = 0;
                    let (mut up, mut down) = (0.0, 0.0);
                    let mut sup: f64 = 0.0;
                    for (&v, &l) in v_grid.iter().zip(limit) {
                        while k < events.len() && events[k].t <= v * horizon {
                            let w = events[k].mark.powi(order as i32);
                            match events[k].sign {
                                Sign::Up => up += w,
                                Sign::Down => down += w,
                            }
                            k += 1;
                        }
                        sup = sup.max((up / horizon - l).hypot(down / horizon - l));
                    }
                    sup
                })
                .collect::<Vec<f64>>();
            Ok(sups)
        })
        .collect::<Result<Vec<_>, SimulateError>>()?;

    orders
        .iter()
        .enumerate()
        .map(|(j, &order)| {
            let acc: MeanVar = errors.iter().map(|e| e[j]).collect();
            let terminal_limit = lln_limit(&p, order, 1.0)?;
            let threshold = 0.05 * terminal_limit * std::f64::consts::SQRT_2;
            Ok(LlnReport {
                order,
                horizon_used: horizon,
                n_paths,
                sup_error: acc.mean(),
                sup_error_stderr: acc.std_error(),
                terminal_limit,
                pass: acc.mean() < threshold,
                criterion: format!(
                    "mean sup error < 5% of the terminal limit norm ({threshold:.6})"
                ),
            })
        })
        .collect()
}

pub fn lln_check(
    params: &HawkesParams,
    sampler: &JumpSampler,
    order: u32,
    t_scale: f64,
    n_paths: usize,
    v_grid: &[f64],
    seed: u64,
) -> Result<LlnReport, LimitError> {
    let mut reports = lln_check_orders(params, sampler, &[order], t_scale, n_paths, v_grid, seed)?;
    Ok(reports.remove(0))
}

/// Uniform grid `0, 1/n, …, 1`.
pub fn unit_grid(n: usize) -> Vec<f64> {
    (0..=n).map(|k| k as f64 / n as f64).collect()
}

/// Simulates `n_paths` sessions of horizon `T_scale · T` and compares the
/// rescaled price with its Brownian limit: per-window realized variance
/// against the integrated squared macroscopic volatility, and a KS test of
/// the terminal value against the limiting normal law.
pub fn clt_check(
    params: &HawkesParams,
    sampler: &JumpSampler,
    t_scale: f64,
    n_paths: usize,
    windows: &[(f64, f64)],
    seed: u64,
) -> Result<CltReport, LimitError> {
    if n_paths < 2 {
        return Err(SimulateError::TooFewPaths(n_paths).into());
    }
    if let Some(w) = windows
        .iter()
        .find(|(a, b)| !(0.0 <= *a && a < b && *b <= 1.0))
    {
        return Err(LimitError::BadSetup(format!(
            "window {w:?} not inside [0, 1]"
        )));
    }
    let p = scaled(params, t_scale)?;
    let horizon = p.horizon;
    let scale = horizon.sqrt();
    let moments = Moments::new(params);

    let per_path = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let stream = simulate_with_rng(
                &p,
                sampler,
                &mut path_rng(seed, i as u64),
                format!("clt-{i}"),
            )?;
            let path = build_price_path(&stream, p.f0);
            let realized: Vec<f64> = windows
                .iter()
                .map(|&(a, b)| {
                    let times: Vec<f64> = (0..=WINDOW_SUBSTEPS)
                        .map(|k| (a + (b - a) * k as f64 / WINDOW_SUBSTEPS as f64) * horizon)
                        .collect();
                    let x = path.values_at_sorted(&times);
                    x.windows(2).map(|w| ((w[1] - w[0]) / scale).powi(2)).sum()
                })
                .collect();
            let terminal = (path.terminal_value() - p.f0) / scale;
            Ok((realized, terminal))
        })
        .collect::<Result<Vec<_>, SimulateError>>()?;

    let mut window_checks = Vec::with_capacity(windows.len());
    for (j, &(a, b)) in windows.iter().enumerate() {
        let acc: MeanVar = per_path.iter().map(|(r, _)| r[j]).collect();
        let theoretical = moments.macro_integrated_variance(a, b)?;
        window_checks.push(WindowCheck {
            start: a,
            end: b,
            realized_variance: acc.mean(),
            stderr: acc.std_error(),
            theoretical,
            z_score: (acc.mean() - theoretical) / acc.std_error(),
        });
    }
    let log_variance_slope = (window_checks.len() >= 2).then(|| {
        let xs: Vec<f64> = window_checks
            .iter()
            .map(|w| 0.5 * (w.start + w.end))
            .collect();
        let ys: Vec<f64> = window_checks
            .iter()
            .map(|w| (w.realized_variance / (w.end - w.start)).ln())
            .collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    });

    let terminals: Vec<f64> = per_path.iter().map(|(_, t)| *t).collect();
    let first: MeanVar = terminals.iter().copied().collect();
    let squares: MeanVar = terminals.iter().map(|x| x * x).collect();
    let variance_theory = moments.macro_integrated_variance(0.0, 1.0)?;
    let law = Normal::new(0.0, variance_theory.sqrt())
        .map_err(|e| LimitError::BadSetup(e.to_string()))?;
    let normality = ks_test_one_sample(&terminals, |x| law.cdf(x))?;

    let windows_ok = window_checks.iter().all(|w| w.z_score.abs() <= 3.0);
    Ok(CltReport {
        horizon_used: horizon,
        n_paths,
        windows: window_checks,
        log_variance_slope,
        terminal_mean: first.mean(),
        terminal_mean_stderr: first.std_error(),
        terminal_variance: squares.mean(),
        terminal_variance_stderr: squares.std_error(),
        terminal_variance_theory: variance_theory,
        normality,
        pass: windows_ok && !normality.rejected_at_95,
        criterion:
            "every window within 3 standard errors and terminal normality not rejected at 95%"
                .into(),
    })
}
