use std::collections::BTreeMap;
use std::path::Path;

use hawkes_intraday::analytics::{
    macro_volatility, moment_curve, signature_curve, signature_plot_stationary, stationary_macro,
    stationary_micro, Moments,
};
use hawkes_intraday::empirics::{
    average_cumulative_counts, epps_correlation, jump_moment_profile, kernel_intensity,
    ks_test_exponential, ks_test_two_sample, time_change_residuals, GridSeries, TestResult,
};
use hawkes_intraday::estimate::{
    averaged_signature_plot, extract_events, fit_mle, init_from_stationary_sigplot, jump_moments,
    log_likelihood, FitOptions, FitResult, JumpMoments, MarkMoments, SessionData, SigplotInit,
};
use hawkes_intraday::limits::{clt_check, lln_check_orders, unit_grid, LimitCheckReport};
use hawkes_intraday::model::SECONDS_PER_HOUR;
use hawkes_intraday::simulate::{
    build_price_path, monte_carlo_report, path_rng, sample_to_grid, simulate_with_rng, JumpSampler,
    McProbes, McSeeding,
};
use hawkes_intraday::{CurveTable, EventStream, HawkesParams, Sign};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{Command, ParamArgs, Preset, SessionArgs};
use crate::config::{Config, DEFAULT_OUT_DIR, DEFAULT_SEED, DEFAULT_WINDOW};
use crate::error::CliError;
use crate::ingest::ingest;
use crate::io::{expand, read_events, OutDir};

const DAY_MS: i64 = 86_400_000;

pub struct Context {
    pub seed: u64,
    pub out: OutDir,
    /// Hours before delivery at which the analysis window starts and ends.
    pub window: (f64, f64),
    pub config: Config,
}

impl Context {
    pub fn new(
        config: Config,
        seed: Option<u64>,
        out_dir: Option<&Path>,
        window: Option<&str>,
    ) -> Result<Self, CliError> {
        let window = window
            .or(config.window.as_deref())
            .unwrap_or(DEFAULT_WINDOW);
        let window = crate::config::parse_window(window)?;
        let out_dir = out_dir
            .or(config.out_dir.as_deref())
            .unwrap_or_else(|| Path::new(DEFAULT_OUT_DIR));
        Ok(Context {
            seed: seed.or(config.seed).unwrap_or(DEFAULT_SEED),
            out: OutDir::create(out_dir)?,
            window,
            config,
        })
    }
}

pub fn run(ctx: &Context, command: &Command) -> Result<(), CliError> {
    match command {
        Command::Sim {
            params,
            sampler,
            n_paths,
            grid_step,
            mc,
            times,
            deltas,
            no_events,
        } => {
            let p = ctx.config.params(params, Preset::H18)?;
            let sampler = ctx.config.sampler(*sampler, &p)?;
            let opts = SimOptions {
                n_paths: *n_paths,
                grid_step: *grid_step,
                mc: mc.then(|| McProbes {
                    times: times.clone(),
                    signature_time: p.horizon,
                    deltas: deltas.iter().map(|d| d / SECONDS_PER_HOUR).collect(),
                }),
                write_events: !no_events,
            };
            sim(ctx, &p, &sampler, &opts)
        }
        Command::Fit {
            sessions,
            init,
            kappa0,
            max_iters,
        } => fit(ctx, sessions, init, *kappa0, *max_iters),
        Command::Moments { params, points } => {
            moments(ctx, &ctx.config.params(params, Preset::H18)?, *points)
        }
        Command::Sigplot {
            params,
            sessions,
            t,
            max_delta,
        } => sigplot(
            ctx,
            &ctx.config.params(params, Preset::H18)?,
            sessions,
            *t,
            *max_delta,
        ),
        Command::Diagnose {
            sessions,
            bandwidth,
            points,
            cutoffs,
            pair,
            epps_deltas,
        } => diagnose(
            ctx,
            sessions,
            &DiagnoseOptions {
                bandwidth: *bandwidth,
                points: *points,
                cutoffs,
                pair: pair.as_deref(),
                epps_deltas,
            },
        ),
        Command::Limits {
            params,
            sampler,
            scales,
            orders,
            n_paths,
            grid_points,
            clt_scale,
            clt_paths,
        } => {
            let p = ctx.config.params(params, Preset::Base)?;
            let sampler = ctx.config.sampler(*sampler, &p)?;
            limits(
                ctx,
                &p,
                &sampler,
                &LimitOptions {
                    scales,
                    orders,
                    n_paths: *n_paths,
                    grid_points: *grid_points,
                    clt_scale: *clt_scale,
                    clt_paths: *clt_paths,
                },
            )
        }
    }
}

struct SimOptions {
    n_paths: usize,
    grid_step: Option<f64>,
    mc: Option<McProbes>,
    write_events: bool,
}

#[derive(Serialize)]
struct SimSummary<'a> {
    params: &'a HawkesParams,
    sampler: &'a JumpSampler,
    seed: u64,
    n_paths: usize,
    event_counts: Vec<usize>,
}

fn hours_to_seconds(mut table: CurveTable) -> CurveTable {
    table
        .abscissa
        .iter_mut()
        .for_each(|x| *x *= SECONDS_PER_HOUR);
    table
}

/// Grid origin placing a simulated session so that it ends at the end of
/// the analysis window of a nominal delivery; re-ingesting the grid with
/// the same session rule recovers the events.
fn nominal_grid_origin(ctx: &Context, horizon: f64) -> Result<i64, CliError> {
    let rule = ctx.config.session_rule(&SessionArgs::default())?;
    let delivery = DAY_MS + rule.delivery_time_ms;
    Ok(delivery - ((ctx.window.1 + horizon) * 3_600_000.0).round() as i64)
}

fn sim(
    ctx: &Context,
    p: &HawkesParams,
    sampler: &JumpSampler,
    opts: &SimOptions,
) -> Result<(), CliError> {
    if opts.n_paths == 0 {
        return Err(CliError::Usage("--n-paths must be positive".into()));
    }
    sampler.warn_if_inconsistent(p);
    let streams = (0..opts.n_paths)
        .into_par_iter()
        .map(|i| {
            simulate_with_rng(
                p,
                sampler,
                &mut path_rng(ctx.seed, i as u64),
                format!("session_{i:05}"),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;

    if opts.write_events {
        let dir = OutDir::create(&ctx.out.file("events"))?;
        for s in &streams {
            dir.events(&format!("{}.csv", s.session_id), s)?;
        }
    }
    if let Some(step) = opts.grid_step {
        if (ctx.window.0 - ctx.window.1 - p.horizon).abs() > 1e-9 {
            log::warn!(
                "horizon {}h differs from the analysis window; grids end at the window end",
                p.horizon
            );
        }
        let t0 = nominal_grid_origin(ctx, p.horizon)?;
        let dir = OutDir::create(&ctx.out.file("grids"))?;
        for s in &streams {
            let mut g = sample_to_grid(&build_price_path(s, p.f0), step)?;
            g.t0_ms = t0;
            dir.grid(&format!("{}.csv", s.session_id), &g)?;
        }
    }
    if let Some(probes) = &opts.mc {
        let report =
            monte_carlo_report(p, sampler, opts.n_paths, probes, McSeeding::Split(ctx.seed))?;
        ctx.out.curve("mc_mean_f_plus.csv", &report.mean_up)?;
        ctx.out.curve("mc_mean_f_minus.csv", &report.mean_down)?;
        ctx.out
            .curve("mc_second_moment.csv", &report.second_moment)?;
        ctx.out.curve("mc_event_count.csv", &report.event_count)?;
        ctx.out.curve(
            "mc_signature_plot.csv",
            &hours_to_seconds(report.signature_plot),
        )?;
    }
    ctx.out.json(
        "sim.json",
        &SimSummary {
            params: p,
            sampler,
            seed: ctx.seed,
            n_paths: opts.n_paths,
            event_counts: streams.iter().map(EventStream::len).collect(),
        },
    )?;
    Ok(())
}

struct Loaded {
    sessions: Vec<SessionData>,
    /// Price grids restricted to the analysis window.
    grids: Vec<GridSeries>,
}

fn window_slice(grid: &GridSeries, start_s: f64, end_s: f64) -> Result<GridSeries, CliError> {
    let step = grid.step_seconds;
    let lo = (start_s / step + 1e-9).floor().max(0.0) as usize;
    let hi = ((end_s / step + 1e-9).floor() as usize).min(grid.values.len() - 1);
    let t0 = grid.t0_ms + (lo as f64 * step * 1000.0).round() as i64;
    Ok(GridSeries::new(
        t0,
        step,
        grid.values[lo..=hi].to_vec(),
        grid.label.clone(),
    )?)
}

fn load_sessions(ctx: &Context, args: &SessionArgs) -> Result<Loaded, CliError> {
    let loaded: Vec<(SessionData, GridSeries)> = match (&args.ticks, &args.events) {
        (Some(pattern), None) => {
            let rule = ctx.config.session_rule(args)?;
            let (start_h, end_h) = ctx.window;
            expand(pattern)?
                .par_iter()
                .map(|path| {
                    let (grid, spec) = ingest(path, &rule)?;
                    let (start, end) = (spec.offset_seconds(start_h), spec.offset_seconds(end_h));
                    let stream = extract_events(&grid, start, end)
                        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                    Ok((SessionData::from(stream), window_slice(&grid, start, end)?))
                })
                .collect::<Result<_, CliError>>()?
        }
        (None, Some(pattern)) => expand(pattern)?
            .par_iter()
            .map(|path| {
                let stream = read_events(path)?;
                let grid = sample_to_grid(&build_price_path(&stream, 0.0), 1.0)?;
                Ok((SessionData::from(stream), grid))
            })
            .collect::<Result<_, CliError>>()?,
        _ => {
            return Err(CliError::Usage(
                "pass exactly one of --ticks or --events".into(),
            ))
        }
    };
    log::info!(
        "loaded {} sessions with {} events",
        loaded.len(),
        loaded.iter().map(|(s, _)| s.stream.len()).sum::<usize>()
    );
    let (sessions, grids) = loaded.into_iter().unzip();
    Ok(Loaded { sessions, grids })
}

fn has_params(flags: &ParamArgs, config: &Config) -> bool {
    let c = &config.params;
    let from_config = c.preset.is_some()
        || [
            c.mu0, c.kappa, c.alpha, c.beta, c.horizon, c.mean_j, c.mean_j2, c.f0,
        ]
        .iter()
        .any(Option::is_some);
    let from_flags = flags.preset.is_some()
        || [
            flags.mu0,
            flags.kappa,
            flags.alpha,
            flags.beta,
            flags.horizon,
            flags.mean_j,
            flags.mean_j2,
            flags.f0,
        ]
        .iter()
        .any(Option::is_some);
    from_config || from_flags
}

#[derive(Serialize)]
struct FitReport<'a> {
    fit: &'a FitResult,
    jump_moments: JumpMoments,
    sigplot_init: Option<SigplotInit>,
    window_hours_before_delivery: (f64, f64),
}

fn fit(
    ctx: &Context,
    args: &SessionArgs,
    init: &ParamArgs,
    kappa0: f64,
    max_iters: u64,
) -> Result<(), CliError> {
    let loaded = load_sessions(ctx, args)?;
    let sessions = &loaded.sessions;
    let (start, sigplot_init) = if has_params(init, &ctx.config) {
        (ctx.config.params(init, Preset::H18)?, None)
    } else {
        let s = init_from_stationary_sigplot(sessions, kappa0)?;
        log::info!(
            "signature-plot start {:?} (objective {:.4e})",
            s.params,
            s.objective
        );
        (s.params, Some(s))
    };
    let options = FitOptions {
        max_iters,
        ..FitOptions::default()
    };
    let result = fit_mle(sessions, &start, &options)?;
    if !result.converged {
        log::warn!(
            "optimizer stopped after {} iterations without converging",
            result.iterations
        );
    }
    let p = &result.params;
    println!(
        "mu0={} kappa={} alpha={} beta={} loglik={} converged={}",
        p.mu0, p.kappa, p.alpha, p.beta, result.loglik, result.converged
    );
    ctx.out.json(
        "fit.json",
        &FitReport {
            fit: &result,
            jump_moments: jump_moments(sessions)?,
            sigplot_init,
            window_hours_before_delivery: ctx.window,
        },
    )?;
    let mut table = String::from("session,n_events,loglik\n");
    for s in sessions {
        let ll = log_likelihood(p, s)?;
        table.push_str(&format!(
            "{},{},{ll}\n",
            s.stream.session_id,
            s.stream.len()
        ));
    }
    ctx.out.text("loglik_by_session.csv", &table)?;
    Ok(())
}

fn moments(ctx: &Context, p: &HawkesParams, points: usize) -> Result<(), CliError> {
    if points == 0 {
        return Err(CliError::Usage("--points must be positive".into()));
    }
    let m = Moments::new(p);
    let times: Vec<f64> = unit_grid(points).iter().map(|v| v * p.horizon).collect();
    ctx.out.curve(
        "mean_intensity.csv",
        &moment_curve("mean_intensity", &times, |t| m.mean_intensity(t))?,
    )?;
    ctx.out.curve(
        "mean_count.csv",
        &moment_curve("mean_count", &times, |t| m.mean_count(t))?,
    )?;
    ctx.out.curve(
        "mean_price_component.csv",
        &moment_curve("mean_price_component", &times, |t| {
            m.mean_price_component(t)
        })?,
    )?;
    ctx.out.curve(
        "second_moment.csv",
        &moment_curve("second_moment", &times, |t| m.second_moment(t))?,
    )?;
    ctx.out.curve(
        "price_variance.csv",
        &moment_curve("price_variance", &times, |t| m.price_variance(t))?,
    )?;
    let v = unit_grid(points);
    ctx.out.curve(
        "macro_volatility.csv",
        &moment_curve("macro_volatility", &v, |x| macro_volatility(p, x))?,
    )?;
    ctx.out.json("params.json", p)?;
    Ok(())
}

#[derive(Serialize)]
struct SigplotSummary {
    t: f64,
    micro: f64,
    macro_level: f64,
    stationary_micro: f64,
    stationary_macro: f64,
}

fn sigplot(
    ctx: &Context,
    p: &HawkesParams,
    args: &SessionArgs,
    t: Option<f64>,
    max_delta: usize,
) -> Result<(), CliError> {
    if max_delta == 0 {
        return Err(CliError::Usage("--max-delta must be positive".into()));
    }
    let t = t.unwrap_or(p.horizon);
    let deltas: Vec<f64> = (1..=max_delta)
        .map(|k| k as f64 / SECONDS_PER_HOUR)
        .collect();
    let theory = signature_curve(p, t, &deltas)?;
    ctx.out
        .curve("sigplot_theory.csv", &hours_to_seconds(theory))?;
    let stationary = moment_curve("signature_plot_stationary", &deltas, |d| {
        signature_plot_stationary(p, d)
    })?;
    ctx.out
        .curve("sigplot_stationary.csv", &hours_to_seconds(stationary))?;
    let m = Moments::new(p);
    ctx.out.json(
        "sigplot.json",
        &SigplotSummary {
            t,
            micro: m.signature_plot_micro(t)?,
            macro_level: m.signature_plot_macro(t)?,
            stationary_micro: stationary_micro(p),
            stationary_macro: stationary_macro(p),
        },
    )?;
    if args.ticks.is_some() || args.events.is_some() {
        let loaded = load_sessions(ctx, args)?;
        ctx.out.curve(
            "sigplot_empirical.csv",
            &averaged_signature_plot(&loaded.sessions, max_delta)?,
        )?;
    }
    Ok(())
}

struct DiagnoseOptions<'a> {
    bandwidth: f64,
    points: usize,
    cutoffs: &'a [f64],
    pair: Option<&'a str>,
    epps_deltas: &'a [f64],
}

#[derive(Serialize)]
struct SessionTest {
    session: String,
    test: TestResult,
}

#[derive(Serialize)]
struct KsReport {
    pooled: TestResult,
    rejection_rate: f64,
    up_vs_down_marks: Option<TestResult>,
    sessions: Vec<SessionTest>,
}

fn common_horizon(sessions: &[SessionData]) -> Result<f64, CliError> {
    let h = sessions
        .first()
        .ok_or_else(|| CliError::Data("no sessions".into()))?
        .horizon;
    if sessions.iter().any(|s| (s.horizon - h).abs() > 1e-9) {
        return Err(CliError::Data("sessions have different horizons".into()));
    }
    Ok(h)
}

fn exp_qq(residuals: &[f64]) -> Result<CurveTable, CliError> {
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let quantiles = (0..sorted.len())
        .map(|i| -(1.0 - (i as f64 + 0.5) / n).ln())
        .collect();
    Ok(CurveTable::new("time_change_qq", quantiles, sorted)?)
}

fn mark_row(group: &str, m: &MarkMoments) -> String {
    format!(
        "{group},{},{},{},{},{},{},{}\n",
        m.n,
        m.mean_j.value,
        m.mean_j.ci_low,
        m.mean_j.ci_high,
        m.mean_j2.value,
        m.mean_j2.ci_low,
        m.mean_j2.ci_high
    )
}

fn diagnose(ctx: &Context, args: &SessionArgs, opts: &DiagnoseOptions) -> Result<(), CliError> {
    if opts.points == 0 {
        return Err(CliError::Usage("--points must be positive".into()));
    }
    let loaded = load_sessions(ctx, args)?;
    let sessions = &loaded.sessions;
    let horizon = common_horizon(sessions)?;
    let streams: Vec<EventStream> = sessions.iter().map(|s| s.stream.clone()).collect();

    let t_grid: Vec<f64> = unit_grid(opts.points).iter().map(|v| v * horizon).collect();
    let kernels = streams
        .par_iter()
        .map(|s| {
            kernel_intensity(
                &s.times().collect::<Vec<_>>(),
                horizon,
                opts.bandwidth,
                &t_grid,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    ctx.out.curve(
        "kernel_intensity.csv",
        &CurveTable::average("kernel_intensity", &kernels)?,
    )?;
    ctx.out.curve(
        "cumulative_counts.csv",
        &average_cumulative_counts(&streams, &t_grid)?,
    )?;

    let seconds = (horizon * SECONDS_PER_HOUR).round().max(1.0) as usize;
    let fine: Vec<f64> = unit_grid(seconds).iter().map(|v| v * horizon).collect();
    let cum = average_cumulative_counts(&streams, &fine)?;
    let per_session = streams
        .par_iter()
        .map(|s| {
            let times: Vec<f64> = s.times().collect();
            let r = time_change_residuals(&times, &cum)?;
            let test = if r.residuals.is_empty() {
                None
            } else {
                Some(ks_test_exponential(&r.residuals)?)
            };
            Ok((r.residuals, test))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let pooled: Vec<f64> = per_session
        .iter()
        .flat_map(|(r, _)| r.iter().copied())
        .collect();
    if pooled.is_empty() {
        return Err(CliError::Data("no events in any session".into()));
    }
    ctx.out.curve("time_change_qq.csv", &exp_qq(&pooled)?)?;
    let tests: Vec<SessionTest> = streams
        .iter()
        .zip(&per_session)
        .filter_map(|(s, (_, t))| {
            t.map(|test| SessionTest {
                session: s.session_id.clone(),
                test,
            })
        })
        .collect();
    let marks = |sign| -> Vec<f64> {
        streams
            .iter()
            .flat_map(|s| {
                s.events()
                    .iter()
                    .filter(move |e| e.sign == sign)
                    .map(|e| e.mark)
            })
            .collect()
    };
    let (up, down) = (marks(Sign::Up), marks(Sign::Down));
    ctx.out.json(
        "ks.json",
        &KsReport {
            pooled: ks_test_exponential(&pooled)?,
            rejection_rate: tests.iter().filter(|t| t.test.rejected_at_95).count() as f64
                / tests.len().max(1) as f64,
            up_vs_down_marks: if up.is_empty() || down.is_empty() {
                None
            } else {
                Some(ks_test_two_sample(&up, &down)?)
            },
            sessions: tests,
        },
    )?;

    let profile = jump_moment_profile(&streams, ctx.window.1, opts.cutoffs)?;
    ctx.out.curve("jump_profile_mean.csv", &profile.mean)?;
    ctx.out.curve("jump_profile_sd.csv", &profile.sd)?;
    ctx.out.curve("jump_profile_count.csv", &profile.count)?;

    let jm = jump_moments(sessions)?;
    let mut table =
        String::from("group,n,mean_j,mean_j_low,mean_j_high,mean_j2,mean_j2_low,mean_j2_high\n");
    table.push_str(&mark_row("all", &jm.pooled));
    for (group, m) in [("up", &jm.up), ("down", &jm.down)] {
        if let Some(m) = m {
            table.push_str(&mark_row(group, m));
        }
    }
    ctx.out.text("jump_moments.csv", &table)?;

    if let Some(pattern) = opts.pair {
        let other = load_sessions(
            ctx,
            &SessionArgs {
                ticks: args.ticks.as_ref().map(|_| pattern.to_string()),
                events: args.events.as_ref().map(|_| pattern.to_string()),
                ..args.clone()
            },
        )?;
        if other.grids.len() != loaded.grids.len() {
            return Err(CliError::Data(format!(
                "{} sessions but {} paired sessions",
                loaded.grids.len(),
                other.grids.len()
            )));
        }
        let curves = loaded
            .grids
            .par_iter()
            .zip(&other.grids)
            .map(|(a, b)| epps_correlation(a, b, opts.epps_deltas))
            .collect::<Result<Vec<_>, _>>()?;
        ctx.out
            .curve("epps.csv", &CurveTable::average("epps", &curves)?)?;
    }
    Ok(())
}

struct LimitOptions<'a> {
    scales: &'a [f64],
    orders: &'a [u32],
    n_paths: usize,
    grid_points: usize,
    clt_scale: f64,
    clt_paths: usize,
}

#[derive(Serialize)]
struct LimitsOutput {
    lln: Vec<LimitCheckReport>,
    /// Per mark power, whether the sup error falls as the horizon grows.
    lln_decreasing: BTreeMap<u32, bool>,
    clt: LimitCheckReport,
}

fn limits(
    ctx: &Context,
    p: &HawkesParams,
    sampler: &JumpSampler,
    opts: &LimitOptions,
) -> Result<(), CliError> {
    if opts.grid_points == 0 {
        return Err(CliError::Usage("--grid-points must be positive".into()));
    }
    let v_grid = unit_grid(opts.grid_points);
    let mut by_scale = Vec::with_capacity(opts.scales.len());
    for &scale in opts.scales {
        by_scale.push(lln_check_orders(
            p,
            sampler,
            opts.orders,
            scale,
            opts.n_paths,
            &v_grid,
            ctx.seed,
        )?);
    }
    let lln_decreasing = opts
        .orders
        .iter()
        .enumerate()
        .map(|(k, &order)| {
            let errors: Vec<f64> = by_scale.iter().map(|r| r[k].sup_error).collect();
            (order, errors.windows(2).all(|w| w[1] < w[0]))
        })
        .collect();
    let windows: Vec<(f64, f64)> = (0..10)
        .map(|k| (k as f64 / 10.0, (k + 1) as f64 / 10.0))
        .collect();
    let clt = clt_check(
        p,
        sampler,
        opts.clt_scale,
        opts.clt_paths,
        &windows,
        ctx.seed,
    )?;
    for r in by_scale.iter().flatten() {
        log::info!("{}", r.criterion);
    }
    log::info!("{}", clt.criterion);
    ctx.out.json(
        "limits.json",
        &LimitsOutput {
            lln: by_scale
                .into_iter()
                .flatten()
                .map(LimitCheckReport::Lln)
                .collect(),
            lln_decreasing,
            clt: LimitCheckReport::Clt(clt),
        },
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::SessionRule;
    use hawkes_intraday::MarkedEvent;

    #[test]
    fn emitted_grid_reingests_to_the_same_events() {
        let dir = tempfile::tempdir().unwrap();
        let ctx = Context::new(Config::default(), None, Some(dir.path()), None).unwrap();
        let events: Vec<MarkedEvent> = (0..40)
            .map(|k| {
                let sign = if k % 3 == 0 { Sign::Down } else { Sign::Up };
                MarkedEvent::new(
                    (k as f64 * 613.0 + 0.5) / SECONDS_PER_HOUR,
                    sign,
                    0.05 + 0.01 * k as f64,
                )
            })
            .collect();
        let stream = EventStream::new("s", 8.0, events.clone()).unwrap();
        let mut grid = sample_to_grid(&build_price_path(&stream, 40.0), 1.0).unwrap();
        grid.t0_ms = nominal_grid_origin(&ctx, 8.0).unwrap();
        let path = ctx.out.grid("s.csv", &grid).unwrap();

        let (full, spec) = ingest(&path, &SessionRule::default()).unwrap();
        let (start, end) = (spec.offset_seconds(9.0), spec.offset_seconds(1.0));
        assert_eq!(window_slice(&full, start, end).unwrap().values, grid.values);

        let back = extract_events(&full, start, end).unwrap();
        assert_eq!(back.horizon, 8.0);
        assert_eq!(back.len(), events.len());
        for (a, b) in back.events().iter().zip(&events) {
            assert_eq!(a.sign, b.sign);
            assert!((a.mark - b.mark).abs() < 1e-9);
            assert!((a.t - (b.t * SECONDS_PER_HOUR).ceil() / SECONDS_PER_HOUR).abs() < 1e-9);
        }
    }

    #[test]
    fn window_slice_bounds() {
        let g = GridSeries::new(1_000, 1.0, (0..10).map(f64::from).collect(), "g").unwrap();
        let w = window_slice(&g, 2.0, 5.0).unwrap();
        assert_eq!(w.values, vec![2.0, 3.0, 4.0, 5.0]);
        assert_eq!(w.t0_ms, 3_000);
    }

    #[test]
    fn qq_quantiles() {
        let qq = exp_qq(&[3.0, 1.0]).unwrap();
        assert_eq!(qq.values, vec![1.0, 3.0]);
        assert!((qq.abscissa[0] - -(0.75f64).ln()).abs() < 1e-15);
    }
}
