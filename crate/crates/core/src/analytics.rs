//! Closed-form moments and signature plots of the marked Hawkes price.
//!
//! With `c = κ/T`, `a = α E[J]`, `p = β − a` and `q = β + a`:
//!
//! ```text
//! E[λ⁺_t]      = μ₀ ((β + c)/(p + c) e^{ct} − a/(p + c) e^{−pt})
//! E[f⁺_t]      = E[J] ∫₀ᵗ E[λ⁺_s] ds
//! E[f_t²] − f₀² = 2 μ₀ E[J²] ((C₁+C₂+C₃+C₄) e^{ct} − C₁ e^{−pt} − C₂ e^{−2qt} − C₃ e^{−qt} − C₄)
//! E[(f_t − f_s)²] = E[f_t²] − E[f_s²] − (1 − e^{−q(t−s)})/q · (d/ds E[f_s²] − 2 E[J²] E[λ⁺_s])
//! ```
//!
//! Expressions are rearranged with `expm1` so that small times do not lose
//! precision; they are algebraically identical to the forms above. All
//! functions accept `alpha == 0`, the compound Poisson limit.

use thiserror::Error;

use crate::curve::{CurveError, CurveTable};
use crate::model::HawkesParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("expected s < t, got s={s}, t={t}")]
    TimeOrderViolation { s: f64, t: f64 },
    #[error("bad sampling window: delta={delta} for t={t}")]
    BadWindow { t: f64, delta: f64 },
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Relative tolerance used to snap `t/δ` to an integer.
pub const FLOOR_SNAP: f64 = 1e-12;

/// `⌊x⌋`, except that values within [`FLOOR_SNAP`] (relative) of an integer
/// are rounded to it.
pub fn snapped_floor(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= FLOOR_SNAP * x.abs().max(1.0) {
        r.max(0.0) as u64
    } else {
        x.floor().max(0.0) as u64
    }
}

/// `Σ_{i=0}^{n−1} e^{x i}`.
fn geometric_sum(x: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let d = x.exp_m1();
    if d == 0.0 {
        n as f64
    } else {
        (x * n as f64).exp_m1() / d
    }
}

/// Precomputed constants of the moment formulas for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    params: HawkesParams,
    c: f64,
    a: f64,
    p: f64,
    q: f64,
    c1: f64,
    c2: f64,
    c3: f64,
    c4: f64,
    r: f64,
}

impl Moments {
    pub fn new(params: &HawkesParams) -> Self {
        let HawkesParams {
            alpha,
            beta,
            mean_j,
            horizon,
            kappa,
            ..
        } = *params;
        let c = kappa / horizon;
        let a = alpha * mean_j;
        let p = beta - a;
        let q = beta + a;
        let c1 = -a * a / (p * (beta + 3.0 * a) * (p + c));
        let c2 = a * a * (beta + 2.0 * a) / (q * q * (beta + 3.0 * a) * (2.0 * q + c));
        let c3 = alpha * beta * mean_j / (q * q * (q + c));
        let c4 = beta.powi(3) / (c * q * q * p);
        Moments {
            params: *params,
            c,
            a,
            p,
            q,
            c1,
            c2,
            c3,
            c4,
            r: a / beta,
        }
    }

    pub fn params(&self) -> &HawkesParams {
        &self.params
    }

    /// The four constants `C₁..C₄` of the second-moment formula.
    pub fn constants(&self) -> [f64; 4] {
        [self.c1, self.c2, self.c3, self.c4]
    }

    fn check_time(&self, t: f64) -> Result<(), AnalyticsError> {
        let h = self.params.horizon;
        if t >= 0.0 && t <= h * (1.0 + FLOOR_SNAP) {
            Ok(())
        } else {
            Err(AnalyticsError::TimeOutOfRange { t, horizon: h })
        }
    }

    fn intensity_unchecked(&self, t: f64) -> f64 {
        let HawkesParams { mu0, beta, .. } = self.params;
        let denom = self.p + self.c;
        mu0 * ((beta + self.c) / denom * (self.c * t).exp() - self.a / denom * (-self.p * t).exp())
    }

    fn variance_unchecked(&self, t: f64) -> f64 {
        let ect = (self.c * t).exp_m1();
        let bracket = self.c1 * (ect - (-self.p * t).exp_m1())
            + self.c2 * (ect - (-2.0 * self.q * t).exp_m1())
            + self.c3 * (ect - (-self.q * t).exp_m1())
            + self.c4 * ect;
        2.0 * self.params.mu0 * self.params.mean_j2 * bracket
    }

    fn variance_derivative_unchecked(&self, t: f64) -> f64 {
        let s = self.c1 + self.c2 + self.c3 + self.c4;
        let bracket = s * self.c * (self.c * t).exp()
            + self.c1 * self.p * (-self.p * t).exp()
            + 2.0 * self.q * self.c2 * (-2.0 * self.q * t).exp()
            + self.q * self.c3 * (-self.q * t).exp();
        2.0 * self.params.mu0 * self.params.mean_j2 * bracket
    }

    /// Exponential-sum form of `d/ds E[f_s²] − 2 E[J²] E[λ⁺_s]` as
    /// `(weight, rate)` pairs.
    fn correction_terms(&self) -> [(f64, f64); 4] {
        let HawkesParams {
            mu0, beta, mean_j2, ..
        } = self.params;
        let scale = 2.0 * mu0 * mean_j2;
        let s = self.c1 + self.c2 + self.c3 + self.c4;
        let denom = self.p + self.c;
        [
            (scale * (s * self.c - (beta + self.c) / denom), self.c),
            (scale * (self.c1 * self.p + self.a / denom), -self.p),
            (scale * 2.0 * self.q * self.c2, -2.0 * self.q),
            (scale * self.q * self.c3, -self.q),
        ]
    }

    /// `E[λ⁺_t] = E[λ⁻_t]`.
    pub fn mean_intensity(&self, t: f64) -> Result<f64, AnalyticsError> {
        self.check_time(t)?;
        Ok(self.intensity_unchecked(t))
    }

    /// `E[∫₀ᵗ λ⁺_s ds]`, the expected number of upward moves by time `t`.
    pub fn mean_count(&self, t: f64) -> Result<f64, AnalyticsError> {
        self.check_time(t)?;
        let HawkesParams { mu0, beta, .. } = self.params;
        let denom = self.p + self.c;
        let growth = (beta + self.c) / denom * (self.c * t).exp_m1() / self.c;
        let transient = self.a / denom * (-(-self.p * t).exp_m1()) / self.p;
        Ok(mu0 * (growth - transient))
    }

    /// `E[f⁺_t] = E[f⁻_t]`.
    pub fn mean_price_component(&self, t: f64) -> Result<f64, AnalyticsError> {
        Ok(self.params.mean_j * self.mean_count(t)?)
    }

    /// `E[f_t²] − f₀²`, the variance of the price at `t`.
    pub fn price_variance(&self, t: f64) -> Result<f64, AnalyticsError> {
        self.check_time(t)?;
        Ok(self.variance_unchecked(t))
    }

    /// `E[f_t²]`.
    pub fn second_moment(&self, t: f64) -> Result<f64, AnalyticsError> {
        let f0 = self.params.f0;
        Ok(f0 * f0 + self.price_variance(t)?)
    }

    /// `d/ds E[f_s²]`, differentiated term by term.
    pub fn second_moment_derivative(&self, s: f64) -> Result<f64, AnalyticsError> {
        self.check_time(s)?;
        Ok(self.variance_derivative_unchecked(s))
    }

    /// `d/ds E[f_s²] − 2 E[J²] E[λ⁺_s]`; zero when there is no excitation.
    pub fn correction_bracket(&self, s: f64) -> Result<f64, AnalyticsError> {
        self.check_time(s)?;
        Ok(self
            .correction_terms()
            .iter()
            .map(|&(w, rate)| w * (rate * s).exp())
            .sum())
    }

    /// `E[(f_t − f_s)²]` for `0 ≤ s < t ≤ T`.
    pub fn increment_second_moment(&self, s: f64, t: f64) -> Result<f64, AnalyticsError> {
        if !(s < t) {
            return Err(AnalyticsError::TimeOrderViolation { s, t });
        }
        self.check_time(s)?;
        self.check_time(t)?;
        let decay = -(-self.q * (t - s)).exp_m1() / self.q;
        Ok(self.variance_unchecked(t)
            - self.variance_unchecked(s)
            - decay * self.correction_bracket(s)?)
    }

    /// Expected realized variance per unit time, `C(t, δ)`, summing the
    /// `⌊t/δ⌋` complete increments of length `δ` inside `[0, t]`.
    pub fn signature_plot(&self, t: f64, delta: f64) -> Result<f64, AnalyticsError> {
        if !(delta > 0.0) || !(t > 0.0) || delta > t * (1.0 + FLOOR_SNAP) {
            return Err(AnalyticsError::BadWindow { t, delta });
        }
        self.check_time(t)?;
        let n = snapped_floor(t / delta).max(1);
        let mut end = n as f64 * delta;
        if (end - t).abs() <= FLOOR_SNAP * t {
            end = t;
        }
        let sum: f64 = self
            .correction_terms()
            .iter()
            .map(|&(w, rate)| w * geometric_sum(rate * delta, n))
            .sum();
        let decay = -(-self.q * delta).exp_m1() / self.q;
        Ok((self.variance_unchecked(end) - decay * sum) / t)
    }

    /// High-frequency limit `δ → 0`: `2 E[J²] E[∫₀ᵗ λ⁺] / t`.
    pub fn signature_plot_micro(&self, t: f64) -> Result<f64, AnalyticsError> {
        self.check_time(t)?;
        let j2 = self.params.mean_j2;
        if t == 0.0 {
            return Ok(2.0 * j2 * self.params.mu0);
        }
        Ok(2.0 * j2 * self.mean_count(t)? / t)
    }

    /// Low-frequency regime `δ → ∞, δ/t → 0`.
    pub fn signature_plot_macro(&self, t: f64) -> Result<f64, AnalyticsError> {
        self.check_time(t)?;
        let avg_baseline = if t == 0.0 {
            self.params.mu0
        } else {
            self.params.integrated_baseline(t) / t
        };
        Ok(self.macro_factor() * avg_baseline)
    }

    /// `2 E[J²] / ((1 + r)² (1 − r))`.
    pub fn macro_factor(&self) -> f64 {
        let r = self.r;
        2.0 * self.params.mean_j2 / ((1.0 + r) * (1.0 + r) * (1.0 - r))
    }

    /// Instantaneous squared volatility of the Brownian limit at macroscopic
    /// time `v ∈ [0, 1]`.
    pub fn macro_volatility(&self, v: f64) -> Result<f64, AnalyticsError> {
        if !(0.0..=1.0).contains(&v) {
            return Err(AnalyticsError::TimeOutOfRange { t: v, horizon: 1.0 });
        }
        Ok(self.macro_factor() * self.params.mu0 * (self.params.kappa * v).exp())
    }

    /// `∫_{v0}^{v1} (σ^macro)²(u) du`.
    pub fn macro_integrated_variance(&self, v0: f64, v1: f64) -> Result<f64, AnalyticsError> {
        for v in [v0, v1] {
            if !(0.0..=1.0).contains(&v) {
                return Err(AnalyticsError::TimeOutOfRange { t: v, horizon: 1.0 });
            }
        }
        if v1 < v0 {
            return Err(AnalyticsError::TimeOrderViolation { s: v0, t: v1 });
        }
        let k = self.params.kappa;
        let integral = (k * v0).exp() * (k * (v1 - v0)).exp_m1() / k;
        Ok(self.macro_factor() * self.params.mu0 * integral)
    }
}

pub fn mean_price_component(params: &HawkesParams, t: f64) -> Result<f64, AnalyticsError> {
    Moments::new(params).mean_price_component(t)
}

pub fn mean_intensity(params: &HawkesParams, t: f64) -> Result<f64, AnalyticsError> {
    Moments::new(params).mean_intensity(t)
}

pub fn second_moment(params: &HawkesParams, t: f64) -> Result<f64, AnalyticsError> {
    Moments::new(params).second_moment(t)
}

pub fn second_moment_derivative(params: &HawkesParams, s: f64) -> Result<f64, AnalyticsError> {
    Moments::new(params).second_moment_derivative(s)
}

pub fn increment_second_moment(
    params: &HawkesParams,
    s: f64,
    t: f64,
) -> Result<f64, AnalyticsError> {
    Moments::new(params).increment_second_moment(s, t)
}

pub fn signature_plot_theoretical(
    params: &HawkesParams,
    t: f64,
    delta: f64,
) -> Result<f64, AnalyticsError> {
    Moments::new(params).signature_plot(t, delta)
}

pub fn signature_plot_micro(params: &HawkesParams, t: f64) -> Result<f64, AnalyticsError> {
    Moments::new(params).signature_plot_micro(t)
}

pub fn signature_plot_macro(params: &HawkesParams, t: f64) -> Result<f64, AnalyticsError> {
    Moments::new(params).signature_plot_macro(t)
}

pub fn macro_volatility(params: &HawkesParams, v: f64) -> Result<f64, AnalyticsError> {
    Moments::new(params).macro_volatility(v)
}

/// Signature plot of the model with constant baseline `μ₀` in its
/// stationary regime.
pub fn signature_plot_stationary(params: &HawkesParams, delta: f64) -> Result<f64, AnalyticsError> {
    if !(delta > 0.0) {
        return Err(AnalyticsError::BadWindow {
            t: f64::INFINITY,
            delta,
        });
    }
    let r = params.branching_ratio();
    let q = params.beta + params.alpha * params.mean_j;
    let plateau = 1.0 / ((1.0 + r) * (1.0 + r));
    let x = q * delta;
    let shape = -(-x).exp_m1() / x;
    Ok(stationary_micro(params) * (plateau + (1.0 - plateau) * shape))
}

/// `2 μ₀ E[J²] / (1 − r)`.
pub fn stationary_micro(params: &HawkesParams) -> f64 {
    2.0 * params.mu0 * params.mean_j2 / (1.0 - params.branching_ratio())
}

/// `2 μ₀ E[J²] / ((1 + r)² (1 − r))`.
pub fn stationary_macro(params: &HawkesParams) -> f64 {
    let r = params.branching_ratio();
    stationary_micro(params) / ((1.0 + r) * (1.0 + r))
}

/// Theoretical `C(t, δ)` over a grid of sampling steps (hours).
pub fn signature_curve(
    params: &HawkesParams,
    t: f64,
    deltas: &[f64],
) -> Result<CurveTable, AnalyticsError> {
    let m = Moments::new(params);
    let values = deltas
        .iter()
        .map(|&d| m.signature_plot(t, d))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CurveTable::new(
        format!("signature_plot_theory_t{t}"),
        deltas.to_vec(),
        values,
    )?)
}

/// Evaluates a time-indexed moment on a grid of times (hours).
pub fn moment_curve(
    label: &str,
    times: &[f64],
    f: impl Fn(f64) -> Result<f64, AnalyticsError>,
) -> Result<CurveTable, AnalyticsError> {
    let values = times.iter().map(|&t| f(t)).collect::<Result<Vec<_>, _>>()?;
    Ok(CurveTable::new(label, times.to_vec(), values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const T18: HawkesParams = HawkesParams::FITTED_18H;

    fn near_poisson() -> HawkesParams {
        HawkesParams::poisson(2.0, 1.0, 8.0, 0.13, 0.03)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn time_zero_values() {
        let m = Moments::new(&T18.with_f0(50.0));
        assert_eq!(m.mean_price_component(0.0).unwrap(), 0.0);
        assert!(rel(m.mean_intensity(0.0).unwrap(), 2.49) < 1e-14);
        assert_eq!(m.second_moment(0.0).unwrap(), 2500.0);
    }

    #[test]
    fn errors_outside_domain() {
        let m = Moments::new(&T18);
        assert!(matches!(
            m.mean_intensity(8.5),
            Err(AnalyticsError::TimeOutOfRange { .. })
        ));
        assert!(matches!(
            m.mean_price_component(-0.1),
            Err(AnalyticsError::TimeOutOfRange { .. })
        ));
        assert!(matches!(
            m.increment_second_moment(2.0, 2.0),
            Err(AnalyticsError::TimeOrderViolation { .. })
        ));
        assert!(matches!(
            m.signature_plot(1.0, 2.0),
            Err(AnalyticsError::BadWindow { .. })
        ));
        assert!(matches!(
            m.signature_plot(1.0, 0.0),
            Err(AnalyticsError::BadWindow { .. })
        ));
        assert!(m.macro_volatility(1.5).is_err());
    }

    #[test]
    fn mean_matches_closed_form_as_printed() {
        // Three-term expression evaluated literally.
        let HawkesParams {
            mu0,
            kappa,
            alpha,
            beta,
            horizon,
            mean_j,
            ..
        } = T18;
        let c = kappa / horizon;
        let a = alpha * mean_j;
        for t in [0.5, 2.0, 8.0] {
            let literal = mu0
                * mean_j
                * ((beta + c) / (c * (beta - a + c)) * (c * t).exp()
                    + a / ((beta - a) * (beta - a + c)) * (-(beta - a) * t).exp()
                    - beta / (c * (beta - a)));
            assert!(rel(mean_price_component(&T18, t).unwrap(), literal) < 1e-12);
        }
    }

    #[test]
    fn second_moment_matches_closed_form_as_printed() {
        let m = Moments::new(&T18);
        let [c1, c2, c3, c4] = m.constants();
        let HawkesParams {
            mu0,
            kappa,
            alpha,
            beta,
            horizon,
            mean_j,
            mean_j2,
            ..
        } = T18;
        let c = kappa / horizon;
        let a = alpha * mean_j;
        for t in [0.25, 1.0, 8.0] {
            let literal = 2.0
                * mu0
                * mean_j2
                * ((c1 + c2 + c3 + c4) * (c * t).exp()
                    - c1 * (-(beta - a) * t).exp()
                    - c2 * (-2.0 * (beta + a) * t).exp()
                    - c3 * (-(beta + a) * t).exp()
                    - c4);
            assert!(rel(m.price_variance(t).unwrap(), literal) < 1e-10);
        }
    }

    #[test]
    fn poisson_limits() {
        let p = near_poisson();
        let m = Moments::new(&p);
        for t in [0.5, 3.0, 8.0] {
            let count = p.mu0 * p.horizon / p.kappa * (p.kappa * t / p.horizon).exp_m1();
            assert!(rel(m.mean_price_component(t).unwrap(), p.mean_j * count) < 1e-12);
            assert!(rel(m.price_variance(t).unwrap(), 2.0 * p.mean_j2 * count) < 1e-12);
            assert!(
                rel(
                    m.second_moment_derivative(t).unwrap(),
                    2.0 * p.mean_j2 * p.baseline(t)
                ) < 1e-12
            );
            assert!(m.correction_bracket(t).unwrap().abs() < 1e-12);
            assert!(
                rel(
                    m.signature_plot_micro(t).unwrap(),
                    2.0 * p.mean_j2 * count / t
                ) < 1e-12
            );
        }
    }

    #[test]
    fn tiny_alpha_approaches_poisson() {
        let p = HawkesParams {
            alpha: 1e-9,
            ..near_poisson()
        };
        let m = Moments::new(&p);
        let t = 5.0;
        let count = p.mu0 * p.horizon / p.kappa * (p.kappa * t / p.horizon).exp_m1();
        assert!(rel(m.mean_price_component(t).unwrap(), p.mean_j * count) < 1e-6);
    }

    #[test]
    fn intensity_is_derivative_of_mean_count() {
        let m = Moments::new(&T18);
        let h = 1e-5;
        for t in [0.5, 2.0, 7.0] {
            let fd = (m.mean_price_component(t + h).unwrap()
                - m.mean_price_component(t - h).unwrap())
                / (2.0 * h)
                / T18.mean_j;
            assert!(rel(fd, m.mean_intensity(t).unwrap()) < 1e-8, "t={t}");
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let m = Moments::new(&T18);
        let h = 1e-6;
        for s in [0.1, 1.0, 4.0, 7.9] {
            let fd =
                (m.second_moment(s + h).unwrap() - m.second_moment(s - h).unwrap()) / (2.0 * h);
            assert!(
                rel(m.second_moment_derivative(s).unwrap(), fd) < 1e-6,
                "s={s}"
            );
        }
    }

    #[test]
    fn derivative_at_zero_is_jump_variance_rate() {
        for p in [T18, HawkesParams::FITTED_20H, near_poisson()] {
            let d = second_moment_derivative(&p, 0.0).unwrap();
            assert!(rel(d, 2.0 * p.mean_j2 * p.mu0) < 1e-12);
        }
    }

    #[test]
    fn small_increment_is_jump_variance_rate() {
        let m = Moments::new(&T18);
        let s = 3.0;
        let eps = 1e-7;
        let inc = m.increment_second_moment(s, s + eps).unwrap();
        let rate = 2.0 * T18.mean_j2 * m.mean_intensity(s).unwrap();
        assert!(rel(inc / eps, rate) < 1e-3);
    }

    #[test]
    fn telescoping_matches_increment_sum() {
        let m = Moments::new(&T18);
        for (t, delta) in [
            (8.0, 1.0 / 60.0),
            (4.0, 0.3),
            (8.0, 300.0 / 3600.0),
            (2.5, 2.5),
        ] {
            let n = snapped_floor(t / delta);
            let sum: f64 = (1..=n)
                .map(|i| {
                    m.increment_second_moment((i - 1) as f64 * delta, (i as f64 * delta).min(8.0))
                        .unwrap()
                })
                .sum();
            assert!(
                rel(m.signature_plot(t, delta).unwrap() * t, sum) < 1e-10,
                "t={t} d={delta}"
            );
        }
    }

    #[test]
    fn poisson_signature_plot_is_flat() {
        let m = Moments::new(&near_poisson());
        let t = 8.0;
        let base = m.signature_plot(t, t).unwrap();
        for n in [2u32, 5, 8, 16, 480, 28800] {
            let v = m.signature_plot(t, t / n as f64).unwrap();
            assert!(rel(v, base) < 1e-12, "n={n}: {v} vs {base}");
        }
    }

    #[test]
    fn micro_limit() {
        let m = Moments::new(&T18);
        let micro = m.signature_plot_micro(8.0).unwrap();
        let fine = m.signature_plot(8.0, 1e-6).unwrap();
        assert!(rel(fine, micro) < 1e-3);
    }

    #[test]
    fn macro_below_micro() {
        for r in [0.01, 0.3, 0.6, 0.99] {
            let p = HawkesParams {
                alpha: r * 10.0 / 0.13,
                beta: 10.0,
                mean_j: 0.13,
                mean_j2: 0.03,
                ..near_poisson()
            };
            assert!(stationary_macro(&p) < stationary_micro(&p));
        }
        // Once the excitation transient has died out the ordering carries
        // over to the time-dependent curves.
        let m = Moments::new(&T18);
        for t in [0.5, 4.0, 8.0] {
            assert!(m.signature_plot_macro(t).unwrap() < m.signature_plot_micro(t).unwrap());
        }
    }

    #[test]
    fn stationary_limits() {
        let p = T18;
        let tiny = signature_plot_stationary(&p, 1e-12).unwrap();
        assert!(rel(tiny, stationary_micro(&p)) < 1e-9);
        let huge = signature_plot_stationary(&p, 1e9).unwrap();
        assert!(rel(huge, stationary_macro(&p)) < 1e-9);
        let r = p.branching_ratio();
        assert!(rel(stationary_micro(&p), 2.0 * p.mu0 * p.mean_j2 / (1.0 - r)) < 1e-15);
        assert!(signature_plot_stationary(&p, 0.0).is_err());
    }

    #[test]
    fn stationary_unit_marks_structure() {
        // With unit jumps the curve is the unmarked constant-baseline form.
        let p = HawkesParams {
            mean_j: 1.0,
            mean_j2: 1.0,
            alpha: 3.0,
            beta: 10.0,
            ..T18
        };
        let r: f64 = 0.3;
        let delta: f64 = 0.05;
        let expect = 2.0 * p.mu0 / (1.0 - r)
            * (1.0 / (1.0 + r).powi(2)
                + (1.0 - 1.0 / (1.0 + r).powi(2)) * (1.0 - (-13.0 * delta).exp()) / (13.0 * delta));
        assert!(rel(signature_plot_stationary(&p, delta).unwrap(), expect) < 1e-12);
    }

    #[test]
    fn stationary_monotone_in_delta() {
        let p = T18;
        let mut prev = f64::INFINITY;
        for k in 0..300 {
            let seconds = 1.0 + 599.0 * k as f64 / 299.0;
            let v = signature_plot_stationary(&p, seconds / 3600.0).unwrap();
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn macro_volatility_samuelson_ratio() {
        let m = Moments::new(&T18);
        let ratio = m.macro_volatility(1.0).unwrap() / m.macro_volatility(0.0).unwrap();
        assert!(rel(ratio, 3.51f64.exp()) < 1e-14);
        assert!((ratio - 33.45).abs() < 0.01);
        let r = T18.branching_ratio();
        let v0 = 2.0 * T18.mean_j2 * T18.mu0 / ((1.0 + r).powi(2) * (1.0 - r));
        assert!(rel(m.macro_volatility(0.0).unwrap(), v0) < 1e-14);
    }

    #[test]
    fn macro_curve_consistent_with_volatility_integral() {
        // Simpson quadrature of σ² over macroscopic time.
        let m = Moments::new(&T18);
        let n = 2000;
        for v in [0.25, 1.0] {
            let h = v / n as f64;
            let mut acc = 0.0;
            for k in 0..=n {
                let w = if k == 0 || k == n {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += w * m.macro_volatility(k as f64 * h).unwrap();
            }
            let integral = acc * h / 3.0;
            let t = v * T18.horizon;
            let c_macro = m.signature_plot_macro(t).unwrap();
            assert!(rel(c_macro, integral / v) < 1e-10);
            assert!(rel(m.macro_integrated_variance(0.0, v).unwrap(), integral) < 1e-10);
        }
    }

    #[test]
    fn snapping() {
        assert_eq!(snapped_floor(2.9999999999999996), 3);
        assert_eq!(snapped_floor(2.5), 2);
        assert_eq!(snapped_floor(8.0 / (1.0 / 3600.0)), 28800);
    }
}
