//! Domain types for the two-sided marked Hawkes price model.
//!
//! Upward and downward price moves are counted by `N⁺` and `N⁻`. Each event
//! carries a positive mark `J` (the absolute price jump). Marks of one side
//! excite only the opposite side through an exponential kernel:
//!
//! ```text
//! λ⁺(t) = μ(t/T) + Σ_{τ⁻_j < t} α J⁻_j e^{-β(t - τ⁻_j)}
//! λ⁻(t) = μ(t/T) + Σ_{τ⁺_j < t} α J⁺_j e^{-β(t - τ⁺_j)}
//! μ(u)  = μ₀ e^{κ u}
//! f(t)  = f₀ + Σ_{τ⁺ ≤ t} J⁺ − Σ_{τ⁻ ≤ t} J⁻
//! ```
//!
//! Time is measured in hours throughout the crate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Seconds per hour, used wherever grid steps in seconds meet model time.
pub const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter `{name}` must be positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("stability violated: alpha * E[J] = {excitation} >= beta = {beta}")]
    StabilityViolation { excitation: f64, beta: f64 },
    #[error("jump moments inconsistent: E[J^2] = {mean_j2} < E[J]^2 = {mean_j_sq}")]
    InconsistentMoments { mean_j2: f64, mean_j_sq: f64 },
    #[error("negative time step {0}")]
    NegativeTimeStep(f64),
    #[error("invalid event stream: {0}")]
    InvalidStream(String),
}

/// Model parameters together with the first two jump moments.
///
/// `mu0`, `alpha` and `beta` are in events per hour, `horizon` in hours and
/// jump moments in the price unit (and its square).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HawkesParams {
    pub mu0: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(alias = "T")]
    pub horizon: f64,
    pub mean_j: f64,
    pub mean_j2: f64,
    #[serde(default)]
    pub f0: f64,
}

impl HawkesParams {
    /// Estimated 18h-maturity parameters over an 8 hour session.
    pub const FITTED_18H: HawkesParams = HawkesParams {
        mu0: 2.49,
        kappa: 3.51,
        alpha: 864.39,
        beta: 237.30,
        horizon: 8.0,
        mean_j: 0.13,
        mean_j2: 0.066,
        f0: 0.0,
    };
    pub const FITTED_19H: HawkesParams = HawkesParams {
        mu0: 3.01,
        kappa: 3.50,
        alpha: 2344.97,
        beta: 639.64,
        horizon: 8.0,
        mean_j: 0.13,
        mean_j2: 0.061,
        f0: 0.0,
    };
    pub const FITTED_20H: HawkesParams = HawkesParams {
        mu0: 3.06,
        kappa: 3.51,
        alpha: 3100.46,
        beta: 859.11,
        horizon: 8.0,
        mean_j: 0.13,
        mean_j2: 0.058,
        f0: 0.0,
    };

    /// Inhomogeneous compound Poisson limit: no excitation at all.
    ///
    /// The result has `alpha == 0` and therefore fails [`validate`](Self::validate);
    /// every closed form, the simulator and the likelihood accept it through
    /// [`validate_allow_poisson`](Self::validate_allow_poisson).
    pub fn poisson(mu0: f64, kappa: f64, horizon: f64, mean_j: f64, mean_j2: f64) -> Self {
        HawkesParams {
            mu0,
            kappa,
            alpha: 0.0,
            beta: 1.0,
            horizon,
            mean_j,
            mean_j2,
            f0: 0.0,
        }
    }

    pub fn with_horizon(self, horizon: f64) -> Self {
        HawkesParams { horizon, ..self }
    }

    pub fn with_f0(self, f0: f64) -> Self {
        HawkesParams { f0, ..self }
    }

    /// Checks positivity, stability `α E[J] < β` and `E[J²] ≥ E[J]²`.
    pub fn validate(&self) -> Result<Self, ModelError> {
        self.check(false)
    }

    /// Same as [`validate`](Self::validate) but accepts `alpha == 0`.
    pub fn validate_allow_poisson(&self) -> Result<Self, ModelError> {
        self.check(true)
    }

    fn check(&self, allow_zero_alpha: bool) -> Result<Self, ModelError> {
        let positive = [
            ("mu0", self.mu0),
            ("kappa", self.kappa),
            ("beta", self.beta),
            ("horizon", self.horizon),
            ("mean_j", self.mean_j),
            ("mean_j2", self.mean_j2),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ModelError::NonPositiveParameter { name, value });
            }
        }
        let alpha_ok = if allow_zero_alpha {
            self.alpha >= 0.0
        } else {
            self.alpha > 0.0
        };
        if !(alpha_ok && self.alpha.is_finite()) {
            return Err(ModelError::NonPositiveParameter {
                name: "alpha",
                value: self.alpha,
            });
        }
        if !self.f0.is_finite() {
            return Err(ModelError::InvalidStream(format!(
                "initial price must be finite, got {}",
                self.f0
            )));
        }
        let excitation = self.alpha * self.mean_j;
        if excitation >= self.beta {
            return Err(ModelError::StabilityViolation {
                excitation,
                beta: self.beta,
            });
        }
        let mean_j_sq = self.mean_j * self.mean_j;
        if self.mean_j2 < mean_j_sq * (1.0 - 1e-12) {
            return Err(ModelError::InconsistentMoments {
                mean_j2: self.mean_j2,
                mean_j_sq,
            });
        }
        Ok(*self)
    }

    /// `α E[J] / β`, the expected number of direct offspring per event.
    pub fn branching_ratio(&self) -> f64 {
        self.alpha * self.mean_j / self.beta
    }

    /// Baseline intensity `μ₀ e^{κ t/T}` at session time `t` (hours).
    pub fn baseline(&self, t: f64) -> f64 {
        self.mu0 * (self.kappa * t / self.horizon).exp()
    }

    /// `∫₀ᵗ μ(s/T) ds`.
    pub fn integrated_baseline(&self, t: f64) -> f64 {
        let c = self.kappa / self.horizon;
        self.mu0 * (c * t).exp_m1() / c
    }

    /// `(I₂ − K)⁻¹` for the null-diagonal kernel matrix `K` whose
    /// off-diagonal entries are the branching ratio.
    pub fn inverse_branching_matrix(&self) -> [[f64; 2]; 2] {
        let r = self.branching_ratio();
        let d = 1.0 / (1.0 - r * r);
        [[d, r * d], [r * d, d]]
    }
}

/// Direction of a price move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Up,
    #[serde(rename = "-")]
    Down,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Up => 1.0,
            Sign::Down => -1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Up => "+",
            Sign::Down => "-",
        }
    }

    pub fn parse(s: &str) -> Option<Sign> {
        match s.trim() {
            "+" | "up" | "1" | "+1" => Some(Sign::Up),
            "-" | "down" | "-1" => Some(Sign::Down),
            _ => None,
        }
    }
}

/// One price move: time in hours, direction and positive jump size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkedEvent {
    pub t: f64,
    pub sign: Sign,
    pub mark: f64,
}

impl MarkedEvent {
    pub fn new(t: f64, sign: Sign, mark: f64) -> Self {
        MarkedEvent { t, sign, mark }
    }

    pub fn signed_mark(&self) -> f64 {
        self.sign.as_f64() * self.mark
    }
}

/// Time-ordered events of one trading session on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStream {
    pub session_id: String,
    pub horizon: f64,
    events: Vec<MarkedEvent>,
}

impl EventStream {
    pub fn new(
        session_id: impl Into<String>,
        horizon: f64,
        events: Vec<MarkedEvent>,
    ) -> Result<Self, ModelError> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(ModelError::InvalidStream(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let mut prev = f64::NEG_INFINITY;
        for (i, e) in events.iter().enumerate() {
            if !(e.t >= 0.0 && e.t <= horizon) {
                return Err(ModelError::InvalidStream(format!(
                    "event {i} at t={} outside [0, {horizon}]",
                    e.t
                )));
            }
            if e.t <= prev {
                return Err(ModelError::InvalidStream(format!(
                    "event {i} at t={} does not follow t={prev}",
                    e.t
                )));
            }
            if !(e.mark > 0.0 && e.mark.is_finite()) {
                return Err(ModelError::InvalidStream(format!(
                    "event {i} has non-positive mark {}",
                    e.mark
                )));
            }
            prev = e.t;
        }
        Ok(EventStream {
            session_id: session_id.into(),
            horizon,
            events,
        })
    }

    pub fn empty(session_id: impl Into<String>, horizon: f64) -> Result<Self, ModelError> {
        Self::new(session_id, horizon, Vec::new())
    }

    pub fn events(&self) -> &[MarkedEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().map(|e| e.t)
    }

    pub fn marks(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().map(|e| e.mark)
    }

    /// `(N⁺, N⁻)` at the horizon.
    pub fn counts(&self) -> (usize, usize) {
        let up = self.events.iter().filter(|e| e.sign == Sign::Up).count();
        (up, self.events.len() - up)
    }

    /// Sum of signed marks, `f(T) − f₀`.
    pub fn net_change(&self) -> f64 {
        self.events.iter().map(MarkedEvent::signed_mark).sum()
    }
}

/// Exponentially decayed mark sums at time `t`.
///
/// `s_plus` collects upward marks and feeds `λ⁻`; `s_minus` collects
/// downward marks and feeds `λ⁺`. Baselines are evaluated on demand.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IntensityState {
    pub t: f64,
    pub s_plus: f64,
    pub s_minus: f64,
}

impl IntensityState {
    pub fn at(t: f64) -> Self {
        IntensityState {
            t,
            s_plus: 0.0,
            s_minus: 0.0,
        }
    }

    /// Moves the state forward by `dt` and optionally registers an event
    /// occurring at the new time.
    pub fn advance(
        self,
        beta: f64,
        dt: f64,
        new_event: Option<(Sign, f64)>,
    ) -> Result<Self, ModelError> {
        if !(dt >= 0.0) {
            return Err(ModelError::NegativeTimeStep(dt));
        }
        let mut next = if dt == 0.0 {
            self
        } else {
            let decay = (-beta * dt).exp();
            IntensityState {
                t: self.t + dt,
                s_plus: self.s_plus * decay,
                s_minus: self.s_minus * decay,
            }
        };
        match new_event {
            Some((Sign::Up, mark)) => next.s_plus += mark,
            Some((Sign::Down, mark)) => next.s_minus += mark,
            None => {}
        }
        Ok(next)
    }

    /// `λ⁺` at the state's time.
    pub fn intensity_up(&self, params: &HawkesParams) -> f64 {
        params.baseline(self.t) + params.alpha * self.s_minus
    }

    /// `λ⁻` at the state's time.
    pub fn intensity_down(&self, params: &HawkesParams) -> f64 {
        params.baseline(self.t) + params.alpha * self.s_plus
    }

    pub fn total_intensity(&self, params: &HawkesParams) -> f64 {
        2.0 * params.baseline(self.t) + params.alpha * (self.s_plus + self.s_minus)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> HawkesParams {
        HawkesParams {
            mu0: 1.0,
            kappa: 1.0,
            alpha: 5.0,
            beta: 10.0,
            horizon: 8.0,
            mean_j: 0.13,
            mean_j2: 0.03,
            f0: 0.0,
        }
    }

    #[test]
    fn fitted_presets_are_valid() {
        let p = HawkesParams::FITTED_18H;
        assert_eq!(p.validate().unwrap(), p);
        assert!(p.branching_ratio() < 1.0);
        assert!(HawkesParams::FITTED_19H.validate().is_ok());
        assert!(HawkesParams::FITTED_20H.validate().is_ok());
    }

    #[test]
    fn zero_alpha_rejected_unless_poisson_mode() {
        let p = HawkesParams {
            alpha: 0.0,
            ..base()
        };
        assert!(matches!(
            p.validate(),
            Err(ModelError::NonPositiveParameter { name: "alpha", .. })
        ));
        assert!(p.validate_allow_poisson().is_ok());
        let poisson = HawkesParams::poisson(2.0, 1.0, 8.0, 0.13, 0.03);
        assert!(poisson.validate().is_err());
        assert!(poisson.validate_allow_poisson().is_ok());
    }

    #[test]
    fn unstable_parameters() {
        let p = HawkesParams {
            mu0: 1.0,
            kappa: 1.0,
            alpha: 10.0,
            beta: 1.0,
            mean_j: 0.5,
            mean_j2: 0.25,
            ..base()
        };
        assert!(matches!(
            p.validate(),
            Err(ModelError::StabilityViolation { .. })
        ));
        // boundary case alpha E[J] == beta is unstable too
        let edge = HawkesParams {
            alpha: 20.0,
            beta: 10.0,
            mean_j: 0.5,
            mean_j2: 0.25,
            ..base()
        };
        assert!(edge.validate().is_err());
    }

    #[test]
    fn other_invalid_inputs() {
        for p in [
            HawkesParams { mu0: 0.0, ..base() },
            HawkesParams {
                kappa: -1.0,
                ..base()
            },
            HawkesParams {
                beta: f64::NAN,
                ..base()
            },
            HawkesParams {
                horizon: 0.0,
                ..base()
            },
        ] {
            assert!(matches!(
                p.validate(),
                Err(ModelError::NonPositiveParameter { .. })
            ));
        }
        let jensen = HawkesParams {
            mean_j2: 0.01,
            ..base()
        };
        assert!(matches!(
            jensen.validate(),
            Err(ModelError::InconsistentMoments { .. })
        ));
    }

    #[test]
    fn validate_is_idempotent() {
        let p = HawkesParams::FITTED_18H;
        let once = p.validate().unwrap();
        assert_eq!(once.validate().unwrap(), once);
    }

    #[test]
    fn branching_ratio_values() {
        let r = HawkesParams::FITTED_18H.branching_ratio();
        assert!((r - 864.39 * 0.13 / 237.30).abs() < 1e-15);
        assert!((r - 0.47355).abs() < 2e-5);
        let small = HawkesParams {
            alpha: 5.0,
            beta: 10.0,
            mean_j: 0.13,
            ..base()
        };
        assert!((small.branching_ratio() - 0.065).abs() < 1e-15);
        let half = HawkesParams {
            alpha: 5.0,
            beta: 1.0,
            mean_j: 0.1,
            mean_j2: 0.01,
            ..base()
        };
        assert!((half.branching_ratio() - 0.5).abs() < 1e-15);
    }

    fn with_ratio(r: f64) -> HawkesParams {
        HawkesParams {
            alpha: r * 10.0 / 0.13,
            beta: 10.0,
            mean_j: 0.13,
            ..base()
        }
    }

    #[test]
    fn inverse_branching_matrix_half() {
        let m = HawkesParams {
            alpha: 5.0,
            beta: 1.0,
            mean_j: 0.1,
            mean_j2: 0.01,
            ..base()
        }
        .inverse_branching_matrix();
        let expect = [[4.0 / 3.0, 2.0 / 3.0], [2.0 / 3.0, 4.0 / 3.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[i][j] - expect[i][j]).abs() < 1e-15);
            }
            assert!((m[i][0] + m[i][1] - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_branching_matrix_small_ratio() {
        let m = with_ratio(0.065).inverse_branching_matrix();
        // 1 / (1 - 0.065^2) and 0.065 / (1 - 0.065^2)
        assert!((m[0][0] - 1.0042429).abs() < 1e-6);
        assert!((m[0][1] - 0.0652758).abs() < 1e-6);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn inverse_branching_matrix_is_inverse() {
        for r in [0.1, 0.47355, 0.9] {
            let p = with_ratio(r);
            let inv = p.inverse_branching_matrix();
            let k = [[0.0, r], [r, 0.0]];
            for i in 0..2 {
                for j in 0..2 {
                    let prod: f64 = (0..2)
                        .map(|l| {
                            let a = if i == l { 1.0 } else { 0.0 } - k[i][l];
                            a * inv[l][j]
                        })
                        .sum();
                    let id = if i == j { 1.0 } else { 0.0 };
                    assert!((prod - id).abs() < 1e-12, "r={r} ({i},{j}) -> {prod}");
                }
                let row = inv[i][0] + inv[i][1];
                assert!((row - 1.0 / (1.0 - r)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn advance_identity_and_decay() {
        let s = IntensityState {
            t: 1.0,
            s_plus: 0.7,
            s_minus: 0.2,
        };
        assert_eq!(s.advance(3.0, 0.0, None).unwrap(), s);

        let s = IntensityState {
            t: 0.0,
            s_plus: 1.0,
            s_minus: 0.0,
        };
        let n = s.advance(2.0, 0.5, None).unwrap();
        assert!((n.s_plus - (-1.0f64).exp()).abs() < 1e-15);
        assert!((n.s_plus - 0.367879).abs() < 1e-6);
        assert_eq!(n.t, 0.5);

        assert!(matches!(
            s.advance(2.0, -1e-3, None),
            Err(ModelError::NegativeTimeStep(_))
        ));
    }

    #[test]
    fn advance_semigroup() {
        let s = IntensityState {
            t: 0.3,
            s_plus: 1.7,
            s_minus: 0.4,
        };
        let beta = 237.3;
        for (d1, d2) in [(0.001, 0.002), (0.01, 0.0), (1e-5, 3e-3)] {
            let two = s
                .advance(beta, d1, None)
                .unwrap()
                .advance(beta, d2, None)
                .unwrap();
            let one = s.advance(beta, d1 + d2, None).unwrap();
            assert!((two.s_plus - one.s_plus).abs() <= 1e-14 * one.s_plus.max(1e-300));
            assert!((two.s_minus - one.s_minus).abs() <= 1e-14 * one.s_minus.max(1e-300));
        }
    }

    #[test]
    fn event_routes_mark_to_opposite_intensity() {
        let p = base();
        let s = IntensityState::at(0.0)
            .advance(p.beta, 0.1, Some((Sign::Up, 0.5)))
            .unwrap();
        assert_eq!(s.s_plus, 0.5);
        assert!((s.intensity_down(&p) - (p.baseline(0.1) + p.alpha * 0.5)).abs() < 1e-15);
        assert!((s.intensity_up(&p) - p.baseline(0.1)).abs() < 1e-15);
    }

    #[test]
    fn stream_validation() {
        let ok = EventStream::new(
            "s",
            1.0,
            vec![
                MarkedEvent::new(0.1, Sign::Up, 0.2),
                MarkedEvent::new(0.2, Sign::Down, 0.1),
            ],
        )
        .unwrap();
        assert_eq!(ok.counts(), (1, 1));
        assert!((ok.net_change() - 0.1).abs() < 1e-15);
        assert!(EventStream::new(
            "s",
            1.0,
            vec![
                MarkedEvent::new(0.2, Sign::Up, 0.2),
                MarkedEvent::new(0.2, Sign::Up, 0.2)
            ]
        )
        .is_err());
        assert!(EventStream::new("s", 1.0, vec![MarkedEvent::new(1.5, Sign::Up, 0.2)]).is_err());
        assert!(EventStream::new("s", 1.0, vec![MarkedEvent::new(0.5, Sign::Up, 0.0)]).is_err());
    }

    #[test]
    fn integrated_baseline_matches_closed_form() {
        let p = base();
        let v = p.integrated_baseline(p.horizon);
        let expect = p.mu0 * p.horizon / p.kappa * (p.kappa.exp() - 1.0);
        assert!((v - expect).abs() < 1e-12 * expect);
    }
}
