//! The reference function `f` that shapes the horn, the derived function
//! `g(s) = f(s)^α log(2+s)`, their generalized inverses and the crossover
//! time `t₀`.
//!
//! Inverses are searched in the variable `u = ln(1+s)` so that values far
//! beyond the `f64` range (they occur for slowly decaying profiles) are still
//! reported through their logarithm.

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, usage, HornError, Result};

/// Profile shapes with closed forms, plus an escape hatch for arbitrary profiles.
#[derive(Clone)]
pub enum Profile {
    /// `f(s) = log^{-θ}(2+s)`.
    LogPower { theta: f64 },
    /// `f(s) = (1+s)^{-θ}`.
    PowerLaw { theta: f64 },
    /// Any positive, non-increasing profile on `[0, ∞)`.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::LogPower { theta } => write!(f, "LogPower {{ theta: {theta} }}"),
            Profile::PowerLaw { theta } => write!(f, "PowerLaw {{ theta: {theta} }}"),
            Profile::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Declared monotonicity of `g`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GMonotone {
    NonIncreasing,
    NonDecreasing,
}

/// A generalized-inverse value that may not fit in an `f64`.
///
/// `value` is `+∞` either because the true value overflows (then `ln_value`
/// is finite) or because the predicate never held below the search cap
/// (then `ln_value` is `+∞` as well).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseValue {
    pub value: f64,
    pub ln_value: f64,
}

impl InverseValue {
    fn from_log1p(u: f64) -> Self {
        InverseValue {
            value: u.exp_m1(),
            ln_value: u + (-(-u).exp_m1()).ln(),
        }
    }

    fn clamp_two() -> Self {
        InverseValue {
            value: 2.0,
            ln_value: std::f64::consts::LN_2,
        }
    }

    fn unbounded() -> Self {
        InverseValue {
            value: f64::INFINITY,
            ln_value: f64::INFINITY,
        }
    }

    /// True when the search hit its cap without the predicate holding.
    pub fn is_unbounded(&self) -> bool {
        self.ln_value.is_infinite()
    }
}

/// Settings for the crossover-time solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct T0Config {
    /// Rate constant inside the exponential side of the defining equation.
    pub c: f64,
    /// Largest admissible root.
    pub tau_max: f64,
    /// Relative residual accepted at the root.
    pub rel_tol: f64,
}

impl Default for T0Config {
    fn default() -> Self {
        T0Config {
            c: 1.0,
            tau_max: 1e3,
            rel_tol: 1e-12,
        }
    }
}

impl T0Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(usage(format!("t0.c must be positive, got {}", self.c)));
        }
        if !(self.tau_max > 0.0 && self.tau_max.is_finite()) {
            return Err(usage(format!("t0.tau_max must be positive, got {}", self.tau_max)));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-6) {
            return Err(usage(format!("t0.rel_tol must lie in (0, 1e-6], got {}", self.rel_tol)));
        }
        Ok(())
    }
}

/// Root of the crossover equation together with its achieved residual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct T0Solution {
    pub tau: f64,
    /// `|lhs − rhs| / max(lhs, rhs)` at `tau`.
    pub residual: f64,
}

const G_MONOTONE_TOL: f64 = 1e-9;
const INVERSE_LOG_CAP: f64 = 1e300;
const INVERSE_REL_TOL: f64 = 1e-10;

/// `ln(1 + e^u)` without overflow.
pub(crate) fn softplus(u: f64) -> f64 {
    if u > 30.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

/// Reference function `f` with its analytic metadata.
#[derive(Clone, Debug)]
pub struct ReferenceFunction {
    profile: Profile,
    alpha: f64,
    lipschitz: f64,
    g_class: Option<GMonotone>,
    f0: f64,
    doubling: f64,
}

impl ReferenceFunction {
    /// `f(s) = log^{-θ}(2+s)`. `g` is non-increasing exactly when `θα > 1`.
    pub fn log_power(theta: f64, alpha: f64) -> Result<Self> {
        check_theta(theta)?;
        let g_class = if theta * alpha > 1.0 {
            GMonotone::NonIncreasing
        } else {
            GMonotone::NonDecreasing
        };
        let lipschitz = 0.5 * theta * std::f64::consts::LN_2.powf(-theta - 1.0);
        Self::build(
            Profile::LogPower { theta },
            alpha,
            lipschitz,
            Some(g_class),
            2f64.powf(theta),
        )
    }

    /// `f(s) = (1+s)^{-θ}`.
    ///
    /// `g` is non-increasing on `(0, ∞)` iff `θα ≥ 1/(2 ln 2)`; below that it
    /// rises before decaying and no monotone class is attached.
    pub fn power_law(theta: f64, alpha: f64) -> Result<Self> {
        check_theta(theta)?;
        let g_class = if theta * alpha >= 0.5 / std::f64::consts::LN_2 {
            Some(GMonotone::NonIncreasing)
        } else {
            None
        };
        Self::build(Profile::PowerLaw { theta }, alpha, theta, g_class, 2f64.powf(theta))
    }

    /// Arbitrary profile. `lipschitz` and `doubling` are the caller's claims and
    /// are sanity-checked on a sample grid like everything else.
    pub fn custom(
        profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        alpha: f64,
        lipschitz: f64,
        g_class: Option<GMonotone>,
        doubling: f64,
    ) -> Result<Self> {
        Self::build(Profile::Custom(profile), alpha, lipschitz, g_class, doubling)
    }

    fn build(profile: Profile, alpha: f64, lipschitz: f64, g_class: Option<GMonotone>, doubling: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(domain(format!("alpha must lie in (0, 2), got {alpha}")));
        }
        let mut rf = ReferenceFunction {
            profile,
            alpha,
            lipschitz,
            g_class,
            f0: 1.0,
            doubling,
        };
        rf.f0 = rf.f_raw(0.0);
        rf.validate()?;
        Ok(rf)
    }

    /// Replace the Lipschitz bound; rejected if the samples contradict it.
    pub fn with_lipschitz(mut self, lipschitz: f64) -> Result<Self> {
        self.lipschitz = lipschitz;
        self.validate()?;
        Ok(self)
    }

    /// Replace the declared monotone class of `g`; rejected if the samples contradict it.
    pub fn with_g_class(mut self, g_class: Option<GMonotone>) -> Result<Self> {
        self.g_class = g_class;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lipschitz > 0.0 && self.lipschitz.is_finite()) {
            return Err(usage(format!(
                "Lipschitz bound must be positive, got {}",
                self.lipschitz
            )));
        }
        if !(self.doubling >= 1.0 && self.doubling.is_finite()) {
            return Err(usage(format!("doubling constant must be >= 1, got {}", self.doubling)));
        }
        if !(self.f0 > 0.0 && self.f0.is_finite()) {
            return Err(domain(format!("f(0) must be positive and finite, got {}", self.f0)));
        }
        let grid = sample_grid();
        let mut prev: Option<(f64, f64)> = None;
        for &s in &grid {
            let v = self.f_raw(s);
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("f({s:e}) = {v:e} is not positive and finite")));
            }
            let v2 = self.f_raw(2.0 * s);
            if v > self.doubling * v2 * (1.0 + 1e-12) {
                return Err(domain(format!(
                    "doubling bound violated: f({s:e}) = {v:e} > {} f({:e})",
                    self.doubling,
                    2.0 * s
                )));
            }
            if let Some((ps, pv)) = prev {
                if v > pv * (1.0 + 1e-12) {
                    return Err(domain(format!("f is increasing between {ps:e} and {s:e}")));
                }
                if (pv - v).abs() > self.lipschitz * (s - ps) * (1.0 + 1e-9) {
                    return Err(domain(format!(
                        "Lipschitz bound {} violated on [{ps:e}, {s:e}]",
                        self.lipschitz
                    )));
                }
            }
            prev = Some((s, v));
        }
        if let Some(class) = self.g_class {
            let mut prev_g: Option<(f64, f64)> = None;
            for &s in grid.iter().filter(|&&s| s > 0.0) {
                let g = self.g_raw(s);
                if let Some((ps, pg)) = prev_g {
                    let broken = match class {
                        GMonotone::NonIncreasing => g > pg * (1.0 + G_MONOTONE_TOL),
                        GMonotone::NonDecreasing => g < pg * (1.0 - G_MONOTONE_TOL),
                    };
                    if broken {
                        return Err(domain(format!(
                            "g is not {class:?}: g({ps:e}) = {pg:e}, g({s:e}) = {g:e}"
                        )));
                    }
                }
                prev_g = Some((s, g));
            }
        }
        Ok(())
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn g_class(&self) -> Option<GMonotone> {
        self.g_class
    }

    pub fn doubling(&self) -> f64 {
        self.doubling
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    /// Profile value without input checks; negative arguments map to `f(0)`.
    #[inline]
    pub(crate) fn f_raw(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        match &self.profile {
            Profile::LogPower { theta } => (2.0 + s).ln().powf(-theta),
            Profile::PowerLaw { theta } => (1.0 + s).powf(-theta),
            Profile::Custom(func) => func(s),
        }
    }

    fn g_raw(&self, s: f64) -> f64 {
        self.f_raw(s).powf(self.alpha) * (2.0 + s).ln()
    }

    /// `f(s)`, extended by `f(0)` to negative arguments.
    pub fn eval_f(&self, s: f64) -> Result<f64> {
        if !s.is_finite() {
            return Err(domain(format!("f evaluated at non-finite argument {s}")));
        }
        Ok(self.f_raw(s))
    }

    /// `g(s) = f(s)^α log(2+s)` for `s > 0`.
    pub fn eval_g(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(domain(format!("g requires a positive finite argument, got {s}")));
        }
        Ok(self.g_raw(s))
    }

    /// `ln f(e^u − 1)` for `u ≥ 0`, valid far beyond the `f64` range of `s`.
    pub fn ln_f_log1p(&self, u: f64) -> f64 {
        match &self.profile {
            Profile::LogPower { theta } => -theta * softplus(u).ln(),
            Profile::PowerLaw { theta } => -theta * u,
            Profile::Custom(func) => func(u.exp_m1()).ln(),
        }
    }

    fn ln_g_log1p(&self, u: f64) -> f64 {
        self.alpha * self.ln_f_log1p(u) + softplus(u).ln()
    }

    /// `s₀(t) = inf{s > 0 : f(s)^α ≤ t} ∨ 2`.
    pub fn s0(&self, t: f64) -> Result<InverseValue> {
        if !(t > 0.0) {
            return Err(domain(format!("s0 requires t > 0, got {t}")));
        }
        let ln_t = t.ln();
        Ok(generalized_inverse(|u| self.alpha * self.ln_f_log1p(u) <= ln_t))
    }

    /// `s₁(t) = g^{-1}(t) ∨ 2`, defined only for non-increasing `g`.
    pub fn s1(&self, t: f64) -> Result<InverseValue> {
        if !(t > 0.0) {
            return Err(usage(format!("s1 requires t > 0, got {t}")));
        }
        if self.g_class != Some(GMonotone::NonIncreasing) {
            return Err(usage("s1 is only defined when g is declared non-increasing"));
        }
        let ln_t = t.ln();
        Ok(generalized_inverse(|u| self.ln_g_log1p(u) <= ln_t))
    }

    /// Unique `τ` with `exp(−c τ f(x₁)^{−α}) = τ (1+|x|)^{−(d+α−1)}`.
    pub fn t0(&self, x1: f64, abs_x: f64, d: usize, cfg: &T0Config) -> Result<f64> {
        self.t0_solve(x1, abs_x, d, cfg).map(|s| s.tau)
    }

    /// As [`ReferenceFunction::t0`], also reporting the residual.
    pub fn t0_solve(&self, x1: f64, abs_x: f64, d: usize, cfg: &T0Config) -> Result<T0Solution> {
        cfg.validate()?;
        if !(abs_x >= 0.0 && abs_x.is_finite() && x1.is_finite()) {
            return Err(domain(format!("t0 needs finite x1 and |x| >= 0, got {x1}, {abs_x}")));
        }
        if d < 2 {
            return Err(domain(format!("dimension must be at least 2, got {d}")));
        }
        let rate = cfg.c * self.f_raw(x1).powf(-self.alpha);
        let ln_decay = (d as f64 + self.alpha - 1.0) * abs_x.ln_1p();
        // log(lhs / rhs); strictly decreasing in tau
        let h = |tau: f64| -rate * tau - tau.ln() + ln_decay;

        let hi_end = cfg.tau_max;
        if h(hi_end) > 0.0 {
            return Err(HornError::Solver {
                msg: "t0 root exceeds tau_max".into(),
                lo: 0.0,
                hi: hi_end,
            });
        }
        let mut lo = hi_end;
        while h(lo) <= 0.0 {
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(HornError::Solver {
                    msg: "t0 lower bracket not found".into(),
                    lo,
                    hi: hi_end,
                });
            }
        }
        let mut hi = (2.0 * lo).min(hi_end);
        let target = 0.5 * cfg.rel_tol;
        let mut tau = hi;
        for _ in 0..400 {
            tau = (lo * hi).sqrt();
            let v = h(tau);
            if v.abs() <= target {
                break;
            }
            if v > 0.0 {
                lo = tau;
            } else {
                hi = tau;
            }
            if hi <= lo * (1.0 + 4.0 * f64::EPSILON) {
                tau = if h(lo).abs() < h(hi).abs() { lo } else { hi };
                break;
            }
        }
        let lhs = (-rate * tau).exp();
        let rhs = tau * (-ln_decay).exp();
        let residual = (lhs - rhs).abs() / lhs.max(rhs);
        if residual > cfg.rel_tol {
            return Err(HornError::Solver {
                msg: format!("t0 residual {residual:e} above tolerance"),
                lo,
                hi,
            });
        }
        Ok(T0Solution { tau, residual })
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("theta must be positive, got {theta}")))
    }
}

/// `{0} ∪ {10^{k/4}}` for `s` from `1e-6` to `1e12`.
fn sample_grid() -> Vec<f64> {
    std::iter::once(0.0)
        .chain((-24..=48).map(|k| 10f64.powf(k as f64 / 4.0)))
        .collect()
}

/// `inf{s ≥ 0 : pred(ln(1+s))} ∨ 2` for a predicate that is monotone (false then true).
fn generalized_inverse(pred: impl Fn(f64) -> bool) -> InverseValue {
    let u_two = 3f64.ln();
    if pred(u_two) {
        return InverseValue::clamp_two();
    }
    let mut lo = u_two;
    let mut hi = 5f64.ln();
    while !pred(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > INVERSE_LOG_CAP {
            return InverseValue::unbounded();
        }
    }
    // absolute tolerance in u is relative tolerance in s
    while hi - lo > INVERSE_REL_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    InverseValue::from_log1p(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn eval_f_examples() {
        let lp = ReferenceFunction::log_power(1.0, 1.0).unwrap();
        assert!(close(lp.eval_f(E - 2.0).unwrap(), 1.0, 1e-15));
        let pl = ReferenceFunction::power_law(1.0, 1.0).unwrap();
        assert!(close(pl.eval_f(99.0).unwrap(), 0.01, 1e-15));
        assert_eq!(pl.eval_f(-5.0).unwrap(), pl.f0());
        assert_eq!(lp.eval_f(-5.0).unwrap(), lp.f0());
        assert!(matches!(lp.eval_f(f64::NAN), Err(HornError::Domain(_))));
        assert!(matches!(lp.eval_f(f64::INFINITY), Err(HornError::Domain(_))));
    }

    #[test]
    fn eval_g_examples() {
        let pl = ReferenceFunction::power_law(1.0, 1.0).unwrap();
        assert!(close(pl.eval_g(E - 2.0).unwrap(), 1.0 / (E - 1.0), 1e-14));
        for alpha in [0.5, 1.0, 1.5] {
            let lp = ReferenceFunction::log_power(1.0 / alpha, alpha).unwrap();
            for s in [0.1, 3.0, 1e4] {
                assert!(close(lp.eval_g(s).unwrap(), 1.0, 1e-14));
            }
        }
        let lp2 = ReferenceFunction::log_power(2.0, 1.0).unwrap();
        assert!(close(lp2.eval_g(E - 2.0).unwrap(), 1.0, 1e-14));
        assert!(lp2.eval_g(0.0).is_err());
        assert!(lp2.eval_g(-1.0).is_err());
    }

    #[test]
    fn s0_examples() {
        let pl = ReferenceFunction::power_law(1.0, 1.0).unwrap();
        assert!(close(pl.s0(0.01).unwrap().value, 99.0, 1e-9));
        assert_eq!(pl.s0(1.0).unwrap().value, 2.0);
        assert_eq!(pl.s0(5.0).unwrap().value, 2.0);
        let lp = ReferenceFunction::log_power(1.0, 1.0).unwrap();
        assert!(close(lp.s0(0.25).unwrap().value, E.powi(4) - 2.0, 1e-9));
        assert!(lp.s0(0.0).is_err());
        assert!(lp.s0(-1.0).is_err());
    }

    #[test]
    fn s1_examples() {
        let lp = ReferenceFunction::log_power(2.0, 1.0).unwrap();
        assert!(close(lp.s1(0.25).unwrap().value, E.powi(4) - 2.0, 1e-9));
        assert!(close(lp.s1(0.1).unwrap().value, E.powi(10) - 2.0, 1e-9));
        // g(0+) = 1/ln 2 is the supremum of g
        assert_eq!(lp.s1(2.0).unwrap().value, 2.0);
        let inc = ReferenceFunction::log_power(0.5, 1.0).unwrap();
        assert!(matches!(inc.s1(0.5), Err(HornError::Usage(_))));
        assert!(matches!(lp.s1(0.0), Err(HornError::Usage(_))));
    }

    #[test]
    fn s1_reports_log_beyond_f64_range() {
        let lp = ReferenceFunction::log_power(2.0, 1.0).unwrap();
        // g(s) = 1/log(2+s) <= 1e-3  <=>  log(2+s) >= 1000
        let v = lp.s1(1e-3).unwrap();
        assert!(v.value.is_infinite());
        assert!(close(v.ln_value, 1000.0, 1e-9));
        assert!(!v.is_unbounded());
    }

    #[test]
    fn s0_is_unbounded_when_profile_never_drops_below_level() {
        let flat = ReferenceFunction::custom(Arc::new(|_| 1.0), 1.0, 1.0, None, 1.0).unwrap();
        let v = flat.s0(0.5).unwrap();
        assert!(v.is_unbounded());
        assert!(v.value.is_infinite());
    }

    #[test]
    fn t0_omega_constant() {
        let flat = ReferenceFunction::custom(Arc::new(|_| 1.0), 1.0, 1.0, None, 1.0).unwrap();
        let sol = flat.t0_solve(0.0, 0.0, 2, &T0Config::default()).unwrap();
        assert!((sol.tau - 0.567_143_290_409_783_8).abs() < 1e-10, "{}", sol.tau);
        assert!(sol.residual <= 1e-12);
        // d + alpha - 1 = 3 reaches the same limit at |x| = 0
        let sol3 = flat.t0(0.0, 0.0, 3, &T0Config::default()).unwrap();
        assert!((sol3 - sol.tau).abs() < 1e-12);
    }

    #[test]
    fn t0_bracket_failure_carries_endpoints() {
        let pl = ReferenceFunction::power_law(1.0, 1.0).unwrap();
        let cfg = T0Config {
            tau_max: 1e-3,
            ..T0Config::default()
        };
        match pl.t0(0.0, 10.0, 2, &cfg) {
            Err(HornError::Solver { hi, .. }) => assert_eq!(hi, 1e-3),
            other => panic!("expected solver error, got {other:?}"),
        }
    }

    #[test]
    fn t0_config_validation() {
        let bad = T0Config {
            rel_tol: 1e-3,
            ..T0Config::default()
        };
        assert!(bad.validate().is_err());
        let bad = T0Config {
            tau_max: 0.0,
            ..T0Config::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn monotone_class_mismatch_is_rejected() {
        let lp = ReferenceFunction::log_power(2.0, 1.0).unwrap();
        assert_eq!(lp.g_class(), Some(GMonotone::NonIncreasing));
        assert!(lp.clone().with_g_class(Some(GMonotone::NonDecreasing)).is_err());
        // constant g satisfies both classes
        let flat_g = ReferenceFunction::log_power(1.0, 1.0).unwrap();
        assert!(flat_g.clone().with_g_class(Some(GMonotone::NonIncreasing)).is_ok());
        // power law with small theta*alpha has non-monotone g
        assert!(ReferenceFunction::power_law(0.4, 1.0).unwrap().g_class().is_none());
        assert!(ReferenceFunction::power_law(0.4, 1.0)
            .unwrap()
            .with_g_class(Some(GMonotone::NonIncreasing))
            .is_err());
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        let rising = Arc::new(|s: f64| 1.0 + s);
        assert!(ReferenceFunction::custom(rising, 1.0, 10.0, None, 2.0).is_err());
        let pl = ReferenceFunction::power_law(1.0, 1.0).unwrap();
        assert!(pl.clone().with_lipschitz(0.5).is_err());
        assert!(ReferenceFunction::power_law(-1.0, 1.0).is_err());
        assert!(ReferenceFunction::power_law(1.0, 2.0).is_err());
        // fast decay breaks doubling
        let fast = Arc::new(|s: f64| (-s).exp());
        assert!(ReferenceFunction::custom(fast, 1.0, 1.0, None, 4.0).is_err());
    }

    #[test]
    fn ln_f_log1p_matches_direct_evaluation() {
        for rf in [
            ReferenceFunction::log_power(2.0, 1.0).unwrap(),
            ReferenceFunction::power_law(0.7, 1.3).unwrap(),
        ] {
            for s in [0.0, 0.5, 3.0, 1e3, 1e8] {
                let direct = rf.eval_f(s).unwrap().ln();
                assert!((rf.ln_f_log1p(s.ln_1p()) - direct).abs() < 1e-12 * direct.abs().max(1.0));
            }
        }
    }
}
