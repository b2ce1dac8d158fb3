//! Closed-form two-sided envelopes for the Dirichlet heat kernel of the
//! killed symmetric α-stable process on a horn, and the auxiliary shapes
//! (boundary factor Ψ, ground-state proxy φ, survival bound, IU constant).
//!
//! Everything is evaluated in natural-log form.

mod examples;
mod quadrature;

use std::fmt;
use std::str::FromStr;

pub use examples::{example_log_power_table_log, example_power_law_f_log, LogPowerTableCutoffs, TableEntry};
pub use quadrature::log_add_exp;

use crate::error::{domain, usage, HornError, Result};
use crate::geometry::{Domain, HornRegion};
use crate::reference::{softplus, GMonotone, ReferenceFunction, T0Config};

/// Dimension and stability index of the process.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProcessParams {
    pub d: usize,
    pub alpha: f64,
}

impl ProcessParams {
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        if d < 2 {
            return Err(domain(format!("dimension must be at least 2, got {d}")));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(domain(format!("alpha must lie in (0, 2), got {alpha}")));
        }
        Ok(ProcessParams { d, alpha })
    }

    pub(crate) fn df(&self) -> f64 {
        self.d as f64
    }
}

/// Time-space regime of the kernel estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Regime {
    ShortTime,
    Intermediate,
    LongTimeIU,
    LongTimeNonIU,
}

impl Regime {
    pub const ALL: [Regime; 4] = [
        Regime::ShortTime,
        Regime::Intermediate,
        Regime::LongTimeIU,
        Regime::LongTimeNonIU,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Regime::ShortTime => "ShortTime",
            Regime::Intermediate => "Intermediate",
            Regime::LongTimeIU => "LongTimeIU",
            Regime::LongTimeNonIU => "LongTimeNonIU",
        }
    }

    /// Position in the short → intermediate → long ordering.
    pub fn stage(&self) -> u8 {
        match self {
            Regime::ShortTime => 0,
            Regime::Intermediate => 1,
            Regime::LongTimeIU | Regime::LongTimeNonIU => 2,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Regime {
    type Err = HornError;

    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|r| r.label() == s)
            .ok_or_else(|| usage(format!("unknown regime label {s:?}")))
    }
}

/// The existential constants of the two-sided estimates, made explicit.
///
/// `j_*` constants parametrize the long-time integral
/// `∫_0^{inner·s₁(time·t)} f^{d-1} e^{-rate·t·f^{-α}} ds` and its tail `e^{-tail·t}`,
/// one set per side of the bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeConstants {
    pub c_short: f64,
    pub c_long: f64,
    pub kappa_low: f64,
    pub kappa_up: f64,
    pub kappa_long_low: f64,
    pub kappa_long_up: f64,
    pub a_low: f64,
    pub a_up: f64,
    pub j_inner_scale_low: f64,
    pub j_time_scale_low: f64,
    pub j_rate_low: f64,
    pub j_tail_rate_low: f64,
    pub j_inner_scale_up: f64,
    pub j_time_scale_up: f64,
    pub j_rate_up: f64,
    pub j_tail_rate_up: f64,
}

impl Default for EnvelopeConstants {
    fn default() -> Self {
        EnvelopeConstants {
            c_short: 1.0,
            c_long: 1.0,
            kappa_low: 4.0,
            kappa_up: 0.25,
            kappa_long_low: 1.0,
            kappa_long_up: 1.0,
            a_low: 0.01,
            a_up: 100.0,
            j_inner_scale_low: 1.0,
            j_time_scale_low: 1.0,
            j_rate_low: 1.0,
            j_tail_rate_low: 1.0,
            j_inner_scale_up: 1.0,
            j_time_scale_up: 1.0,
            j_rate_up: 1.0,
            j_tail_rate_up: 1.0,
        }
    }
}

impl EnvelopeConstants {
    pub const KEYS: [&'static str; 16] = [
        "c_short",
        "c_long",
        "kappa_low",
        "kappa_up",
        "kappa_long_low",
        "kappa_long_up",
        "a_low",
        "a_up",
        "j_inner_scale_low",
        "j_time_scale_low",
        "j_rate_low",
        "j_tail_rate_low",
        "j_inner_scale_up",
        "j_time_scale_up",
        "j_rate_up",
        "j_tail_rate_up",
    ];

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "c_short" => &mut self.c_short,
            "c_long" => &mut self.c_long,
            "kappa_low" => &mut self.kappa_low,
            "kappa_up" => &mut self.kappa_up,
            "kappa_long_low" => &mut self.kappa_long_low,
            "kappa_long_up" => &mut self.kappa_long_up,
            "a_low" => &mut self.a_low,
            "a_up" => &mut self.a_up,
            "j_inner_scale_low" => &mut self.j_inner_scale_low,
            "j_time_scale_low" => &mut self.j_time_scale_low,
            "j_rate_low" => &mut self.j_rate_low,
            "j_tail_rate_low" => &mut self.j_tail_rate_low,
            "j_inner_scale_up" => &mut self.j_inner_scale_up,
            "j_time_scale_up" => &mut self.j_time_scale_up,
            "j_rate_up" => &mut self.j_rate_up,
            "j_tail_rate_up" => &mut self.j_tail_rate_up,
            _ => return None,
        })
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        let mut copy = *self;
        copy.slot(key).map(|v| *v)
    }

    /// Set one constant by its field name.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        match self.slot(key) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(HornError::Config(format!("unknown envelope constant {key:?}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for key in Self::KEYS {
            let v = self.get(key).unwrap_or(f64::NAN);
            if !(v > 0.0 && v.is_finite()) {
                return Err(HornError::Config(format!("{key} must be positive and finite, got {v}")));
            }
        }
        if self.kappa_low < self.kappa_up || self.kappa_long_low < self.kappa_long_up {
            return Err(HornError::Config("kappa_low must not be below kappa_up".into()));
        }
        if self.a_low > self.a_up {
            return Err(HornError::Config("a_low must not exceed a_up".into()));
        }
        Ok(())
    }
}

/// Log-scale lower and upper bounds for `p_D(t, x, y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogEnvelope {
    pub log_lower: f64,
    pub log_upper: f64,
    pub regime: Regime,
}

/// `ln min(t^{-d/α}, t r^{-(d+α)})`.
pub fn free_kernel_log(p: &ProcessParams, t: f64, r: f64) -> f64 {
    let near = -(p.df() / p.alpha) * t.ln();
    if r <= 0.0 {
        return near;
    }
    near.min(t.ln() - (p.df() + p.alpha) * r.ln())
}

/// `ln ∫_0^S f(s)^{d−1} exp(−rate·t·f(s)^{−α}) ds` with `upper_log = ln S`.
///
/// Integrates in `u = ln(1+s)` over unit panels and accumulates the panels
/// with log-sum-exp, so `S` may be far beyond the `f64` range.
pub fn long_time_integral_log(
    f: &ReferenceFunction,
    p: &ProcessParams,
    upper_log: f64,
    rate: f64,
    t: f64,
) -> Result<f64> {
    if !upper_log.is_finite() || !(rate.is_finite() && rate > 0.0) || !(t.is_finite() && t > 0.0) {
        return Err(domain(format!(
            "long-time integral needs finite inputs, got upper_log={upper_log}, rate={rate}, t={t}"
        )));
    }
    panel_integral_log(f, p, upper_log, rate * t)
}

/// `ln ∫_0^S f(s)^{d−1} ds` with `upper_log = ln S`.
pub fn profile_mass_log(f: &ReferenceFunction, p: &ProcessParams, upper_log: f64) -> Result<f64> {
    if !upper_log.is_finite() {
        return Err(domain(format!("upper limit must be finite, got ln S = {upper_log}")));
    }
    panel_integral_log(f, p, upper_log, 0.0)
}

fn panel_integral_log(f: &ReferenceFunction, p: &ProcessParams, upper_log: f64, rate_t: f64) -> Result<f64> {
    const PANEL_REL_TOL: f64 = 1e-8;
    const MAX_PANELS: f64 = 1e7;
    let u_max = softplus(upper_log);
    let dm1 = p.df() - 1.0;
    let alpha = p.alpha;
    let log_g = |u: f64| {
        let lf = f.ln_f_log1p(u);
        dm1 * lf - rate_t * (-alpha * lf).exp() + u
    };
    let mut total = f64::NEG_INFINITY;
    let mut recent = [f64::NEG_INFINITY; 3];
    let mut a = 0.0;
    let mut k = 0u64;
    while a < u_max {
        if k as f64 > MAX_PANELS {
            return Err(domain("long-time integral did not settle within the panel budget"));
        }
        let b = (a + 1.0).min(u_max);
        let panel = quadrature::log_integral_panel(&log_g, a, b, PANEL_REL_TOL);
        total = log_add_exp(total, panel);
        recent = [recent[1], recent[2], panel];
        // super-exponentially decaying tail: stop once it is far below the sum
        if k >= 3 && recent[0] > recent[1] && recent[1] > recent[2] && log_g(b) < total - 60.0 {
            break;
        }
        a = b;
        k += 1;
    }
    Ok(total)
}

/// Estimate evaluator bound to one region, process, constant set and t₀ solver.
#[derive(Clone, Debug)]
pub struct HeatKernelModel {
    region: HornRegion,
    params: ProcessParams,
    consts: EnvelopeConstants,
    t0_cfg: T0Config,
}

impl HeatKernelModel {
    pub fn new(region: HornRegion, params: ProcessParams, consts: EnvelopeConstants, t0_cfg: T0Config) -> Result<Self> {
        if region.dim() != params.d {
            return Err(usage(format!(
                "region lives in R^{} but the process in R^{}",
                region.dim(),
                params.d
            )));
        }
        if (region.reference().alpha() - params.alpha).abs() > 1e-15 {
            return Err(usage("reference function and process disagree on alpha"));
        }
        consts.validate()?;
        t0_cfg.validate()?;
        Ok(HeatKernelModel {
            region,
            params,
            consts,
            t0_cfg,
        })
    }

    pub fn region(&self) -> &HornRegion {
        &self.region
    }

    pub fn reference(&self) -> &ReferenceFunction {
        self.region.reference()
    }

    pub fn params(&self) -> &ProcessParams {
        &self.params
    }

    pub fn consts(&self) -> &EnvelopeConstants {
        &self.consts
    }

    pub fn t0_config(&self) -> &T0Config {
        &self.t0_cfg
    }

    /// Same model with a different constant set.
    pub fn with_consts(&self, consts: EnvelopeConstants) -> Result<Self> {
        consts.validate()?;
        Ok(HeatKernelModel { consts, ..self.clone() })
    }

    fn interior(&self, x: &[f64]) -> Result<(f64, f64)> {
        if !self.region.try_contains(x)? {
            return Err(domain("point lies outside the region"));
        }
        let delta = self.region.delta(x);
        let f = self.reference().f_raw(x[0]);
        Ok((delta, f))
    }

    fn check_t(t: f64) -> Result<()> {
        if t > 0.0 && t.is_finite() {
            Ok(())
        } else {
            Err(domain(format!("time must be positive and finite, got {t}")))
        }
    }

    /// `ln Ψ(t,x)` with `Ψ = [δ^{α/2}(f(x₁)^{α/2} ∧ t^{1/2}) / (t ∧ 1)] ∧ 1`.
    pub fn psi_log(&self, t: f64, x: &[f64]) -> Result<f64> {
        Self::check_t(t)?;
        let (delta, f) = self.interior(x)?;
        Ok(self.psi_log_from(t, delta, f))
    }

    fn psi_log_from(&self, t: f64, delta: f64, f: f64) -> f64 {
        let h = 0.5 * self.params.alpha;
        let ratio = h * delta.ln() + (h * f.ln()).min(0.5 * t.ln()) - t.min(1.0).ln();
        ratio.min(0.0)
    }

    /// `ln φ(x)` with `φ = δ^{α/2} f(x₁)^{α/2} / (1+|x|)^{d+α}`.
    pub fn phi_log(&self, x: &[f64]) -> Result<f64> {
        let (delta, f) = self.interior(x)?;
        Ok(self.phi_log_from(x, delta, f))
    }

    fn phi_log_from(&self, x: &[f64], delta: f64, f: f64) -> f64 {
        let h = 0.5 * self.params.alpha;
        h * (delta.ln() + f.ln()) - (self.params.df() + self.params.alpha) * norm(x).ln_1p()
    }

    /// Crossover time `t₀(x)`.
    pub fn t0(&self, x: &[f64]) -> Result<f64> {
        self.reference().t0(x[0], norm(x), self.params.d, &self.t0_cfg)
    }

    /// Regime of `(t, x, y)`; symmetric in `x` and `y`. Ties at a cutoff go to the earlier regime.
    pub fn classify(&self, t: f64, x: &[f64], y: &[f64]) -> Result<Regime> {
        Self::check_t(t)?;
        let (_, fx) = self.interior(x)?;
        let (_, fy) = self.interior(y)?;
        self.classify_from(t, x, y, fx.max(fy))
    }

    fn classify_from(&self, t: f64, x: &[f64], y: &[f64], big_f: f64) -> Result<Regime> {
        let short_cut = (self.consts.c_short * big_f.powf(self.params.alpha)).min(1.0);
        if t <= short_cut {
            return Ok(Regime::ShortTime);
        }
        let class = self
            .reference()
            .g_class()
            .ok_or_else(|| usage("beyond short times the estimates need g with a declared monotone class"))?;
        let (tx, ty) = (self.t0(x)?, self.t0(y)?);
        match class {
            GMonotone::NonIncreasing => Ok(if t <= self.consts.c_long * tx.max(ty) {
                Regime::Intermediate
            } else {
                Regime::LongTimeIU
            }),
            GMonotone::NonDecreasing => Ok(if t <= self.consts.c_long * tx.min(ty) {
                Regime::Intermediate
            } else {
                Regime::LongTimeNonIU
            }),
        }
    }

    /// `ln max{J, e^{-tail·t}}` for one side of the long-time IU bound.
    fn long_time_max_term(&self, t: f64, inner: f64, time_scale: f64, rate: f64, tail: f64) -> Result<f64> {
        let s1 = self.reference().s1(time_scale * t)?;
        if s1.is_unbounded() {
            return Err(domain("s1 is unbounded at this time; the long-time integral diverges"));
        }
        let j = long_time_integral_log(self.reference(), &self.params, inner.ln() + s1.ln_value, rate, t)?;
        Ok(j.max(-tail * t))
    }

    /// Two-sided log envelope for `p_D(t, x, y)`.
    pub fn envelope(&self, t: f64, x: &[f64], y: &[f64]) -> Result<LogEnvelope> {
        Self::check_t(t)?;
        let (dx, fx) = self.interior(x)?;
        let (dy, fy) = self.interior(y)?;
        let big_f = fx.max(fy);
        let regime = self.classify_from(t, x, y, big_f)?;
        let c = &self.consts;
        let (log_lower, log_upper) = match regime {
            Regime::ShortTime | Regime::Intermediate => {
                let r = dist(x, y);
                let psi = self.psi_log_from(t, dx, fx) + self.psi_log_from(t, dy, fy);
                let core = free_kernel_log(&self.params, t, r) + psi;
                if regime == Regime::ShortTime {
                    (c.a_low.ln() + core, c.a_up.ln() + core)
                } else {
                    let scaled = t * big_f.powf(-self.params.alpha);
                    (
                        c.a_low.ln() + core - c.kappa_low * scaled,
                        c.a_up.ln() + core - c.kappa_up * scaled,
                    )
                }
            }
            Regime::LongTimeIU => {
                let core = self.phi_log_from(x, dx, fx) + self.phi_log_from(y, dy, fy);
                let low = self.long_time_max_term(
                    t,
                    c.j_inner_scale_low,
                    c.j_time_scale_low,
                    c.j_rate_low,
                    c.j_tail_rate_low,
                )?;
                let up =
                    self.long_time_max_term(t, c.j_inner_scale_up, c.j_time_scale_up, c.j_rate_up, c.j_tail_rate_up)?;
                (c.a_low.ln() + core + low, c.a_up.ln() + core + up)
            }
            Regime::LongTimeNonIU => {
                let core = self.phi_log_from(x, dx, fx) + self.phi_log_from(y, dy, fy);
                (
                    c.a_low.ln() + core - c.kappa_long_low * t,
                    c.a_up.ln() + core - c.kappa_long_up * t,
                )
            }
        };
        Ok(LogEnvelope {
            log_lower,
            log_upper,
            regime,
        })
    }

    /// `ln[Ψ(t,x) · min{e^{−c₂ t f(x₁)^{−α}} + t(1+|x|)^{−(d+α−1)}, e^{−c₂ t}}]`.
    pub fn survival_upper_log(&self, c2: f64, t: f64, x: &[f64]) -> Result<f64> {
        Self::check_t(t)?;
        if !(c2 > 0.0 && c2.is_finite()) {
            return Err(domain(format!("c2 must be positive, got {c2}")));
        }
        let (delta, f) = self.interior(x)?;
        let psi = self.psi_log_from(t, delta, f);
        let a = self.params.alpha;
        let inner = -c2 * t * f.powf(-a);
        let jump_in = t.ln() - (self.params.df() + a - 1.0) * norm(x).ln_1p();
        Ok(psi + log_add_exp(inner, jump_in).min(-c2 * t))
    }

    /// Log of the intrinsic-ultracontractivity constant `C_{D,t}`.
    ///
    /// Below `cutoff` this is `t^{−2−d/α}(1+s₁(c t))^{2d+2α}`; above it, the
    /// long-time max term of the upper envelope.
    pub fn iu_constant_log(&self, t: f64, cutoff: f64) -> Result<f64> {
        Self::check_t(t)?;
        if self.reference().g_class() != Some(GMonotone::NonIncreasing) {
            return Err(usage("the IU constant requires non-increasing g"));
        }
        let c = &self.consts;
        let (d, a) = (self.params.df(), self.params.alpha);
        if t <= cutoff {
            let s1 = self.reference().s1(c.j_time_scale_up * t)?;
            Ok(-(2.0 + d / a) * t.ln() + (2.0 * d + 2.0 * a) * softplus(s1.ln_value))
        } else {
            self.long_time_max_term(t, c.j_inner_scale_up, c.j_time_scale_up, c.j_rate_up, c.j_tail_rate_up)
        }
    }

    /// `ln[δ^{α/2} (f(x₁)^{α/2} ∧ t^{1/2})]`, the shape of the expected exit time bound.
    pub fn expected_exit_time_upper_log(&self, t: f64, x: &[f64]) -> Result<f64> {
        Self::check_t(t)?;
        let (delta, f) = self.interior(x)?;
        let h = 0.5 * self.params.alpha;
        Ok(h * delta.ln() + (h * f.ln()).min(0.5 * t.ln()))
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}
