//! Closed-form shapes for the two worked profiles: `log^{-θ}(2+s)` (four or
//! three time branches) and `(1+s)^{-θ}` (the long-time factor `F(t)`).

use super::{free_kernel_log, norm, ProcessParams};
use crate::error::{domain, usage, Result};
use crate::geometry::{Domain, HornRegion};
use crate::reference::Profile;

/// Multipliers of the branch cutoffs `t₁`, `t₂` and the final constant time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogPowerTableCutoffs {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for LogPowerTableCutoffs {
    fn default() -> Self {
        LogPowerTableCutoffs {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
        }
    }
}

/// One evaluated branch of the table; branches are numbered from 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableEntry {
    pub branch: u8,
    pub log_shape: f64,
}

/// Log of the explicit kernel shape for a region with `f(s) = log^{-θ}(2+s)`.
pub fn example_log_power_table_log(
    region: &HornRegion,
    p: &ProcessParams,
    t: f64,
    x: &[f64],
    y: &[f64],
    cutoffs: &LogPowerTableCutoffs,
) -> Result<TableEntry> {
    let theta = match region.reference().profile() {
        Profile::LogPower { theta } => *theta,
        _ => return Err(usage("the log-power table needs a log-power region")),
    };
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain(format!("time must be positive, got {t}")));
    }
    for z in [x, y] {
        if !region.try_contains(z)? {
            return Err(domain("point lies outside the region"));
        }
    }
    let a = p.alpha;
    let ta = theta * a;
    let h = 0.5 * a;
    let log_l = |z: &[f64]| (std::f64::consts::E + norm(z)).ln().ln();
    let log_l_min = (std::f64::consts::E + norm(x).min(norm(y))).ln().ln();
    let t1 = (-ta * log_l_min).exp();
    let t2 = (-(ta - 1.0) * log_l_min).exp();

    let boundary_short = |z: &[f64]| {
        let v = h * region.delta(z).ln() + (-0.5 * ta * log_l(z)).min(0.5 * t.ln()) - t.ln();
        v.min(0.0)
    };
    let boundary_mid = |z: &[f64]| h * region.delta(z).ln() - 0.5 * ta * log_l(z) - t.ln();
    let ground = |z: &[f64]| h * region.delta(z).ln() - 0.5 * ta * log_l(z) - (p.d as f64 + a) * norm(z).ln_1p();
    let free = free_kernel_log(p, t, super::dist(x, y));

    let entry = |branch: u8, log_shape: f64| Ok(TableEntry { branch, log_shape });
    if t <= cutoffs.c1 * t1 {
        return entry(1, free + (boundary_short(x) + boundary_short(y)));
    }
    if t <= cutoffs.c2 * t2 {
        let decay = t * (ta * log_l_min).exp();
        return entry(2, free + (boundary_mid(x) + boundary_mid(y)) - decay);
    }
    let grounds = ground(x) + ground(y);
    if ta > 1.0 {
        if t <= cutoffs.c3 {
            entry(3, grounds + t.powf(-1.0 / (ta - 1.0)))
        } else {
            entry(4, grounds - t)
        }
    } else {
        entry(3, grounds - t)
    }
}

/// `ln F(t)` for `f(s) = (1+s)^{-θ}`:
/// `F = 1 ∨ t^{-(1+θ(1-d))/(θα)}`, or `log(1 + 1/t)` when `θ = 1/(d−1)`.
pub fn example_power_law_f_log(theta: f64, p: &ProcessParams, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) || !(theta > 0.0) {
        return Err(domain(format!("need t > 0 and theta > 0, got t={t}, theta={theta}")));
    }
    let dm1 = p.d as f64 - 1.0;
    if (theta * dm1 - 1.0).abs() <= 1e-12 {
        return Ok(t.recip().ln_1p().ln());
    }
    let exponent = (1.0 + theta * (1.0 - p.d as f64)) / (theta * p.alpha);
    Ok((-exponent * t.ln()).max(0.0))
}
