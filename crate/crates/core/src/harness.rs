//! Grid sweeps that put Monte Carlo estimates next to the analytic
//! envelopes, plus the purely analytic checks (asymptotic windows and the
//! failure of the Varopoulos factorization).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use crate::envelopes::{
    example_power_law_f_log, free_kernel_log, long_time_integral_log, profile_mass_log, EnvelopeConstants,
    HeatKernelModel, ProcessParams, Regime,
};
use crate::error::{usage, HornError, Result};
use crate::geometry::{Domain, HornRegion};
use crate::reference::{GMonotone, Profile, ReferenceFunction};
use crate::simulator::{kernel_curve_mc, survival_curve_mc, MCConfig, MCResult};

/// What to sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub t_grid: Vec<f64>,
    pub point_pairs: Vec<(Vec<f64>, Vec<f64>)>,
    pub mc: MCConfig,
    pub consts: EnvelopeConstants,
}

impl SweepSpec {
    pub fn validate(&self, region: &HornRegion) -> Result<()> {
        if self.t_grid.is_empty() || self.point_pairs.is_empty() {
            return Err(usage("the sweep needs at least one time and one point pair"));
        }
        if self.t_grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(usage("sweep times must be positive and finite"));
        }
        for (x, y) in &self.point_pairs {
            for z in [x, y] {
                if !region.try_contains(z)? {
                    return Err(usage(format!("point {z:?} is not interior to the region")));
                }
            }
        }
        self.mc.validate()?;
        self.consts.validate()
    }

    /// Times sorted ascending, with the permutation back to grid order.
    fn sorted_times(&self) -> (Vec<f64>, Vec<usize>) {
        let mut order: Vec<usize> = (0..self.t_grid.len()).collect();
        order.sort_by(|&a, &b| self.t_grid[a].total_cmp(&self.t_grid[b]));
        let mut times: Vec<f64> = order.iter().map(|&i| self.t_grid[i]).collect();
        times.dedup();
        let rank = self
            .t_grid
            .iter()
            .map(|t| times.iter().position(|s| s == t).unwrap_or(0))
            .collect();
        (times, rank)
    }
}

/// One `(t, x, y)` cell of a report.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `None` when the envelope could not be evaluated.
    pub regime: Option<Regime>,
    pub log_lower: f64,
    pub log_upper: f64,
    /// Log of the estimate; for censored cells, of the rule-of-three bound.
    pub log_mc: f64,
    /// Standard error of `log_mc` (delta method); NaN for censored cells.
    pub std_error: f64,
    pub ratio_lo: f64,
    pub ratio_hi: f64,
    pub censored: bool,
    pub error: Option<String>,
}

/// Smallest and largest value seen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Span {
    pub min: f64,
    pub max: f64,
}

impl Span {
    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    fn of(values: impl Iterator<Item = f64>) -> Option<Span> {
        values.filter(|v| v.is_finite()).fold(None, |acc, v| match acc {
            None => Some(Span { min: v, max: v }),
            Some(s) => Some(Span {
                min: s.min.min(v),
                max: s.max.max(v),
            }),
        })
    }
}

/// Log-ratio statistics for one regime. Censored rows are counted but
/// excluded from the spans.
#[derive(Clone, Debug, PartialEq)]
pub struct RegimeSummary {
    pub regime: Option<Regime>,
    pub rows: usize,
    pub censored: usize,
    pub ratio_lo: Option<Span>,
    pub ratio_hi: Option<Span>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub rows: Vec<ReportRow>,
    pub summary: Vec<RegimeSummary>,
}

fn fmt_num(v: f64) -> String {
    format!("{v:e}")
}

impl VerificationReport {
    fn new(rows: Vec<ReportRow>) -> Self {
        let mut groups: BTreeMap<Option<Regime>, Vec<&ReportRow>> = BTreeMap::new();
        for r in &rows {
            groups.entry(r.regime).or_default().push(r);
        }
        let summary = groups
            .into_iter()
            .map(|(regime, rs)| {
                let live = || rs.iter().filter(|r| !r.censored);
                RegimeSummary {
                    regime,
                    rows: rs.len(),
                    censored: rs.iter().filter(|r| r.censored).count(),
                    ratio_lo: Span::of(live().map(|r| r.ratio_lo)),
                    ratio_hi: Span::of(live().map(|r| r.ratio_hi)),
                }
            })
            .collect();
        VerificationReport { rows, summary }
    }

    pub fn csv_header(d: usize) -> String {
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=d).map(|i| format!("x{i}")));
        cols.extend((1..=d).map(|i| format!("y{i}")));
        cols.extend(
            [
                "regime",
                "log_lower",
                "log_upper",
                "log_mc",
                "std_error",
                "ratio_lo",
                "ratio_hi",
                "censored",
            ]
            .map(String::from),
        );
        cols.join(",")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let d = self.rows.first().map_or(0, |r| r.x.len());
        writeln!(w, "{}", Self::csv_header(d))?;
        for r in &self.rows {
            let mut fields = vec![fmt_num(r.t)];
            fields.extend(r.x.iter().chain(&r.y).map(|v| fmt_num(*v)));
            fields.push(r.regime.map_or("error", |g| g.label()).to_string());
            fields.extend([r.log_lower, r.log_upper, r.log_mc, r.std_error, r.ratio_lo, r.ratio_hi].map(fmt_num));
            fields.push(r.censored.to_string());
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }

    /// `key = value` lines, one block per regime.
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "rows = {}", self.rows.len());
        let _ = writeln!(out, "censored = {}", self.rows.iter().filter(|r| r.censored).count());
        let _ = writeln!(
            out,
            "errors = {}",
            self.rows.iter().filter(|r| r.error.is_some()).count()
        );
        for s in &self.summary {
            let name = s.regime.map_or("error", |g| g.label());
            let _ = writeln!(out, "{name}.rows = {}", s.rows);
            let _ = writeln!(out, "{name}.censored = {}", s.censored);
            for (side, span) in [("ratio_lo", s.ratio_lo), ("ratio_hi", s.ratio_hi)] {
                if let Some(span) = span {
                    let _ = writeln!(out, "{name}.{side}.min = {:e}", span.min);
                    let _ = writeln!(out, "{name}.{side}.max = {:e}", span.max);
                    let _ = writeln!(out, "{name}.{side}.range = {:e}", span.width());
                }
            }
        }
        out
    }
}

fn log_estimate(mc: &MCResult) -> (f64, f64) {
    if mc.censored {
        (mc.std_error.ln(), f64::NAN)
    } else {
        (mc.estimate.ln(), mc.std_error / mc.estimate)
    }
}

fn pair_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Kernel estimates against the two-sided envelope at every `(t, x, y)`.
pub fn sweep(model: &HeatKernelModel, spec: &SweepSpec) -> Result<VerificationReport> {
    spec.validate(model.region())?;
    let model = model.with_consts(spec.consts)?;
    let (times, rank) = spec.sorted_times();
    let mut rows = Vec::with_capacity(spec.point_pairs.len() * spec.t_grid.len());
    for (k, (x, y)) in spec.point_pairs.iter().enumerate() {
        let cfg = MCConfig {
            seed: pair_seed(spec.mc.seed, k),
            ..spec.mc
        };
        let curve = kernel_curve_mc(model.region(), model.params(), x, y, &times, &cfg);
        for (i, &t) in spec.t_grid.iter().enumerate() {
            let env = model.envelope(t, x, y);
            let mc = curve.as_ref().map(|c| c[rank[i]]);
            rows.push(make_row(t, x, y, env.map(|e| (e.regime, e.log_lower, e.log_upper)), mc));
        }
    }
    Ok(VerificationReport::new(rows))
}

fn make_row(
    t: f64,
    x: &[f64],
    y: &[f64],
    env: Result<(Regime, f64, f64)>,
    mc: std::result::Result<MCResult, &HornError>,
) -> ReportRow {
    let mut error = None;
    let (regime, log_lower, log_upper) = match env {
        Ok((g, lo, hi)) => (Some(g), lo, hi),
        Err(e) => {
            error = Some(e.to_string());
            (None, f64::NAN, f64::NAN)
        }
    };
    let (log_mc, std_error, censored) = match mc {
        Ok(m) => {
            let (l, s) = log_estimate(&m);
            (l, s, m.censored)
        }
        Err(e) => {
            error.get_or_insert_with(|| e.to_string());
            (f64::NAN, f64::NAN, false)
        }
    };
    ReportRow {
        t,
        x: x.to_vec(),
        y: y.to_vec(),
        regime,
        log_lower,
        log_upper,
        log_mc,
        std_error,
        ratio_lo: log_mc - log_lower,
        ratio_hi: log_upper - log_mc,
        censored,
        error,
    }
}

/// One survival estimate at `(t, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SurvivalSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub mc: MCResult,
}

/// Survival estimates at every `x` and `t`, one coupled path set per `x`.
pub fn survival_samples(
    model: &HeatKernelModel,
    xs: &[Vec<f64>],
    t_grid: &[f64],
    mc: &MCConfig,
) -> Result<Vec<SurvivalSample>> {
    let mut times = t_grid.to_vec();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut out = Vec::new();
    for (k, x) in xs.iter().enumerate() {
        let cfg = MCConfig {
            seed: pair_seed(mc.seed, k),
            ..*mc
        };
        let curve = survival_curve_mc(model.region(), model.params(), x, &times, &cfg)?;
        for &t in t_grid {
            let i = times.iter().position(|s| *s == t).unwrap_or(0);
            out.push(SurvivalSample {
                t,
                x: x.clone(),
                mc: curve[i],
            });
        }
    }
    Ok(out)
}

/// Largest `c₂` on a logarithmic grid over `[10⁻⁴, 10²]` for which every
/// non-censored estimate lies below `a_up · bound + 3σ`.
pub fn fit_survival_rate(model: &HeatKernelModel, samples: &[SurvivalSample]) -> Result<f64> {
    let a_up = model.consts().a_up;
    let feasible = |c2: f64| -> Result<bool> {
        for s in samples.iter().filter(|s| !s.mc.censored) {
            let bound = a_up * model.survival_upper_log(c2, s.t, &s.x)?.exp();
            if s.mc.estimate > bound + 3.0 * s.mc.std_error {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let mut best = None;
    for k in -80..=40 {
        let c2 = 10f64.powf(k as f64 / 20.0);
        if feasible(c2)? {
            best = Some(c2);
        } else {
            break;
        }
    }
    best.ok_or_else(|| HornError::Domain("no decay rate c2 in [1e-4, 1e2] is consistent with the samples".into()))
}

/// Which term of `min{e^{−c₂tf^{−α}} + t(1+|x|)^{−(d+α−1)}, e^{−c₂t}}` is active:
/// 1 for the inner exponential, 2 for the jump term, 3 for `e^{−c₂t}`.
pub fn survival_branch(model: &HeatKernelModel, c2: f64, t: f64, x: &[f64]) -> Result<u8> {
    let p = model.params();
    let f = model.reference().eval_f(x[0].max(0.0))?;
    let inner = -c2 * t * f.powf(-p.alpha);
    let norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    let jump = t.ln() - (p.d as f64 + p.alpha - 1.0) * norm.ln_1p();
    let sum = crate::envelopes::log_add_exp(inner, jump);
    Ok(if -c2 * t < sum {
        3
    } else if inner >= jump {
        1
    } else {
        2
    })
}

/// Survival estimates against the one-sided survival bound. The `x` of each
/// pair is used; `c2` is fitted from the same samples when not given.
pub fn survival_sweep(model: &HeatKernelModel, spec: &SweepSpec, c2: Option<f64>) -> Result<(VerificationReport, f64)> {
    spec.validate(model.region())?;
    let model = model.with_consts(spec.consts)?;
    let xs: Vec<Vec<f64>> = spec.point_pairs.iter().map(|(x, _)| x.clone()).collect();
    let samples = survival_samples(&model, &xs, &spec.t_grid, &spec.mc)?;
    let c2 = match c2 {
        Some(c) => c,
        None => fit_survival_rate(&model, &samples)?,
    };
    let log_a = model.consts().a_up.ln();
    let rows = samples
        .iter()
        .map(|s| {
            let env = model.survival_upper_log(c2, s.t, &s.x).and_then(|up| {
                let regime = model.classify(s.t, &s.x, &s.x)?;
                Ok((regime, f64::NEG_INFINITY, log_a + up))
            });
            make_row(s.t, &s.x, &s.x, env, Ok(s.mc))
        })
        .collect();
    Ok((VerificationReport::new(rows), c2))
}

/// One line of the Varopoulos comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct VaropoulosRow {
    pub y_norm: f64,
    pub x_norm: f64,
    pub regime: Regime,
    /// Log of the lower kernel envelope.
    pub log_lower: f64,
    /// Log of free kernel × survival bound at `x` × survival bound at `y`.
    pub log_product: f64,
    pub gap: f64,
    /// Set when the row is outside the long-time IU regime or shows no gap.
    pub flagged: bool,
}

/// Lower kernel envelope against the Varopoulos product at `x = (2|y|, 0)`,
/// `y = (|y|, 0)` and fixed `t`. All analytic.
pub fn varopoulos_demo(
    model: &HeatKernelModel,
    c2: f64,
    t_fixed: f64,
    y_magnitudes: &[f64],
) -> Result<Vec<VaropoulosRow>> {
    if model.reference().g_class() != Some(GMonotone::NonIncreasing) {
        return Err(usage("the Varopoulos comparison needs non-increasing g"));
    }
    let d = model.params().d;
    let axis = |s: f64| {
        let mut z = vec![0.0; d];
        z[0] = s;
        z
    };
    y_magnitudes
        .iter()
        .map(|&m| {
            let (x, y) = (axis(2.0 * m), axis(m));
            let env = model.envelope(t_fixed, &x, &y)?;
            let log_product = free_kernel_log(model.params(), t_fixed, m)
                + model.survival_upper_log(c2, t_fixed, &x)?
                + model.survival_upper_log(c2, t_fixed, &y)?;
            let gap = env.log_lower - log_product;
            Ok(VaropoulosRow {
                y_norm: m,
                x_norm: 2.0 * m,
                regime: env.regime,
                log_lower: env.log_lower,
                log_product,
                gap,
                flagged: env.regime != Regime::LongTimeIU || gap <= 0.0,
            })
        })
        .collect()
}

/// Largest `t₀` along the axis over `x₁ ∈ [0, 10⁶]`, a stand-in for `‖t₀‖_∞`.
pub fn t0_sup(model: &HeatKernelModel) -> Result<f64> {
    let d = model.params().d;
    let mut best = 0.0f64;
    for k in -1..=24 {
        let mut x = vec![0.0; d];
        x[0] = if k < 0 { 0.0 } else { 10f64.powf(k as f64 / 4.0) };
        best = best.max(model.t0(&x)?);
    }
    Ok(best)
}

/// Outcome of one analytic window check.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticCheck {
    pub name: &'static str,
    pub measured: Span,
    /// Human-readable acceptance window.
    pub window: String,
    pub passed: bool,
}

/// `t₀(x) / (f(x₁)^α log(2+|x|))` along the axis for `|x| ∈ [1, 10⁶]`.
pub fn t0_ratio_window(model: &HeatKernelModel) -> Result<Span> {
    let f = model.reference();
    let d = model.params().d;
    let ratios = (0..=24).map(|k| {
        let r = 10f64.powf(k as f64 / 4.0);
        let mut x = vec![0.0; d];
        x[0] = r;
        let t0 = model.t0(&x)?;
        Ok(t0 / (f.eval_f(r)?.powf(f.alpha()) * (2.0 + r).ln()))
    });
    let ratios: Vec<f64> = ratios.collect::<Result<_>>()?;
    Span::of(ratios.into_iter()).ok_or_else(|| usage("empty t0 window"))
}

/// `t^{1/(θα−1)} · ln J(t)` for the log-power profile, where `J` is the
/// long-time integral up to `s₁(t)` with unit rate.
pub fn log_power_integral_scaled(f: &ReferenceFunction, p: &ProcessParams, ts: &[f64]) -> Result<Vec<f64>> {
    let theta = match f.profile() {
        Profile::LogPower { theta } => *theta,
        _ => return Err(usage("needs a log-power reference function")),
    };
    let e = theta * p.alpha - 1.0;
    if e <= 0.0 {
        return Err(usage("the integral grows like exp(t^{-1/(θα−1)}) only when θα > 1"));
    }
    ts.iter()
        .map(|&t| {
            let s1 = f.s1(t)?;
            Ok(long_time_integral_log(f, p, s1.ln_value, 1.0, t)? * t.powf(1.0 / e))
        })
        .collect()
}

/// `∫₀^{s₀(t)} f^{d−1} ds / F(t)` for `f = (1+s)^{−θ}` over the given times.
pub fn power_law_f_ratio_window(theta: f64, p: &ProcessParams, ts: &[f64]) -> Result<Span> {
    let f = ReferenceFunction::power_law(theta, p.alpha)?;
    let ratios: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let s0 = f.s0(t)?;
            Ok((profile_mass_log(&f, p, s0.ln_value)? - example_power_law_f_log(theta, p, t)?).exp())
        })
        .collect::<Result<_>>()?;
    Span::of(ratios.into_iter()).ok_or_else(|| usage("empty time grid"))
}

/// `n` times spread evenly in `log t` over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Analytic checks appropriate to the model's reference function.
pub fn asymptotics_suite(model: &HeatKernelModel) -> Result<Vec<AsymptoticCheck>> {
    let f = model.reference();
    let p = model.params();
    let mut out = Vec::new();
    let t0 = t0_ratio_window(model)?;
    out.push(AsymptoticCheck {
        name: "t0_ratio",
        measured: t0,
        window: "max/min <= 10".into(),
        passed: t0.max / t0.min <= 10.0,
    });
    match f.profile() {
        Profile::LogPower { theta } => {
            if theta * p.alpha > 1.0 {
                let v = log_power_integral_scaled(f, p, &[0.2, 0.1, 0.05])?;
                let ok = v
                    .windows(2)
                    .all(|w| (w[0] - w[1]).abs() <= 0.25 * w[0].abs().max(w[1].abs()));
                out.push(AsymptoticCheck {
                    name: "log_power_integral",
                    measured: Span::of(v.into_iter()).ok_or_else(|| usage("no values"))?,
                    window: "successive values within 25%".into(),
                    passed: ok,
                });
            }
            let long_iu = iu_emitted(model)?;
            out.push(AsymptoticCheck {
                name: "iu_threshold",
                measured: Span {
                    min: theta * p.alpha,
                    max: theta * p.alpha,
                },
                window: "LongTimeIU emitted iff theta*alpha > 1".into(),
                passed: long_iu == (theta * p.alpha > 1.0),
            });
        }
        Profile::PowerLaw { theta } => {
            let span = power_law_f_ratio_window(*theta, p, &log_grid(1e-3, 1.0, 13))?;
            out.push(AsymptoticCheck {
                name: "power_law_F",
                measured: span,
                window: "ratio in 1/5..5".into(),
                passed: span.min >= 0.2 && span.max <= 5.0,
            });
        }
        Profile::Custom(_) => return Err(usage("asymptotics need a log-power or power-law reference function")),
    }
    Ok(out)
}

fn iu_emitted(model: &HeatKernelModel) -> Result<bool> {
    let d = model.params().d;
    for s in [0.5, 3.0, 20.0] {
        let mut x = vec![0.0; d];
        x[0] = s;
        for t in log_grid(1e-3, 1e4, 29) {
            if model.classify(t, &x, &x)? == Regime::LongTimeIU {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// For each axial position: the axis point and points whose radial offset
/// leaves a fraction `q ∈ {0.1, 0.5, 0.9}` of `f(x₁)` to the wall.
pub fn grid_points(region: &HornRegion, axial: &[f64]) -> Result<Vec<Vec<f64>>> {
    let d = region.dim();
    let mut out = Vec::new();
    for &u in axial {
        let f = region.reference().eval_f(u.max(0.0))?;
        for q in [1.0, 0.9, 0.5, 0.1] {
            let mut x = vec![0.0; d];
            x[0] = u;
            if d > 1 {
                x[1] = (1.0 - q) * f;
            }
            if region.contains(&x) {
                out.push(x);
            }
        }
    }
    Ok(out)
}

/// Global constants fitted to a set of cells: the log-ratio of estimate to
/// shape has its extremes at `log_a_low` and `log_a_up`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantFit {
    pub log_a_low: f64,
    pub log_a_up: f64,
    pub cells: usize,
}

impl ConstantFit {
    pub fn range(&self) -> f64 {
        self.log_a_up - self.log_a_low
    }
}

/// Fits one constant per side to `(log estimate − log shape)` over non-censored cells.
pub fn fit_constants(log_ratios: &[(f64, bool)]) -> Option<ConstantFit> {
    let live: Vec<f64> = log_ratios.iter().filter(|(_, c)| !c).map(|(v, _)| *v).collect();
    let span = Span::of(live.iter().copied())?;
    Some(ConstantFit {
        log_a_low: span.min,
        log_a_up: span.max,
        cells: live.len(),
    })
}
