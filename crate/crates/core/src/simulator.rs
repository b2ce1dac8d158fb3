//! Monte Carlo for the isotropic α-stable process killed on leaving a domain.
//!
//! Paths are Euler jump chains: exact stable increments on a time grid, with
//! the domain checked only at grid times. Every path draws from its own
//! ChaCha stream `(seed, path index)`, and per-chunk partial results are
//! reduced in chunk order, so estimates do not depend on the thread count.

use std::f64::consts::PI;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Exp1, Open01, StandardNormal};
use rayon::prelude::*;
use statrs::function::beta::beta;
use statrs::function::gamma::gamma;

use crate::envelopes::ProcessParams;
use crate::error::{domain, usage, HornError, Result};
use crate::geometry::Domain;

const CHUNK: u64 = 2048;

/// Simulation parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MCConfig {
    pub n_paths: u64,
    pub step_h: f64,
    pub seed: u64,
    /// Radius of the ball used by the density estimator.
    pub box_radius: f64,
    /// Worker threads.
    pub parallelism: usize,
}

impl Default for MCConfig {
    fn default() -> Self {
        MCConfig {
            n_paths: 100_000,
            step_h: 1e-3,
            seed: 0,
            box_radius: 0.05,
            parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl MCConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(usage("n_paths must be positive"));
        }
        if !(self.step_h > 0.0 && self.step_h.is_finite()) {
            return Err(usage(format!("step_h must be positive, got {}", self.step_h)));
        }
        if !(self.box_radius > 0.0 && self.box_radius.is_finite()) {
            return Err(usage(format!("box_radius must be positive, got {}", self.box_radius)));
        }
        if self.parallelism == 0 {
            return Err(usage("parallelism must be at least 1"));
        }
        Ok(())
    }

    fn validate_for(&self, t: f64) -> Result<()> {
        self.validate()?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(domain(format!("time must be positive and finite, got {t}")));
        }
        if self.step_h > t * (1.0 + 1e-12) {
            return Err(usage(format!("step_h = {} exceeds the horizon t = {t}", self.step_h)));
        }
        Ok(())
    }
}

/// Estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MCResult {
    pub estimate: f64,
    pub std_error: f64,
    pub n_effective: u64,
    /// No hits at all; `std_error` then carries the rule-of-three bound.
    pub censored: bool,
}

impl MCResult {
    fn binomial(hits: u64, n: u64, scale: f64) -> Self {
        if hits == 0 {
            return MCResult {
                estimate: 0.0,
                std_error: 3.0 / (n as f64 * scale),
                n_effective: n,
                censored: true,
            };
        }
        let p = hits as f64 / n as f64;
        MCResult {
            estimate: p / scale,
            std_error: (p * (1.0 - p) / n as f64).sqrt() / scale,
            n_effective: n,
            censored: false,
        }
    }

    fn from_moments(sum: f64, sum_sq: f64, n: u64) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 {
            ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        MCResult {
            estimate: mean.max(0.0),
            std_error: (var / nf).sqrt(),
            n_effective: n,
            censored: false,
        }
    }
}

/// Constant `c_{d,α}` of the Lévy density `c_{d,α}|z|^{−d−α}` for the
/// characteristic exponent `|ξ|^α`.
pub fn jump_intensity_constant(d: usize, alpha: f64) -> f64 {
    let df = d as f64;
    alpha * 2f64.powf(alpha - 1.0) * gamma(0.5 * (df + alpha)) / (PI.powf(0.5 * df) * gamma(1.0 - 0.5 * alpha))
}

/// Volume of the ball of radius `r` in `R^d`.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    let h = 0.5 * d as f64;
    PI.powf(h) * r.powi(d as i32) / gamma(h + 1.0)
}

fn unit_sphere_area(d: usize) -> f64 {
    let h = 0.5 * d as f64;
    2.0 * PI.powf(h) / gamma(h)
}

/// Positive stable draw with `E e^{−λS} = e^{−λ^index}` (Kanter's representation).
pub fn sample_one_sided_stable<R: Rng + ?Sized>(index: f64, rng: &mut R) -> Result<f64> {
    if !(index > 0.0 && index < 1.0) {
        return Err(domain(format!("stable index must lie in (0, 1), got {index}")));
    }
    Ok(one_sided_stable(index, rng))
}

fn one_sided_stable<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    let e: f64 = Exp1.sample(rng);
    let pu = PI * u;
    (a * pu).sin() / pu.sin().powf(1.0 / a) * (((1.0 - a) * pu).sin() / e).powf((1.0 - a) / a)
}

/// Source of path increments over a time step.
pub trait IncrementSource: Sync {
    fn fill<R: Rng + ?Sized>(&self, h: f64, rng: &mut R, out: &mut [f64]);
}

/// Isotropic α-stable increments: `sqrt(2 h^{2/α} S) · N(0, I)` with `S` positive (α/2)-stable.
#[derive(Clone, Copy, Debug)]
pub struct StableIncrements {
    alpha: f64,
}

impl StableIncrements {
    pub fn new(p: &ProcessParams) -> Self {
        StableIncrements { alpha: p.alpha }
    }
}

impl IncrementSource for StableIncrements {
    fn fill<R: Rng + ?Sized>(&self, h: f64, rng: &mut R, out: &mut [f64]) {
        let s = one_sided_stable(0.5 * self.alpha, rng);
        let scale = (2.0 * h.powf(2.0 / self.alpha) * s).sqrt();
        for c in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *c = scale * z;
        }
    }
}

/// No motion at all.
#[derive(Clone, Copy, Debug)]
pub struct ZeroIncrements;

impl IncrementSource for ZeroIncrements {
    fn fill<R: Rng + ?Sized>(&self, _h: f64, _rng: &mut R, out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// One draw of `X_h − X_0`.
pub fn sample_stable_increment<R: Rng + ?Sized>(p: &ProcessParams, h: f64, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; p.d];
    StableIncrements::new(p).fill(h, rng, &mut out);
    out
}

/// Result of one killed path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathOutcome {
    pub alive: bool,
    /// Position at the last simulated grid time.
    pub endpoint: Vec<f64>,
    /// Grid time at which the path was first seen outside the domain.
    pub exit_time: Option<f64>,
}

/// The generator for path `index` under `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Walks one path through the sorted observation `times`, calling `observe`
/// at each observation while alive. Returns the exit time, if any.
///
/// The grid is `k·h` with the observation times inserted; in the whole space
/// each observation is reached with a single exact increment.
fn walk<D, S, R>(
    region: &D,
    src: &S,
    pos: &mut [f64],
    times: &[f64],
    h: f64,
    rng: &mut R,
    mut observe: impl FnMut(usize, &[f64]),
) -> Option<f64>
where
    D: Domain + ?Sized,
    S: IncrementSource,
    R: Rng + ?Sized,
{
    if !region.contains(pos) {
        return Some(0.0);
    }
    let mut incr = vec![0.0; pos.len()];
    let mut now = 0.0;
    let mut k: u64 = 0;
    let kills = region.kills();
    for (j, &target_time) in times.iter().enumerate() {
        if !kills {
            src.fill(target_time - now, rng, &mut incr);
            pos.iter_mut().zip(&incr).for_each(|(p, d)| *p += d);
            now = target_time;
            observe(j, pos);
            continue;
        }
        while now < target_time {
            let next = (k + 1) as f64 * h;
            let slack = 1e-9 * h;
            let target = if next < target_time - slack { next } else { target_time };
            if next <= target_time + slack {
                k += 1;
            }
            src.fill(target - now, rng, &mut incr);
            pos.iter_mut().zip(&incr).for_each(|(p, d)| *p += d);
            now = target;
            if !region.contains(pos) {
                return Some(now);
            }
        }
        observe(j, pos);
    }
    None
}

fn check_dims<D: Domain + ?Sized>(region: &D, p: &ProcessParams, points: &[&[f64]]) -> Result<()> {
    if region.dim() != p.d {
        return Err(usage(format!(
            "domain lives in R^{} but the process in R^{}",
            region.dim(),
            p.d
        )));
    }
    for x in points {
        if x.len() != p.d || x.iter().any(|c| !c.is_finite()) {
            return Err(domain(format!("point must have {} finite coordinates", p.d)));
        }
    }
    Ok(())
}

/// Single killed path up to time `t` on the grid of `cfg.step_h`.
pub fn simulate_killed_path<D, R>(
    region: &D,
    p: &ProcessParams,
    x: &[f64],
    t: f64,
    cfg: &MCConfig,
    rng: &mut R,
) -> Result<PathOutcome>
where
    D: Domain + ?Sized,
    R: Rng + ?Sized,
{
    simulate_killed_path_with(region, &StableIncrements::new(p), p, x, t, cfg, rng)
}

/// [`simulate_killed_path`] with an arbitrary increment source.
pub fn simulate_killed_path_with<D, S, R>(
    region: &D,
    src: &S,
    p: &ProcessParams,
    x: &[f64],
    t: f64,
    cfg: &MCConfig,
    rng: &mut R,
) -> Result<PathOutcome>
where
    D: Domain + ?Sized,
    S: IncrementSource,
    R: Rng + ?Sized,
{
    check_dims(region, p, &[x])?;
    cfg.validate_for(t)?;
    let mut pos = x.to_vec();
    let exit_time = walk(region, src, &mut pos, &[t], cfg.step_h, rng, |_, _| {});
    Ok(PathOutcome {
        alive: exit_time.is_none(),
        endpoint: pos,
        exit_time,
    })
}

fn with_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HornError::Usage(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(job))
}

/// Runs `chunk` over consecutive index ranges in parallel; results keep chunk order.
fn run_chunks<T, F>(n: u64, threads: usize, chunk: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
{
    let n_chunks = n.div_ceil(CHUNK);
    with_pool(threads, || {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| chunk(c * CHUNK..((c + 1) * CHUNK).min(n)))
            .collect()
    })
}

fn sorted_times(times: &[f64], cfg: &MCConfig) -> Result<()> {
    if times.is_empty() {
        return Err(usage("need at least one time"));
    }
    if times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(usage("times must be strictly increasing"));
    }
    cfg.validate_for(times[0])
}

/// Counts at each of the sorted `times`, all from one path set: alive paths
/// when `ys` is empty, otherwise alive paths within `box_radius` of each `y`
/// (indexed `[y][time]`).
fn alive_counts<D: Domain + ?Sized>(
    region: &D,
    p: &ProcessParams,
    x: &[f64],
    ys: &[&[f64]],
    times: &[f64],
    cfg: &MCConfig,
) -> Result<Vec<Vec<u64>>> {
    let src = StableIncrements::new(p);
    let r2 = cfg.box_radius * cfg.box_radius;
    let rows = ys.len().max(1);
    let partial = run_chunks(cfg.n_paths, cfg.parallelism, |range| {
        let mut counts = vec![vec![0u64; times.len()]; rows];
        let mut pos = vec![0.0; x.len()];
        for i in range {
            let mut rng = path_rng(cfg.seed, i);
            pos.copy_from_slice(x);
            walk(region, &src, &mut pos, times, cfg.step_h, &mut rng, |j, z| {
                if ys.is_empty() {
                    counts[0][j] += 1;
                }
                for (k, y) in ys.iter().enumerate() {
                    if z.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < r2 {
                        counts[k][j] += 1;
                    }
                }
            });
        }
        counts
    })?;
    let mut total = vec![vec![0u64; times.len()]; rows];
    for part in partial {
        for (acc, row) in total.iter_mut().zip(part) {
            acc.iter_mut().zip(row).for_each(|(a, b)| *a += b);
        }
    }
    Ok(total)
}

/// `P^x(τ_D > t)` as the fraction of alive paths.
pub fn survival_mc<D: Domain + ?Sized>(
    region: &D,
    p: &ProcessParams,
    x: &[f64],
    t: f64,
    cfg: &MCConfig,
) -> Result<MCResult> {
    Ok(survival_curve_mc(region, p, x, &[t], cfg)?[0])
}

/// Survival at each of the sorted `times` from a single path set, so the
/// estimates are non-increasing in `t` exactly.
pub fn survival_curve_mc<D: Domain + ?Sized>(
    region: &D,
    p: &ProcessParams,
    x: &[f64],
    times: &[f64],
    cfg: &MCConfig,
) -> Result<Vec<MCResult>> {
    check_dims(region, p, &[x])?;
    sorted_times(times, cfg)?;
    let counts = alive_counts(region, p, x, &[], times, cfg)?;
    Ok(counts[0]
        .iter()
        .copied()
        .map(|c| MCResult::binomial(c, cfg.n_paths, 1.0))
        .collect())
}

/// Box estimate of `p_D(t, x, y)`.
pub fn kernel_mc<D: Domain + ?Sized>(
    region: &D,
    p: &ProcessParams,
    x: &[f64],
    y: &[f64],
    t: f64,
    cfg: &MCConfig,
) -> Result<MCResult> {
    Ok(kernel_curve_mc(region, p, x, y, &[t], cfg)?[0])
}

/// Box estimates of `p_D(t, x, y)` at each of the sorted `times` from one path set.
pub fn kernel_curve_mc<D: Domain + ?Sized>(
    region: &D,
    p: &ProcessParams,
    x: &[f64],
    y: &[f64],
    times: &[f64],
    cfg: &MCConfig,
) -> Result<Vec<MCResult>> {
    Ok(kernel_grid_mc(region, p, x, &[y], times, cfg)?.remove(0))
}

/// Box estimates of `p_D(t, x, y)` for several `ys` and sorted `times`,
/// all from the same paths started at `x`; indexed `[y][time]`.
pub fn kernel_grid_mc<D: Domain + ?Sized>(
    region: &D,
    p: &ProcessParams,
    x: &[f64],
    ys: &[&[f64]],
    times: &[f64],
    cfg: &MCConfig,
) -> Result<Vec<Vec<MCResult>>> {
    if ys.is_empty() {
        return Err(usage("need at least one target point"));
    }
    let mut points = vec![x];
    points.extend_from_slice(ys);
    check_dims(region, p, &points)?;
    sorted_times(times, cfg)?;
    if points.iter().any(|z| !region.contains(z)) {
        return Err(domain("both kernel arguments must lie in the domain"));
    }
    let vol = ball_volume(p.d, cfg.box_radius);
    let counts = alive_counts(region, p, x, ys, times, cfg)?;
    Ok(counts
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|c| MCResult::binomial(c, cfg.n_paths, vol))
                .collect()
        })
        .collect())
}

/// Mean of `τ_D ∧ t_max`; `censored` is set when some path outlived `t_max`.
pub fn exit_time_mc<D: Domain + ?Sized>(
    region: &D,
    p: &ProcessParams,
    x: &[f64],
    t_max: f64,
    cfg: &MCConfig,
) -> Result<MCResult> {
    check_dims(region, p, &[x])?;
    cfg.validate_for(t_max)?;
    let src = StableIncrements::new(p);
    let partial = run_chunks(cfg.n_paths, cfg.parallelism, |range| {
        let (mut sum, mut sum_sq, mut survivors) = (0.0, 0.0, 0u64);
        let mut pos = vec![0.0; x.len()];
        for i in range {
            let mut rng = path_rng(cfg.seed, i);
            pos.copy_from_slice(x);
            let tau = walk(region, &src, &mut pos, &[t_max], cfg.step_h, &mut rng, |_, _| {}).unwrap_or_else(|| {
                survivors += 1;
                t_max
            });
            sum += tau;
            sum_sq += tau * tau;
        }
        (sum, sum_sq, survivors)
    })?;
    let (mut sum, mut sum_sq, mut survivors) = (0.0, 0.0, 0u64);
    for (a, b, c) in partial {
        sum += a;
        sum_sq += b;
        survivors += c;
    }
    let mut res = MCResult::from_moments(sum, sum_sq, cfg.n_paths);
    res.censored = survivors > 0;
    Ok(res)
}

/// `∫_{D^c} |x − z|^{−d−α} dz` by importance sampling.
///
/// With `δ = δ_D(x)`, the radius is drawn through `ρ/(δ+ρ) ~ Beta(d, α)` and
/// the direction uniformly, which is the proposal `∝ (δ + ρ)^{−d−α}`.
pub fn complement_intensity_mc<D: Domain + ?Sized>(
    region: &D,
    p: &ProcessParams,
    x: &[f64],
    n_samples: u64,
    seed: u64,
) -> Result<MCResult> {
    check_dims(region, p, &[x])?;
    if n_samples == 0 {
        return Err(usage("n_samples must be positive"));
    }
    if !region.contains(x) {
        return Err(domain("point lies outside the domain"));
    }
    if !region.kills() {
        return Ok(MCResult {
            estimate: 0.0,
            std_error: 0.0,
            n_effective: n_samples,
            censored: false,
        });
    }
    let (d, a) = (p.d as f64, p.alpha);
    let delta = region.delta(x);
    let beta_law = Beta::new(d, a).map_err(|e| domain(format!("bad beta parameters: {e}")))?;
    let norm = beta(d, a) * unit_sphere_area(p.d) * delta.powf(-a);
    let chunks: Vec<(f64, f64)> = (0..n_samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = path_rng(seed, c);
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            let mut z = vec![0.0; x.len()];
            for _ in c * CHUNK..((c + 1) * CHUNK).min(n_samples) {
                let w: f64 = beta_law.sample(&mut rng);
                let rho = delta * w / (1.0 - w);
                let mut len = 0.0;
                for zi in z.iter_mut() {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    *zi = g;
                    len += g * g;
                }
                let scale = rho / len.sqrt();
                z.iter_mut().zip(x).for_each(|(zi, xi)| *zi = xi + scale * *zi);
                if rho.is_finite() && !region.contains(&z) {
                    let weight = norm * (1.0 + delta / rho).powf(d + a);
                    sum += weight;
                    sum_sq += weight * weight;
                }
            }
            (sum, sum_sq)
        })
        .collect();
    let (sum, sum_sq) = chunks.iter().fold((0.0, 0.0), |acc, c| (acc.0 + c.0, acc.1 + c.1));
    Ok(MCResult::from_moments(sum, sum_sq, n_samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Ball, FreeSpace, HornRegion};
    use crate::reference::ReferenceFunction;
    use statrs::function::erf::erfc;

    fn cauchy2() -> ProcessParams {
        ProcessParams::new(2, 1.0).unwrap()
    }

    fn cfg(n: u64, h: f64, seed: u64) -> MCConfig {
        MCConfig {
            n_paths: n,
            step_h: h,
            seed,
            box_radius: 0.05,
            parallelism: 4,
        }
    }

    #[test]
    fn one_sided_index_checked() {
        let mut rng = path_rng(1, 0);
        for bad in [0.0, 1.0, -0.3, f64::NAN] {
            assert!(sample_one_sided_stable(bad, &mut rng).is_err());
        }
    }

    #[test]
    fn one_sided_laplace_transform() {
        for index in [0.5, 0.3, 0.85] {
            let mut rng = path_rng(11, 3);
            let draws: Vec<f64> = (0..1_000_000)
                .map(|_| sample_one_sided_stable(index, &mut rng).unwrap())
                .collect();
            for lambda in [1.0f64, 2.0] {
                let vals: Vec<f64> = draws.iter().map(|s| (-lambda * s).exp()).collect();
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                let target = (-lambda.powf(index)).exp();
                assert!(
                    (mean - target).abs() <= 3.0 * (var / n).sqrt(),
                    "index {index} λ {lambda}: {mean} vs {target}"
                );
            }
        }
    }

    #[test]
    fn one_sided_half_matches_levy_law() {
        let mut rng = path_rng(5, 0);
        let mut draws: Vec<f64> = (0..100_000)
            .map(|_| sample_one_sided_stable(0.5, &mut rng).unwrap())
            .collect();
        draws.sort_by(f64::total_cmp);
        let n = draws.len() as f64;
        let ks = draws
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let cdf = erfc(1.0 / (2.0 * s.sqrt()));
                (cdf - i as f64 / n).abs().max((cdf - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn increments_are_isotropic() {
        let p = ProcessParams::new(3, 1.3).unwrap();
        let mut rng = path_rng(2, 9);
        let n = 100_000;
        let mut sums = [0.0; 3];
        for _ in 0..n {
            let z = sample_stable_increment(&p, 0.7, &mut rng);
            let r = z.iter().map(|c| c * c).sum::<f64>().sqrt();
            z.iter().zip(sums.iter_mut()).for_each(|(c, s)| *s += c / r);
        }
        // each coordinate of a uniform direction in R^3 has variance 1/3
        let sigma = (1.0 / 3.0 / n as f64).sqrt();
        for s in sums {
            assert!((s / n as f64).abs() < 3.0 * sigma);
        }
    }

    fn two_sample_ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j, mut best) = (0, 0, 0.0f64);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            best = best.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        best
    }

    #[test]
    fn increments_self_similar() {
        let p = ProcessParams::new(2, 0.8).unwrap();
        let h: f64 = 0.01;
        let n = 100_000;
        let mut r1 = path_rng(3, 0);
        let mut r2 = path_rng(4, 0);
        let norm = |z: Vec<f64>| z.iter().map(|c| c * c).sum::<f64>().sqrt();
        let small: Vec<f64> = (0..n).map(|_| norm(sample_stable_increment(&p, h, &mut r1))).collect();
        let unit: Vec<f64> = (0..n)
            .map(|_| h.powf(1.0 / p.alpha) * norm(sample_stable_increment(&p, 1.0, &mut r2)))
            .collect();
        assert!(two_sample_ks(small, unit) < 0.01);
    }

    #[test]
    fn cauchy_density_at_the_origin() {
        let p = cauchy2();
        let c = MCConfig {
            n_paths: 1_000_000,
            ..cfg(1_000_000, 1e-3, 21)
        };
        let res = kernel_mc(&FreeSpace { d: 2 }, &p, &[0.0, 0.0], &[0.0, 0.0], 1.0, &c).unwrap();
        let exact = 1.0 / (2.0 * PI);
        assert!((res.estimate - exact).abs() < 0.1 * exact, "{res:?}");
        assert!((res.estimate - exact).abs() < 4.0 * res.std_error);
    }

    #[test]
    fn zero_increments_stay_put() {
        let p = cauchy2();
        let region = HornRegion::new(2, ReferenceFunction::power_law(1.0, 1.0).unwrap()).unwrap();
        let c = cfg(1, 0.25, 0);
        let x = [2.0, 0.1];
        let mut rng = path_rng(0, 0);
        let out = simulate_killed_path_with(&region, &ZeroIncrements, &p, &x, 0.25, &c, &mut rng).unwrap();
        assert!(out.alive);
        assert_eq!(out.endpoint, x.to_vec());
        assert_eq!(out.exit_time, None);
    }

    #[test]
    fn outside_start_is_dead() {
        let p = cauchy2();
        let region = HornRegion::new(2, ReferenceFunction::power_law(1.0, 1.0).unwrap()).unwrap();
        let mut rng = path_rng(0, 0);
        let out = simulate_killed_path(&region, &p, &[2.0, 5.0], 1.0, &cfg(1, 0.1, 0), &mut rng).unwrap();
        assert!(!out.alive);
        assert_eq!(out.exit_time, Some(0.0));
    }

    #[test]
    fn step_larger_than_horizon_rejected() {
        let p = cauchy2();
        let mut rng = path_rng(0, 0);
        let ball = Ball::new(vec![0.0, 0.0], 1.0).unwrap();
        assert!(simulate_killed_path(&ball, &p, &[0.0, 0.0], 0.01, &cfg(1, 0.1, 0), &mut rng).is_err());
    }

    #[test]
    fn grid_lands_on_the_horizon() {
        struct Counter;
        impl IncrementSource for Counter {
            fn fill<R: Rng + ?Sized>(&self, h: f64, _rng: &mut R, out: &mut [f64]) {
                out.fill(0.0);
                out[0] = h;
            }
        }
        let p = cauchy2();
        let ball = Ball::new(vec![0.0, 0.0], 100.0).unwrap();
        let mut rng = path_rng(0, 0);
        let out = simulate_killed_path_with(&ball, &Counter, &p, &[0.0, 0.0], 1.05, &cfg(1, 0.1, 0), &mut rng).unwrap();
        assert!((out.endpoint[0] - 1.05).abs() < 1e-12);
    }

    #[test]
    fn survival_near_one_for_tiny_time() {
        let p = cauchy2();
        let ball = Ball::new(vec![0.0, 0.0], 1.0).unwrap();
        let res = survival_mc(&ball, &p, &[0.0, 0.0], 1e-4, &cfg(20_000, 1e-5, 1)).unwrap();
        assert!(res.estimate > 0.99);
    }

    #[test]
    fn survival_curve_coupled_and_monotone() {
        let p = cauchy2();
        let region = HornRegion::new(2, ReferenceFunction::log_power(2.0, 1.0).unwrap()).unwrap();
        let times = [0.05, 0.1, 0.2, 0.4, 0.8];
        let c = cfg(20_000, 0.01, 8);
        let curve = survival_curve_mc(&region, &p, &[1.0, 0.0], &times, &c).unwrap();
        assert!(curve.windows(2).all(|w| w[1].estimate <= w[0].estimate));
        // the last time of the curve agrees exactly with a single-time run
        let single = survival_mc(&region, &p, &[1.0, 0.0], 0.8, &c).unwrap();
        assert_eq!(curve[4].estimate, single.estimate);
    }

    #[test]
    fn survival_agrees_across_step_sizes() {
        let p = cauchy2();
        let region = HornRegion::new(2, ReferenceFunction::power_law(1.0, 1.0).unwrap()).unwrap();
        let x = [1.0, 0.1];
        let coarse = survival_mc(&region, &p, &x, 0.5, &cfg(40_000, 0.01, 2)).unwrap();
        let fine = survival_mc(&region, &p, &x, 0.5, &cfg(40_000, 0.002, 3)).unwrap();
        let sigma = coarse.std_error.hypot(fine.std_error);
        let tol = 3.0 * sigma + 0.05 * fine.estimate;
        assert!((coarse.estimate - fine.estimate).abs() <= tol, "{coarse:?} {fine:?}");
    }

    #[test]
    fn survival_stable_scaling() {
        let p = ProcessParams::new(2, 1.5).unwrap();
        let r: f64 = 2.0;
        let big = Ball::new(vec![0.0, 0.0], r).unwrap();
        let unit = Ball::new(vec![0.0, 0.0], 1.0).unwrap();
        let t = 0.6;
        let scale = r.powf(-p.alpha);
        let a = survival_mc(&big, &p, &[0.4, 0.0], t, &cfg(40_000, 0.004, 6)).unwrap();
        let b = survival_mc(&unit, &p, &[0.2, 0.0], t * scale, &cfg(40_000, 0.004 * scale, 6)).unwrap();
        assert!(
            (a.estimate - b.estimate).abs() <= 3.0 * a.std_error.hypot(b.std_error),
            "{a:?} {b:?}"
        );
    }

    #[test]
    fn kernel_symmetric() {
        let p = cauchy2();
        let region = HornRegion::new(2, ReferenceFunction::power_law(1.0, 1.0).unwrap()).unwrap();
        let x = [0.5, 0.1];
        let y = [1.5, -0.1];
        let c = MCConfig {
            box_radius: 0.1,
            ..cfg(200_000, 0.005, 12)
        };
        let a = kernel_mc(&region, &p, &x, &y, 0.3, &c).unwrap();
        let b = kernel_mc(&region, &p, &y, &x, 0.3, &c).unwrap();
        assert!(!a.censored && !b.censored);
        assert!(
            (a.estimate - b.estimate).abs() <= 3.0 * a.std_error.hypot(b.std_error),
            "{a:?} {b:?}"
        );
    }

    #[test]
    fn kernel_zero_hits_censored() {
        let p = cauchy2();
        let ball = Ball::new(vec![0.0, 0.0], 1.0).unwrap();
        let c = MCConfig {
            box_radius: 1e-4,
            ..cfg(100, 0.01, 1)
        };
        let res = kernel_mc(&ball, &p, &[0.0, 0.0], &[0.9, 0.0], 0.05, &c).unwrap();
        assert!(res.censored);
        assert_eq!(res.estimate, 0.0);
        let vol = ball_volume(2, 1e-4);
        assert!((res.std_error - 3.0 / (100.0 * vol)).abs() < 1e-9 * res.std_error);
    }

    #[test]
    fn results_independent_of_thread_count() {
        let p = cauchy2();
        let region = HornRegion::new(2, ReferenceFunction::power_law(1.0, 1.0).unwrap()).unwrap();
        let x = [1.0, 0.0];
        let mut runs = Vec::new();
        for threads in [1, 3, 8] {
            let c = MCConfig {
                parallelism: threads,
                box_radius: 0.2,
                ..cfg(10_000, 0.01, 77)
            };
            runs.push((
                survival_mc(&region, &p, &x, 0.3, &c).unwrap(),
                kernel_mc(&region, &p, &x, &[1.2, 0.0], 0.3, &c).unwrap(),
                exit_time_mc(&region, &p, &x, 2.0, &c).unwrap(),
            ));
        }
        assert!(runs.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn jump_constant_oracles() {
        // Cauchy Lévy densities: 1/(π z²) on the line and 1/(π² |z|⁴) in R³
        assert!((jump_intensity_constant(1, 1.0) - 1.0 / PI).abs() < 1e-14);
        assert!((jump_intensity_constant(3, 1.0) - 1.0 / (PI * PI)).abs() < 1e-14);
        assert!((ball_volume(3, 2.0) - 32.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn complement_intensity_of_unit_ball() {
        let p = cauchy2();
        let ball = Ball::new(vec![0.0, 0.0], 1.0).unwrap();
        let res = complement_intensity_mc(&ball, &p, &[0.0, 0.0], 200_000, 4).unwrap();
        let exact = 2.0 * PI;
        assert!(
            (res.estimate - exact).abs() <= 3.0 * res.std_error.max(1e-12),
            "{res:?}"
        );
        let p3 = ProcessParams::new(3, 0.5).unwrap();
        let ball3 = Ball::new(vec![0.0; 3], 1.0).unwrap();
        let res = complement_intensity_mc(&ball3, &p3, &[0.0; 3], 200_000, 4).unwrap();
        assert!((res.estimate - 4.0 * PI / 0.5).abs() <= 3.0 * res.std_error.max(1e-12));
    }

    #[test]
    fn complement_intensity_grows_towards_the_wall() {
        let p = cauchy2();
        let region = HornRegion::new(2, ReferenceFunction::power_law(1.0, 1.0).unwrap()).unwrap();
        let f = region.reference().eval_f(3.0).unwrap();
        let inner = complement_intensity_mc(&region, &p, &[3.0, 0.0], 50_000, 1).unwrap();
        let outer = complement_intensity_mc(&region, &p, &[3.0, 0.8 * f], 50_000, 1).unwrap();
        assert!(outer.estimate - inner.estimate > 3.0 * inner.std_error.hypot(outer.std_error));
        assert!(
            complement_intensity_mc(&FreeSpace { d: 2 }, &p, &[0.0, 0.0], 10, 1)
                .unwrap()
                .estimate
                == 0.0
        );
    }
}
