//! Horn-shaped model region: a tube of revolution `{x₁ > 0, |x̃| < f(x₁)}`
//! closed off by the half ball `{x₁ ≤ 0, |x| < f(0)}`.
//!
//! Distances are computed in the meridian half-plane `(u, v) = (x₁, |x̃|)`.

use crate::error::{domain, HornError, Result};
use crate::reference::ReferenceFunction;

/// Anything the simulator can kill a path on.
pub trait Domain: Send + Sync {
    fn dim(&self) -> usize;
    fn contains(&self, x: &[f64]) -> bool;
    /// Distance to the complement; zero outside.
    fn delta(&self, x: &[f64]) -> f64;
    /// False for the whole space, where no path is ever killed.
    fn kills(&self) -> bool {
        true
    }
}

/// Meridian coordinates of a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfilePoint {
    /// Axial coordinate `x₁`.
    pub u: f64,
    /// Radial coordinate `|x̃|`.
    pub v: f64,
}

/// `(x₁, |(x₂,…,x_d)|)`.
pub fn profile(x: &[f64]) -> ProfilePoint {
    let v = x[1..].iter().map(|c| c * c).sum::<f64>().sqrt();
    ProfilePoint { u: x[0], v }
}

/// Nearest point of the generatrix to a profile point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nearest {
    pub dist: f64,
    pub point: ProfilePoint,
    /// True when the nearest point lies on the tube wall rather than the cap arc.
    pub on_wall: bool,
}

const WALL_SEEDS: usize = 64;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Debug)]
pub struct HornRegion {
    d: usize,
    f: ReferenceFunction,
    c_star: f64,
}

impl HornRegion {
    /// Default interior-ball multiplier.
    pub const DEFAULT_C_STAR: f64 = 0.2;

    pub fn new(d: usize, f: ReferenceFunction) -> Result<Self> {
        Self::with_c_star(d, f, Self::DEFAULT_C_STAR)
    }

    pub fn with_c_star(d: usize, f: ReferenceFunction, c_star: f64) -> Result<Self> {
        if d < 2 {
            return Err(domain(format!("region dimension must be at least 2, got {d}")));
        }
        if !(c_star > 0.0 && c_star <= 1.0) {
            return Err(domain(format!("c_star must lie in (0, 1], got {c_star}")));
        }
        Ok(HornRegion { d, f, c_star })
    }

    pub fn reference(&self) -> &ReferenceFunction {
        &self.f
    }

    pub fn c_star(&self) -> f64 {
        self.c_star
    }

    pub fn cap_radius(&self) -> f64 {
        self.f.f0()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(domain(format!(
                "expected a point in R^{}, got {} coordinates",
                self.d,
                x.len()
            )));
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(domain("point has non-finite coordinates"));
        }
        Ok(())
    }

    /// Membership for a meridian point.
    pub fn contains_profile(&self, p: ProfilePoint) -> bool {
        if p.u <= 0.0 {
            p.u * p.u + p.v * p.v < self.f.f0() * self.f.f0()
        } else {
            p.v < self.f.f_raw(p.u)
        }
    }

    /// Nearest point of `Γ = {(s, f(s)) : s ≥ 0} ∪ cap arc` to `p`.
    ///
    /// Ties between wall and cap resolve to the wall.
    pub fn nearest_boundary(&self, p: ProfilePoint) -> Nearest {
        let wall = self.nearest_on_wall(p);
        let cap = self.nearest_on_cap(p);
        if cap.dist < wall.dist {
            cap
        } else {
            wall
        }
    }

    fn wall_dist2(&self, p: ProfilePoint, s: f64) -> f64 {
        let du = p.u - s;
        let dv = p.v - self.f.f_raw(s);
        du * du + dv * dv
    }

    fn nearest_on_wall(&self, p: ProfilePoint) -> Nearest {
        let half_width = (p.v + self.f.f_raw(p.u)) * (1.0 + self.f.lipschitz());
        let a = (p.u - half_width).max(0.0);
        let b = (p.u + half_width).max(0.0);
        let mut best_s = a;
        let mut best = self.wall_dist2(p, a);
        let mut lo = a;
        let mut hi = a;
        if b > a {
            let step = (b - a) / (WALL_SEEDS - 1) as f64;
            let mut best_i = 0;
            for i in 1..WALL_SEEDS {
                let s = a + step * i as f64;
                let v = self.wall_dist2(p, s);
                if v < best {
                    best = v;
                    best_i = i;
                }
            }
            lo = (a + step * best_i.saturating_sub(1) as f64).max(a);
            hi = (a + step * (best_i + 1) as f64).min(b);
            best_s = a + step * best_i as f64;
        }
        let tol = 1e-10 * self.f.f0();
        if hi - lo > tol {
            let mut x1 = hi - GOLDEN * (hi - lo);
            let mut x2 = lo + GOLDEN * (hi - lo);
            let mut f1 = self.wall_dist2(p, x1);
            let mut f2 = self.wall_dist2(p, x2);
            while hi - lo > tol {
                if f1 <= f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - GOLDEN * (hi - lo);
                    f1 = self.wall_dist2(p, x1);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + GOLDEN * (hi - lo);
                    f2 = self.wall_dist2(p, x2);
                }
            }
            for (s, v) in [(x1, f1), (x2, f2)] {
                if v < best {
                    best = v;
                    best_s = s;
                }
            }
        }
        Nearest {
            dist: best.sqrt(),
            point: ProfilePoint {
                u: best_s,
                v: self.f.f_raw(best_s),
            },
            on_wall: true,
        }
    }

    fn nearest_on_cap(&self, p: ProfilePoint) -> Nearest {
        let r0 = self.f.f0();
        let r = p.u.hypot(p.v);
        let angle = p.v.atan2(p.u);
        if r > 0.0 && angle >= std::f64::consts::FRAC_PI_2 {
            return Nearest {
                dist: (r0 - r).abs(),
                point: ProfilePoint {
                    u: r0 * p.u / r,
                    v: r0 * p.v / r,
                },
                on_wall: false,
            };
        }
        if r == 0.0 {
            // every arc point is equidistant; pick the pole
            return Nearest {
                dist: r0,
                point: ProfilePoint { u: -r0, v: 0.0 },
                on_wall: false,
            };
        }
        // outside the arc's sector: nearest arc endpoint
        let top = ProfilePoint { u: 0.0, v: r0 };
        let pole = ProfilePoint { u: -r0, v: 0.0 };
        let dt = (p.u - top.u).hypot(p.v - top.v);
        let dp = (p.u - pole.u).hypot(p.v - pole.v);
        if dt <= dp {
            Nearest {
                dist: dt,
                point: top,
                on_wall: false,
            }
        } else {
            Nearest {
                dist: dp,
                point: pole,
                on_wall: false,
            }
        }
    }

    /// Distance to the complement for a meridian point; 0 outside.
    pub fn delta_profile(&self, p: ProfilePoint) -> f64 {
        if !self.contains_profile(p) {
            return 0.0;
        }
        self.nearest_boundary(p).dist
    }

    /// Checked membership.
    pub fn try_contains(&self, x: &[f64]) -> Result<bool> {
        self.check_dim(x)?;
        Ok(self.contains_profile(profile(x)))
    }

    /// Nearest boundary point `z_x` in `R^d`.
    pub fn nearest_boundary_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let p = profile(x);
        let near = self.nearest_boundary(p);
        Ok(self.lift(x, p, near.point))
    }

    fn lift(&self, x: &[f64], p: ProfilePoint, q: ProfilePoint) -> Vec<f64> {
        let mut z = vec![0.0; self.d];
        z[0] = q.u;
        if p.v > 0.0 {
            for i in 1..self.d {
                z[i] = q.v * x[i] / p.v;
            }
        } else {
            z[1] = q.v;
        }
        z
    }

    /// Centre `ξ* = z_x + r (x − z_x)/|x − z_x|` of an interior ball of radius `r`
    /// touching the boundary at `z_x`.
    pub fn interior_ball_point(&self, x: &[f64], r: f64) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let p = profile(x);
        if !self.contains_profile(p) {
            return Err(domain("interior_ball_point requires a point of the region"));
        }
        let limit = self.c_star * self.f.f_raw(p.u);
        if !(r > 0.0 && r <= limit) {
            return Err(domain(format!(
                "radius {r:e} outside (0, c_star f(x1)] = (0, {limit:e}]"
            )));
        }
        let near = self.nearest_boundary(p);
        let z = self.lift(x, p, near.point);
        let gap: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a - b).collect();
        let norm = gap.iter().map(|c| c * c).sum::<f64>().sqrt();
        let xi: Vec<f64> = z.iter().zip(&gap).map(|(zi, gi)| zi + r * gi / norm).collect();
        let got = self.delta(&xi);
        let slack = 1e-8 * self.f.f0();
        if got < r * (1.0 - 1e-6) - slack {
            return Err(HornError::Geometry(format!(
                "interior ball of radius {r:e} does not fit: delta(xi*) = {got:e} (c_star too large for this profile)"
            )));
        }
        Ok(xi)
    }
}

impl Domain for HornRegion {
    fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    fn contains(&self, x: &[f64]) -> bool {
        self.contains_profile(profile(x))
    }

    fn delta(&self, x: &[f64]) -> f64 {
        self.delta_profile(profile(x))
    }
}

/// Open Euclidean ball, used for calibration against closed-form exit times.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || center.is_empty() {
            return Err(domain("ball needs a positive radius and a centre"));
        }
        Ok(Ball { center, radius })
    }

    fn dist_to_center(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl Domain for Ball {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.dist_to_center(x) < self.radius
    }

    fn delta(&self, x: &[f64]) -> f64 {
        (self.radius - self.dist_to_center(x)).max(0.0)
    }
}

/// All of `R^d`; nothing is ever killed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreeSpace {
    pub d: usize,
}

impl Domain for FreeSpace {
    fn dim(&self) -> usize {
        self.d
    }

    fn contains(&self, _x: &[f64]) -> bool {
        true
    }

    fn delta(&self, _x: &[f64]) -> f64 {
        f64::INFINITY
    }

    fn kills(&self) -> bool {
        false
    }
}
