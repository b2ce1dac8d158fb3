//! Adaptive Gauss-Kronrod quadrature for integrands supplied in log form.

/// Gauss-Kronrod 7/15 abscissae on [-1, 1] (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 40;

fn gk15(g: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = g(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = g(center - dx) + g(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn adapt(g: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_floor: f64, depth: u32) -> f64 {
    let (value, err) = gk15(g, a, b);
    if err <= (rel_tol * value.abs()).max(abs_floor) || depth >= MAX_DEPTH || b - a <= 1e-14 * (1.0 + a.abs()) {
        return value;
    }
    let mid = 0.5 * (a + b);
    adapt(g, a, mid, rel_tol, 0.5 * abs_floor, depth + 1) + adapt(g, mid, b, rel_tol, 0.5 * abs_floor, depth + 1)
}

/// `ln ∫_a^b exp(log_g(u)) du`, scaling by the largest sampled value so that
/// neither overflow nor underflow can occur inside the panel.
pub(crate) fn log_integral_panel(log_g: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    if b <= a {
        return f64::NEG_INFINITY;
    }
    let peak = (0..=16)
        .map(|i| log_g(a + (b - a) * i as f64 / 16.0))
        .fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let scaled = |u: f64| (log_g(u) - peak).exp();
    let value = adapt(&scaled, a, b, rel_tol, 1e-300, 0);
    if value > 0.0 {
        peak + value.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = log_integral_panel(&|u: f64| 3.0 * u.ln(), 0.5, 2.0, 1e-12).exp();
        assert!((v - (16.0 - 0.0625) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn huge_magnitudes_stay_finite() {
        // ∫_0^1 e^{1000 + u} du = e^{1000}(e − 1)
        let v = log_integral_panel(&|u: f64| 1000.0 + u, 0.0, 1.0, 1e-10);
        assert!((v - (1000.0 + (std::f64::consts::E - 1.0).ln())).abs() < 1e-10);
    }

    #[test]
    fn log_add_exp_basic() {
        assert!((log_add_exp(0.0, 0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, -3.0), -3.0);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, f64::NEG_INFINITY), f64::NEG_INFINITY);
    }
}
