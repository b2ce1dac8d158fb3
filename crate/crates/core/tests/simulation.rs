use hornheat::geometry::Ball;
use hornheat::simulator::{exit_time_mc, kernel_grid_mc, survival_curve_mc, MCConfig};
use hornheat::{HornRegion, ProcessParams, ReferenceFunction};
use proptest::prelude::*;

fn cfg(n_paths: u64, step_h: f64, box_radius: f64, seed: u64) -> MCConfig {
    MCConfig {
        n_paths,
        step_h,
        seed,
        box_radius,
        parallelism: 2,
    }
}

#[test]
fn box_estimates_partition_survival() {
    // Square cells of side a with boxes of equal area: the sum over cell
    // centres of p̂ · a² counts each alive endpoint about once.
    let p = ProcessParams::new(2, 1.0).unwrap();
    let disc = Ball::new(vec![0.0, 0.0], 1.0).unwrap();
    let a = 0.1;
    let r = a / std::f64::consts::PI.sqrt();
    let centers: Vec<Vec<f64>> = (0..20)
        .flat_map(|i| (0..20).map(move |j| vec![-0.95 + i as f64 * a, -0.95 + j as f64 * a]))
        .filter(|c| c[0].hypot(c[1]) < 1.0)
        .collect();
    let ys: Vec<&[f64]> = centers.iter().map(|c| c.as_slice()).collect();
    let times = [0.05, 0.2];
    let c = cfg(20_000, 1e-3, r, 8);
    let grid = kernel_grid_mc(&disc, &p, &[0.3, 0.1], &ys, &times, &c).unwrap();
    let surv = survival_curve_mc(&disc, &p, &[0.3, 0.1], &times, &c).unwrap();
    for (k, s) in surv.iter().enumerate() {
        let total: f64 = grid.iter().map(|row| row[k].estimate * a * a).sum();
        assert!(
            (total - s.estimate).abs() <= 3.0 * s.std_error + 0.02,
            "t={} {total} vs {}",
            times[k],
            s.estimate
        );
    }
}

#[test]
fn disc_exit_time_matches_closed_form() {
    // α = 1, d = 2: E^x τ = (2/π) (R² − |x − c|²)^{1/2} on the disc B(c, R).
    let p = ProcessParams::new(2, 1.0).unwrap();
    let disc = Ball::new(vec![1.0, -2.0], 1.5).unwrap();
    for x in [[1.75, -2.0], [1.0, -0.8]] {
        let res = exit_time_mc(&disc, &p, &x, 40.0, &cfg(20_000, 1e-3, 0.05, 9)).unwrap();
        let rho2 = (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2);
        let exact = 2.0 / std::f64::consts::PI * (2.25 - rho2).sqrt();
        assert!(!res.censored);
        assert!(
            (res.estimate / exact - 1.0).abs() < 0.03,
            "x={x:?}: {} vs {exact}",
            res.estimate
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn smaller_domain_survives_less(seed in 0u64..1000, u in 0.5f64..4.0, t in 0.02f64..0.3) {
        // Same seed, same increments: a path alive in the ball is alive in the horn.
        let p = ProcessParams::new(2, 1.0).unwrap();
        let horn = HornRegion::new(2, ReferenceFunction::power_law(1.0, 1.0).unwrap()).unwrap();
        let f = 1.0 / (1.0 + u);
        let ball = Ball::new(vec![u, 0.0], 0.5 * f).unwrap();
        let c = cfg(2_000, 2e-3, 0.05, seed);
        let in_horn = survival_curve_mc(&horn, &p, &[u, 0.0], &[t], &c).unwrap()[0].estimate;
        let in_ball = survival_curve_mc(&ball, &p, &[u, 0.0], &[t], &c).unwrap()[0].estimate;
        prop_assert!(in_ball <= in_horn, "{in_ball} > {in_horn}");
    }
}
