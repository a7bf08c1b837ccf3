use cubic_dist::charfn::CharFn;
use cubic_dist::density::*;
use cubic_dist::lfunction::CaseKind;
use proptest::prelude::*;
use std::sync::OnceLock;

fn quad() -> QuadParams {
    QuadParams {
        prime_cutoff: 20_000,
        ..QuadParams::default()
    }
}

fn grids() -> &'static [DensityGrid] {
    static G: OnceLock<Vec<DensityGrid>> = OnceLock::new();
    G.get_or_init(|| {
        [CaseKind::Log, CaseKind::LogDeriv]
            .into_iter()
            .map(|case| invert_auto(1.0, case, &quad()).unwrap())
            .collect()
    })
}

#[test]
fn normalisation_and_mean() {
    for g in grids() {
        let cf = CharFn::real(1.0, g.case, quad().prime_cutoff);
        assert!((trapezoid_mass(g) - 1.0).abs() <= 1e-3);
        assert!((grid_mean(g) - mean_from_cf(&cf, 1e-4)).abs() <= 1e-3);
        assert!(g.m_values.iter().all(|&m| m >= -NEG_FLOOR));
        assert!(g.cdf_values.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        assert!(g.cdf_values.iter().all(|&f| (0.0..=1.0).contains(&f)));
    }
}

#[test]
fn halving_self_test() {
    for g in grids() {
        assert!(g.refine_change < 1e-5, "{}", g.refine_change);
    }
    // an explicit coarser run agrees with the accepted one
    let g = &grids()[0];
    let coarse = QuadParams {
        refine_tol: 1.0,
        max_refinements: 0,
        ..quad()
    };
    let z: Vec<f64> = g.z_values.iter().step_by(20).copied().collect();
    let c = invert(1.0, CaseKind::Log, &z, &coarse).unwrap();
    for (k, m) in c.m_values.iter().enumerate() {
        assert!((m - g.m_values[20 * k]).abs() < 1e-5);
    }
}

#[test]
fn conjugate_symmetry_shortcut() {
    let g = &grids()[1];
    let cf = CharFn::real(1.0, CaseKind::LogDeriv, quad().prime_cutoff);
    let n = (g.y_max / g.y_step).round() as usize;
    for idx in [200usize, 700, 900, 1000] {
        let z = g.z_values[idx];
        let full = density_point_full(&cf, z, g.y_max, 2 * n);
        assert!(full.im.abs() < 1e-12, "{full}");
        assert!((full.re - g.m_values[idx]).abs() < 1e-10, "{} {}", full.re, g.m_values[idx]);
    }
}

#[test]
fn cdf_limits_and_median() {
    for g in grids() {
        assert!(cdf_at(g, -100.0) < 1e-6);
        assert!(cdf_at(g, 100.0) > 1.0 - 1e-3);
        let crossings = g.cdf_values.windows(2).filter(|w| w[0] < 0.5 && w[1] >= 0.5).count();
        assert_eq!(crossings, 1);
        let med = quantile(g, 0.5).unwrap();
        assert!((cdf_at(g, med) - 0.5).abs() < 1e-9);
        // density strictly positive around the median
        let k = g.z_values.partition_point(|&z| z < med);
        assert!(g.m_values[k] > 1e-3);
    }
}

#[test]
fn smooth_second_differences() {
    for g in grids() {
        let h = g.z_values[1] - g.z_values[0];
        let maxm = g.m_values.iter().cloned().fold(0.0, f64::max);
        let d2 = g
            .m_values
            .windows(3)
            .map(|w| (w[0] - 2.0 * w[1] + w[2]).abs() / (h * h))
            .fold(0.0, f64::max);
        // curvature on the scale of the distribution width, no grid-scale ringing
        assert!(d2 < 100.0 * maxm, "{d2} {maxm}");
    }
}

#[test]
fn nonuniform_grid_matches_uniform() {
    let g = &grids()[0];
    let idx = [100usize, 350, 800, 801, 1200];
    let z: Vec<f64> = idx.iter().map(|&k| g.z_values[k]).collect();
    let p = invert(1.0, CaseKind::Log, &z, &quad()).unwrap();
    for (j, &k) in idx.iter().enumerate() {
        assert!((p.m_values[j] - g.m_values[k]).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn cdf_monotone(a in -10.0f64..10.0, b in -10.0f64..10.0) {
        let g = &grids()[0];
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(cdf_at(g, lo) <= cdf_at(g, hi) + 1e-12);
    }
}
