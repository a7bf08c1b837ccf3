use cubic_dist::density::{invert_auto, QuadParams};
use cubic_dist::empirics::*;
use cubic_dist::lfunction::{log_lc, logderiv_lc, value_smoothed, CaseKind, EvalParams};
use cubic_dist::{enumerate_c, enumerate_primes, EisensteinInt, ModulusC};
use std::collections::HashSet;

#[test]
fn smallest_family() {
    let f = enumerate_c(73);
    assert_eq!(f.len(), 2);
    assert!(f.iter().all(|c| c.norm == 73));
    let s = empirical_cdf(73, 2.0, CaseKind::Log, &EvalParams::default(), None).unwrap();
    assert_eq!(s.samples.len(), 2);
    assert_eq!(s.n_excluded(), 0);
    assert!(empirical_cdf(72, 2.0, CaseKind::Log, &EvalParams::default(), None)
        .unwrap()
        .samples
        .is_empty());
}

#[test]
fn divisor_probability_beyond_range_is_zero() {
    let primes = enumerate_primes(5000);
    let big = primes.iter().find(|p| p.norm > 2000).unwrap();
    assert_eq!(divisor_probability(big, 2000), 0.0);
    let seven = primes.iter().find(|p| p.norm == 7).unwrap();
    let f = divisor_probability(seven, 1_000_000);
    assert!((f - 1.0 / 8.0).abs() < 0.01, "{f}");
}

#[test]
fn ks_extremes() {
    let g = invert_auto(2.0, CaseKind::Log, &QuadParams::default()).unwrap();
    let s = empirical_cdf(100_000, 2.0, CaseKind::Log, &EvalParams::default(), None).unwrap();
    let f = s.cdf();
    assert_eq!(f.ks_between(&f), 0.0);
    let far = ks_distance_shifted(&f, &g, 10.0);
    assert!(far > 0.999, "{far}");
    assert!((ks_distance_shifted(&f, &g, 0.0) - ks_distance(&f, &g)).abs() < 1e-15);
    let moved = s.shifted(10.0).cdf();
    assert!((ks_distance(&moved, &g) - far).abs() < 1e-12);
}

#[test]
fn sigma_two_matches_limit() {
    for case in [CaseKind::Log, CaseKind::LogDeriv] {
        let g = invert_auto(2.0, case, &QuadParams::default()).unwrap();
        let s = empirical_cdf(100_000, 2.0, case, &EvalParams::default(), None).unwrap();
        let ks = ks_distance(&s.cdf(), &g);
        assert!(ks <= 0.05, "{case:?} {ks}");
        assert!(ks_distance(&s.weighted_cdf(), &g) <= 0.05);
    }
}

/// (O/9)^x has 54 classes and the six units are distinct mod 9.
#[test]
fn ray_class_group_order() {
    let units: HashSet<(i64, i64)> = EisensteinInt::UNITS
        .iter()
        .map(|u| (u.a.rem_euclid(9), u.b.rem_euclid(9)))
        .collect();
    let invertible = (0..9)
        .flat_map(|a| (0..9).map(move |b| EisensteinInt::new(a, b)))
        .filter(|x| x.norm() % 3 != 0)
        .count() as u64;
    assert_eq!(invertible, 54);
    assert_eq!(invertible / units.len() as u64, RAY_CLASS_ORDER_9);
}

#[test]
fn predicted_slope_value() {
    // res zeta_k = pi / (3 sqrt 3), zeta_k(2) = zeta(2) L(2, chi_-3)
    let l2 = 0.781_302_412_896_486_3;
    let zk2 = std::f64::consts::PI.powi(2) / 6.0 * l2;
    let res = std::f64::consts::PI / (3.0 * 3f64.sqrt());
    let want = 3.0 * res / (4.0 * 9.0 * zk2);
    assert!((predicted_slope() - want).abs() < 1e-9);
    let r = count_c(2_000_000);
    let y = r.y as f64;
    assert!((r.count as f64 / (want * y) - 1.0).abs() < 0.03);
    assert!((r.weighted / (want * y) - 1.0).abs() < 0.02);
}

#[test]
fn local_frequencies_at_small_primes() {
    let moduli = enumerate_c(1_000_000);
    for p in enumerate_primes(40).iter().filter(|p| p.norm > 3) {
        let lf = LocalFrequencies::count(p, &moduli);
        assert_eq!(lf.divisible + lf.symbol_counts.iter().sum::<u64>(), lf.n_moduli);
        assert!(lf.divisor_z().abs() < 5.0, "{p:?} {}", lf.divisor_z());
        for z in lf.symbol_z() {
            assert!(z.abs() < 5.0, "{p:?} {z}");
        }
    }
}

#[test]
fn conjugate_moduli_share_values() {
    let params = EvalParams::default();
    let mut checked = 0;
    for c in enumerate_c(20_000).iter().filter(|c| c.value.b > 0).take(40) {
        let d = ModulusC::new(c.value.conj()).unwrap();
        let (a, b) = (log_lc(c, 2.0, &params).unwrap(), log_lc(&d, 2.0, &params).unwrap());
        assert!((a.value - b.value).abs() < 1e-12);
        let (a, b) = (logderiv_lc(c, 1.5, &params).unwrap(), logderiv_lc(&d, 1.5, &params).unwrap());
        assert!((a.value - b.value).abs() < 1e-12);
        for case in [CaseKind::Log, CaseKind::LogDeriv] {
            let (a, b) = (value_smoothed(c, 1.0, case, &params).unwrap(), value_smoothed(&d, 1.0, case, &params).unwrap());
            assert!((a.value - b.value).abs() <= a.err_est + b.err_est + 1e-10);
        }
        checked += 1;
    }
    assert_eq!(checked, 40);
}

#[test]
fn pair_agrees_with_direct_evaluation() {
    let params = EvalParams::batch();
    let pair = empirical_pair(20_000, 1.0, &params, None).unwrap();
    for set in &pair {
        let direct = empirical_cdf(20_000, 1.0, set.case, &params, None).unwrap();
        assert_eq!(set.samples.len(), direct.samples.len());
        for (s, t) in set.samples.iter().zip(&direct.samples) {
            assert_eq!(s.modulus, t.modulus);
            match (s.value, t.value) {
                (Some(u), Some(v)) => assert!((u - v).abs() <= s.err_est.unwrap() + t.err_est.unwrap() + 1e-10),
                (None, None) => {}
                _ => panic!("exclusion differs at {}", s.modulus),
            }
        }
    }
}

#[test]
fn cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cache = SampleCache::new(dir.path());
    let params = EvalParams::default();
    let fresh = empirical_cdf(5000, 1.5, CaseKind::LogDeriv, &params, Some(&cache)).unwrap();
    let key = SampleCache::key(5000, 1.5, CaseKind::LogDeriv, &params);
    assert!(cache.path(&key).exists());
    let loaded = empirical_cdf(5000, 1.5, CaseKind::LogDeriv, &params, Some(&cache)).unwrap();
    assert_eq!(fresh.values(), loaded.values());
    assert_eq!(fresh.max_err_est(), loaded.max_err_est());
    assert!(loaded.max_err_est().is_some());
    let moduli: Vec<ModulusC> = loaded.samples.iter().map(|s| s.modulus).collect();
    assert_eq!(moduli, enumerate_c(5000));
    assert_ne!(key, SampleCache::key(5000, 1.5, CaseKind::Log, &params));
    assert_ne!(key, SampleCache::key(5000, 1.5, CaseKind::LogDeriv, &EvalParams::batch()));
    // files without the err_est column still load
    std::fs::write(cache.path(&key), "norm,a,b,value,excluded\n73,1,9,0.5,false\n73,-8,-9,,true\n").unwrap();
    let old = cache.load(&key).unwrap();
    assert_eq!(old.len(), 2);
    assert_eq!(old[0].value, Some(0.5));
    assert!(old[1].excluded() && old.iter().all(|s| s.err_est.is_none()));
    // a corrupt file is ignored, not trusted
    std::fs::write(cache.path(&key), "norm,a,b,value,excluded\n1,2,3,4,false\n").unwrap();
    assert!(cache.load(&key).is_none());
}

#[test]
fn ks_decreases_with_y_at_sigma_one() {
    let cache = SampleCache::new(env!("CARGO_TARGET_TMPDIR"));
    let g = invert_auto(1.0, CaseKind::Log, &QuadParams::default()).unwrap();
    let ks: Vec<f64> = [1_000u64, 10_000, 100_000]
        .iter()
        .map(|&y| {
            let [log, _] = empirical_pair(y, 1.0, &EvalParams::batch(), Some(&cache)).unwrap();
            ks_distance(&log.cdf(), &g)
        })
        .collect();
    assert!(ks.windows(2).all(|w| w[1] <= 1.2 * w[0]), "{ks:?}");
}
