use cubic_dist::charfn::*;
use cubic_dist::lfunction::CaseKind;
use cubic_dist::{enumerate_primes, PrimeIdealRec};
use num_complex::Complex64;
use proptest::prelude::*;

const CASES: [CaseKind; 2] = [CaseKind::Log, CaseKind::LogDeriv];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Power-series coefficients of exp(f) from those of f, f(0) = 0, via
/// n e_n = sum_k k f_k e_{n-k}.
fn exp_series(f: &[Complex64]) -> Vec<Complex64> {
    let mut e = vec![c(1.0, 0.0)];
    for n in 1..f.len() {
        let s: Complex64 = (1..=n).map(|k| f[k] * k as f64 * e[n - k]).sum();
        e.push(s / n as f64);
    }
    e
}

/// coefficients of exp(u t / (1 - t))
fn g_oracle(u: Complex64, len: usize) -> Vec<Complex64> {
    let f: Vec<Complex64> = (0..len).map(|k| if k == 0 { c(0.0, 0.0) } else { u }).collect();
    exp_series(&f)
}

/// coefficients of (1 - t)^(-u) = exp(u sum t^k / k)
fn h_oracle(u: Complex64, len: usize) -> Vec<Complex64> {
    let f: Vec<Complex64> = (0..len).map(|k| if k == 0 { c(0.0, 0.0) } else { u / k as f64 }).collect();
    exp_series(&f)
}

fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
    close_at(a, b, rel, b.norm())
}

/// Relative to `scale`, which for alternating sums should be the sum of the
/// absolute values of the terms.
fn close_at(a: Complex64, b: Complex64, rel: f64, scale: f64) -> bool {
    (a - b).norm() <= rel * scale.max(1.0)
}

fn small_u() -> impl Strategy<Value = Complex64> {
    (-6.0..6.0f64, -6.0..6.0f64).prop_map(|(a, b)| c(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn g_and_h_match_generating_functions(u in small_u()) {
        let (g, h) = (g_oracle(u, 30), h_oracle(u, 30));
        let a = c(u.norm(), 0.0);
        for r in 0..30 {
            let (gs, hs) = (coeff_g(r as u32, a).re, coeff_h(r as u32, a).re);
            prop_assert!(close_at(coeff_g(r as u32, u), g[r], 1e-10, gs), "G_{} {} {}", r, coeff_g(r as u32, u), g[r]);
            prop_assert!(close_at(coeff_h(r as u32, u), h[r], 1e-10, hs), "H_{}", r);
        }
    }

    /// exp((u+v) t/(1-t)) and (1-t)^(-u-v) factor, so the sequences convolve.
    #[test]
    fn convolution_identities(u in small_u(), v in small_u()) {
        let len = 20;
        let (gu, gv, guv) = (g_sequence(u, len), g_sequence(v, len), g_sequence(u + v, len));
        let (hu, hv, huv) = (h_sequence(u, len), h_sequence(v, len), h_sequence(u + v, len));
        for r in 0..len {
            let gc: Complex64 = (0..=r).map(|k| gu[k] * gv[r - k]).sum();
            let hc: Complex64 = (0..=r).map(|k| hu[k] * hv[r - k]).sum();
            let gs: f64 = (0..=r).map(|k| gu[k].norm() * gv[r - k].norm()).sum();
            let hs: f64 = (0..=r).map(|k| hu[k].norm() * hv[r - k].norm()).sum();
            let a = c(u.norm() + v.norm(), 0.0);
            let (gs, hs) = (gs.max(coeff_g(r as u32, a).re), hs.max(coeff_h(r as u32, a).re));
            prop_assert!(close_at(gc, guv[r], 1e-9, gs), "G {} {} {}", r, gc, guv[r]);
            prop_assert!(close_at(hc, huv[r], 1e-9, hs), "H {} {} {}", r, hc, huv[r]);
        }
    }

    /// Coefficients with nonnegative Taylor data are dominated by their value at |u|.
    #[test]
    fn lambda_growth(y in -30.0..30.0f64, k in 0usize..200, r in 0u32..25) {
        let primes = enumerate_primes(5000);
        let p = &primes[k % primes.len()];
        for case in CASES {
            let l = lambda_y(p, r, y, case);
            let u = match case {
                CaseKind::Log => y.abs(),
                CaseKind::LogDeriv => y.abs() * (p.norm as f64).ln(),
            };
            let bound = match case {
                CaseKind::Log => coeff_h(r, c(u, 0.0)).re,
                CaseKind::LogDeriv => coeff_g(r, c(u, 0.0)).re,
            };
            prop_assert!(l.norm() <= bound * (1.0 + 1e-12) + 1e-300);
        }
    }

    #[test]
    fn local_factor_is_a_characteristic_function(k in 0usize..600, sigma in 0.55..3.0f64, t in -20.0..20.0f64, y in -200.0..200.0f64) {
        let primes = enumerate_primes(20_000);
        let p = &primes[k % primes.len()];
        let s = c(sigma, t);
        for case in CASES {
            let f = local_factor(p, s, y, case);
            prop_assert!(f.norm() <= 1.0 + 1e-14);
            prop_assert!((local_factor(p, s, -y, case) - f.conj()).norm() < 1e-14);
        }
    }
}

#[test]
fn g_and_h_small_examples() {
    let u = c(0.5, 2.0);
    assert!(close(coeff_g(2, u), u + u * u / 2.0, 1e-15));
    assert!(close(coeff_g(3, u), u + u * u + u * u * u / 6.0, 1e-15));
    assert!(close(coeff_h(3, u), u * (u + 1.0) * (u + 2.0) / 6.0, 1e-15));
    assert_eq!(coeff_h(1, u), u);
}

#[test]
fn value_at_zero_and_symmetry() {
    for case in CASES {
        for sigma in [0.75, 1.0, 2.0] {
            let cf = CharFn::real(sigma, case, 100_000);
            assert!((cf.value(0.0) - 1.0).norm() < 1e-12);
            for y in [0.1, 1.0, 7.5, 30.0] {
                let v = cf.value(y);
                assert!(v.norm() <= 1.0 + 1e-12);
                assert!((cf.value(-y) - v.conj()).norm() < 1e-13);
                assert!((cf.log_abs(y) - v.norm().ln()).abs() < 1e-9 * v.norm().ln().abs().max(1.0));
            }
        }
    }
}

#[test]
fn mean_and_variance_from_local_laws() {
    let cutoff = 3000;
    let primes = enumerate_primes(cutoff);
    for case in CASES {
        let s = c(1.0, 0.0);
        let cf = CharFn::new(s, case, cutoff);
        let (mut mean, mut var) = (0.0, 0.0);
        for p in &primes {
            let law = LocalLaw::new(p, s, case);
            let m = law.mean();
            mean += m;
            var += law.atoms.iter().map(|&(l, w)| w * (l - m) * (l - m)).sum::<f64>();
        }
        assert!((cf.mean() - mean).abs() < 1e-10, "{case:?}");
        assert!((cf.variance() - var).abs() < 1e-10, "{case:?}");
        // derivative at 0 from a centred difference
        let h = 1e-5;
        let d = (cf.value(h) - cf.value(-h)) / (2.0 * h);
        assert!((d.im - mean).abs() < 1e-6);
    }
}

#[test]
fn euler_product_matches_dirichlet_series() {
    for case in CASES {
        for sigma in [1.0, 1.5] {
            let cf = CharFn::real(sigma, case, 2000);
            for y in [0.5, 2.0, 6.0] {
                let d = dirichlet_m(sigma, y, case, Truncation::PrimeSupport(2000));
                assert!((cf.value(y) - d).norm() < 1e-10, "{case:?} {sigma} {y}");
            }
        }
    }
}

#[test]
fn cutoff_stability_within_tail_estimate() {
    for case in CASES {
        for sigma in [1.0, 1.5, 2.0] {
            let fine = CharFn::real(sigma, case, 1_000_000);
            let coarse = CharFn::real(sigma, case, 10_000);
            for y in [0.5, 1.0, 2.0, 5.0] {
                let diff = (fine.value(y) - coarse.value(y)).norm();
                let est = coarse.eval(y).tail_est;
                assert!(diff <= est + 1e-12, "{case:?} sigma {sigma} y {y}: {diff} > {est}");
            }
        }
    }
}

#[test]
fn ramified_shift_is_deterministic_atom() {
    let ram = PrimeIdealRec::ramified();
    for case in CASES {
        let cf = CharFn::real(1.0, case, 10);
        let law = LocalLaw::new(&ram, c(1.0, 0.0), case);
        assert_eq!(law.atoms.len(), 1);
        assert!((cf.ramified_shift() - law.atoms[0].0).abs() < 1e-15);
    }
}

#[test]
fn decays_at_sigma_one() {
    let y: Vec<f64> = (200..=500).map(f64::from).collect();
    for case in CASES {
        let cf = CharFn::real(1.0, case, 100_000);
        let rep = decay_check(&cf, &y);
        assert!(rep.eventually_decreasing, "{case:?}");
        assert!(rep.kappa > 0.5 && rep.kappa < 1.5, "{case:?} {}", rep.kappa);
        assert!(rep.log_abs.last().unwrap() < &-10.0);
    }
}

#[test]
fn atoms_of_conjugate_powers_agree_on_real_axis() {
    for p in enumerate_primes(1000).iter().skip(1) {
        for case in CASES {
            let a1 = atom(p, AtomSpec::real(1.0, case, 1));
            let a2 = atom(p, AtomSpec::real(1.0, case, 2));
            assert!((a1 - a2).abs() < 1e-14);
        }
    }
}
