use cubic_dist::eisenstein::gcd;
use cubic_dist::*;
use proptest::prelude::*;
use std::collections::HashSet;

fn e(a: i64, b: i64) -> EisensteinInt {
    EisensteinInt::new(a, b)
}

fn elem(bound: i64) -> impl Strategy<Value = EisensteinInt> {
    (-bound..=bound, -bound..=bound).prop_map(|(a, b)| e(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn norm_is_multiplicative(x in elem(1000), y in elem(1000)) {
        prop_assert_eq!((x * y).norm(), x.norm() * y.norm());
    }

    #[test]
    fn conjugation_preserves_norm(x in elem(100_000)) {
        prop_assert_eq!(x.conj().norm(), x.norm());
        prop_assert_eq!(x.conj(), e(x.a - x.b, -x.b));
        prop_assert_eq!(x.norm() == 0, x.is_zero());
    }

    #[test]
    fn ring_laws(x in elem(1000), y in elem(1000), z in elem(1000)) {
        prop_assert_eq!(x * y, y * x);
        prop_assert_eq!((x * y) * z, x * (y * z));
        prop_assert_eq!(x * (y + z), x * y + x * z);
    }

    #[test]
    fn primary_associate_reconstructs(x in elem(10_000)) {
        prop_assume!(!x.is_zero());
        let d = x.primary_associate().unwrap();
        prop_assert_eq!(d.reconstruct(), x);
        prop_assert!(d.unit.is_unit());
        prop_assert!(d.primary.is_primary());
        if !x.divisible_by_lambda() {
            prop_assert_eq!(d.ramified_power, 0);
            let hits = EisensteinInt::UNITS.iter().filter(|&&u| (u * x).is_primary()).count();
            prop_assert_eq!(hits, 1);
        }
    }

    #[test]
    fn factor_reconstructs(x in elem(5000)) {
        prop_assume!(!x.is_zero());
        let f = factor(x).unwrap();
        prop_assert_eq!(f.reconstruct(), x);
        prop_assert!(f.unit.is_unit());
        prop_assert!(f.factors.iter().all(|&(_, m)| m >= 1));
        let sf = f.factors.iter().all(|&(_, m)| m == 1);
        prop_assert_eq!(is_squarefree(x).unwrap(), sf);
    }

    #[test]
    fn gcd_divides_and_keeps_common_factor(x in elem(500), y in elem(500), z in elem(30)) {
        prop_assume!(!z.is_zero() && !(x.is_zero() && y.is_zero()));
        let (xz, yz) = (x * z, y * z);
        let g = gcd(xz, yz);
        prop_assert!(g.divides(xz) && g.divides(yz));
        prop_assert_eq!(g.norm() % z.norm(), 0);
    }
}

#[test]
fn units_are_norm_one() {
    let mut found = Vec::new();
    for a in -3..=3 {
        for b in -3..=3 {
            if e(a, b).norm() == 1 {
                found.push(e(a, b));
            }
        }
    }
    assert_eq!(found.len(), 6);
    for u in found {
        assert!(u.is_unit());
        assert!(EisensteinInt::UNITS.contains(&u));
    }
}

#[test]
fn norm_examples() {
    assert_eq!(e(0, 0).norm(), 0);
    assert_eq!(e(1, 3).norm(), 7);
    assert_eq!(e(1, 9).norm(), 73);
}

/// x is irreducible iff it is not a unit and has no divisor d with
/// 1 < N(d) < N(x); divisors up to norm sqrt(N(x)) suffice.
fn irreducible(x: EisensteinInt, small: &[EisensteinInt]) -> bool {
    let n = x.norm();
    if n <= 1 {
        return false;
    }
    !small.iter().any(|&d| d.norm() * d.norm() <= n && x.norm() % d.norm() == 0 && d.divides(x))
}

#[test]
fn prime_count_matches_brute_force_scan() {
    let bound = 10_000u64;
    let r = 120i64;
    let small: Vec<EisensteinInt> = (-12..=12)
        .flat_map(|a| (-12..=12).map(move |b| e(a, b)))
        .filter(|d| d.norm() > 1 && d.norm() <= 100)
        .collect();
    let mut irreducibles = 0u64;
    for a in -r..=r {
        for b in -r..=r {
            let x = e(a, b);
            if x.norm() <= bound && irreducible(x, &small) {
                irreducibles += 1;
            }
        }
    }
    // six associates per prime ideal
    assert_eq!(irreducibles % 6, 0);
    assert_eq!(enumerate_primes(bound).len() as u64, irreducibles / 6);
}

#[test]
fn every_prime_generator_factors_as_itself() {
    for p in enumerate_primes(10_000) {
        let f = factor(p.generator).unwrap();
        assert_eq!(f.factors.len(), 1);
        assert_eq!(f.factors[0].0, p);
        assert_eq!(f.factors[0].1, 1);
    }
}

#[test]
fn splitting_census() {
    let primes = enumerate_primes(10_000);
    for p in (2u64..=10_000).filter(|&n| (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0)) {
        let over: Vec<_> = primes.iter().filter(|q| q.rational_prime() == p).collect();
        match p % 3 {
            0 => {
                assert_eq!(over.len(), 1);
                assert_eq!(over[0].splitting, Splitting::Ramified);
                assert_eq!(over[0].norm, 3);
            }
            1 => {
                assert_eq!(over.len(), 2, "{p}");
                assert!(over.iter().all(|q| q.norm == p && q.splitting == Splitting::Split));
                assert_eq!(over[0].generator.conj(), over[1].generator);
            }
            _ => {
                // one record of norm p^2, present in the list only when p^2 <= 10^4
                assert!(over.iter().all(|q| q.norm == p * p && q.splitting == Splitting::Inert));
                assert_eq!(over.len(), usize::from(p * p <= 10_000), "{p}");
                let f = factor(e(p as i64, 0)).unwrap();
                assert_eq!(f.factors, vec![(PrimeIdealRec::inert(p), 1)]);
            }
        }
    }
}

#[test]
fn sorted_by_norm_then_generator() {
    let primes = enumerate_primes(50_000);
    assert!(primes.windows(2).all(|w| (w[0].norm, w[0].generator.a, w[0].generator.b)
        < (w[1].norm, w[1].generator.a, w[1].generator.b)));
}

#[test]
fn family_matches_direct_filter() {
    let y = 200_000u64;
    let fast: Vec<ModulusC> = enumerate_c(y);
    let mut direct = Vec::new();
    // N(x) >= (a^2 + b^2) / 2, so |a|, |b| <= 633
    for s in -71i64..=71 {
        for t in -71i64..=71 {
            let x = e(1 + 9 * s, 9 * t);
            if x != EisensteinInt::ONE && x.norm() <= y && is_squarefree(x).unwrap() {
                direct.push(x);
            }
        }
    }
    let fast_set: HashSet<EisensteinInt> = fast.iter().map(|c| c.value).collect();
    assert_eq!(fast_set.len(), fast.len(), "duplicates");
    assert_eq!(fast_set, direct.into_iter().collect::<HashSet<_>>());
    assert!(fast.windows(2).all(|w| w[0].norm <= w[1].norm));
    assert_eq!(fast, enumerate_c(y));
    assert!(fast.iter().all(|c| c.norm == c.value.norm()));
}

#[test]
fn factor_examples() {
    assert!(factor(e(1, 0)).unwrap().factors.is_empty());
    let ten = factor(e(10, 0)).unwrap();
    assert_eq!(ten.factors.len(), 2);
    assert!(ten.factors.iter().all(|(p, m)| *m == 1 && p.splitting == Splitting::Inert));
    let nine = factor(e(9, 0)).unwrap();
    assert_eq!(nine.factors.len(), 1);
    assert_eq!(nine.factors[0], (PrimeIdealRec::ramified(), 4));
    assert!(factor(e(0, 0)).is_err());
}
