//! Exact arithmetic in the Eisenstein integers Z[w], w = exp(2 pi i / 3).
//!
//! Elements are stored as `a + b w` with `i64` coefficients. Products are
//! formed in `i128` and checked on the way back, and residues modulo a rational
//! prime use `u128` intermediates. Everything is exact for norms up to
//! [`NORM_LIMIT`]; the enumerators and [`factor`] reject larger inputs.

use std::fmt;
use std::io::Write;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::modarith::{self, inv_mod, mul_mod, pow_mod};

/// Largest norm accepted by [`factor`], the prime enumerators and [`enumerate_c`].
pub const NORM_LIMIT: u64 = 1_000_000_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("zero is not allowed here")]
    Zero,
    #[error("norm {0} exceeds the supported bound {NORM_LIMIT}")]
    NormTooLarge(u128),
    #[error("{0} is not a valid modulus: {1}")]
    InvalidModulus(EisensteinInt, &'static str),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EisensteinInt {
    pub a: i64,
    pub b: i64,
}

#[inline]
fn narrow(x: i128) -> i64 {
    i64::try_from(x).expect("Eisenstein coefficient overflow")
}

/// Nearest integer to x / n for n > 0 (ties rounded up).
#[inline]
fn round_div(x: i128, n: i128) -> i128 {
    (2 * x + n).div_euclid(2 * n)
}

impl EisensteinInt {
    pub const ZERO: Self = Self::new(0, 0);
    pub const ONE: Self = Self::new(1, 0);
    pub const ZETA: Self = Self::new(0, 1);
    /// The ramified prime 1 - w.
    pub const LAMBDA: Self = Self::new(1, -1);

    pub const fn new(a: i64, b: i64) -> Self {
        Self { a, b }
    }

    pub fn norm_u128(self) -> u128 {
        let (a, b) = (self.a as i128, self.b as i128);
        // a^2 - ab + b^2 = ((a - b)^2 + a^2 + b^2) / 2, all terms non-negative
        let d = a - b;
        let s = (d * d) as u128 + (a * a) as u128 + (b * b) as u128;
        s / 2
    }

    /// a^2 - ab + b^2. Panics if the norm does not fit in a `u64`.
    pub fn norm(self) -> u64 {
        u64::try_from(self.norm_u128()).expect("norm overflow")
    }

    pub fn conj(self) -> Self {
        Self::new(self.a - self.b, -self.b)
    }

    pub fn is_zero(self) -> bool {
        self.a == 0 && self.b == 0
    }

    pub fn is_unit(self) -> bool {
        self.norm_u128() == 1
    }

    /// The six units 1, w, w^2, -1, -w, -w^2.
    pub const UNITS: [Self; 6] = [
        Self::new(1, 0),
        Self::new(0, 1),
        Self::new(-1, -1),
        Self::new(-1, 0),
        Self::new(0, -1),
        Self::new(1, 1),
    ];

    /// True when the element is congruent to 1 modulo 3.
    pub fn is_primary(self) -> bool {
        self.a.rem_euclid(3) == 1 && self.b.rem_euclid(3) == 0
    }

    pub fn divisible_by_lambda(self) -> bool {
        (self.a as i128 + self.b as i128).rem_euclid(3) == 0
    }

    /// Exact division by 1 - w. Caller guarantees divisibility.
    fn div_lambda(self) -> Self {
        let (a, b) = (self.a as i128, self.b as i128);
        debug_assert!(self.divisible_by_lambda());
        Self::new(narrow((2 * a - b) / 3), narrow((a + b) / 3))
    }

    fn mul_conj_wide(self, d: Self) -> (i128, i128) {
        // self * conj(d)
        let (a, b) = (self.a as i128, self.b as i128);
        let (c, e) = ((d.a - d.b) as i128, -(d.b as i128));
        (a * c - b * e, a * e + b * c - b * e)
    }

    /// Nearest lattice point to self / d.
    pub fn div_round(self, d: Self) -> Self {
        assert!(!d.is_zero(), "division by zero");
        let n = d.norm_u128() as i128;
        let (x, y) = self.mul_conj_wide(d);
        Self::new(narrow(round_div(x, n)), narrow(round_div(y, n)))
    }

    /// Remainder of norm at most 3/4 N(d).
    pub fn rem(self, d: Self) -> Self {
        self - self.div_round(d) * d
    }

    pub fn div_exact(self, d: Self) -> Option<Self> {
        if d.is_zero() {
            return None;
        }
        let n = d.norm_u128() as i128;
        let (x, y) = self.mul_conj_wide(d);
        if x % n == 0 && y % n == 0 {
            Some(Self::new(narrow(x / n), narrow(y / n)))
        } else {
            None
        }
    }

    pub fn divides(self, x: Self) -> bool {
        x.div_exact(self).is_some()
    }

    pub fn pow(self, mut e: u32) -> Self {
        let mut acc = Self::ONE;
        let mut base = self;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            e >>= 1;
            if e > 0 {
                base = base * base;
            }
        }
        acc
    }

    pub fn to_complex(self) -> Complex64 {
        let s3 = 3f64.sqrt();
        Complex64::new(self.a as f64 - 0.5 * self.b as f64, 0.5 * s3 * self.b as f64)
    }

    /// Splits off units and powers of 1 - w: self = unit * (1 - w)^r * primary.
    pub fn primary_associate(self) -> Result<PrimaryDecomposition, ArithError> {
        if self.is_zero() {
            return Err(ArithError::Zero);
        }
        let mut y = self;
        let mut r = 0;
        while y.divisible_by_lambda() {
            y = y.div_lambda();
            r += 1;
        }
        for u in Self::UNITS {
            let p = u * y;
            if p.is_primary() {
                // u^{-1} = conj(u); fold the removed 1 - w powers back in
                let unit = u.conj();
                return Ok(PrimaryDecomposition {
                    unit,
                    ramified_power: r,
                    primary: p,
                });
            }
        }
        unreachable!("exactly one associate of an element prime to 1 - w is primary")
    }
}

impl Add for EisensteinInt {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(
            self.a.checked_add(o.a).expect("Eisenstein coefficient overflow"),
            self.b.checked_add(o.b).expect("Eisenstein coefficient overflow"),
        )
    }
}

impl Sub for EisensteinInt {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(
            self.a.checked_sub(o.a).expect("Eisenstein coefficient overflow"),
            self.b.checked_sub(o.b).expect("Eisenstein coefficient overflow"),
        )
    }
}

impl Neg for EisensteinInt {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.a, -self.b)
    }
}

impl Mul for EisensteinInt {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        // w^2 = -1 - w
        let (a, b, c, d) = (self.a as i128, self.b as i128, o.a as i128, o.b as i128);
        let bd = b * d;
        Self::new(narrow(a * c - bd), narrow(a * d + b * c - bd))
    }
}

impl fmt::Display for EisensteinInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.a, self.b)
    }
}

impl std::str::FromStr for EisensteinInt {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (x, y) = s
            .split_once(',')
            .ok_or_else(|| format!("expected A,B but got {s:?}"))?;
        let a = x.trim().parse::<i64>().map_err(|e| format!("{x:?}: {e}"))?;
        let b = y.trim().parse::<i64>().map_err(|e| format!("{y:?}: {e}"))?;
        Ok(Self::new(a, b))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimaryDecomposition {
    pub unit: EisensteinInt,
    pub ramified_power: u32,
    pub primary: EisensteinInt,
}

impl PrimaryDecomposition {
    pub fn reconstruct(&self) -> EisensteinInt {
        self.unit * EisensteinInt::LAMBDA.pow(self.ramified_power) * self.primary
    }
}

pub fn gcd(mut x: EisensteinInt, mut y: EisensteinInt) -> EisensteinInt {
    while !y.is_zero() {
        let r = x.rem(y);
        x = y;
        y = r;
    }
    x
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Splitting {
    Split,
    Inert,
    Ramified,
}

impl Splitting {
    pub fn as_str(self) -> &'static str {
        match self {
            Splitting::Split => "split",
            Splitting::Inert => "inert",
            Splitting::Ramified => "ramified",
        }
    }
}

/// A prime ideal with its distinguished generator: primary when prime to 3,
/// and 1 - w for the ramified prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PrimeIdealRec {
    pub generator: EisensteinInt,
    pub norm: u64,
    pub splitting: Splitting,
}

impl PrimeIdealRec {
    pub fn ramified() -> Self {
        Self {
            generator: EisensteinInt::LAMBDA,
            norm: 3,
            splitting: Splitting::Ramified,
        }
    }

    pub fn inert(p: u64) -> Self {
        debug_assert_eq!(p % 3, 2);
        Self {
            generator: EisensteinInt::new(-(p as i64), 0),
            norm: p * p,
            splitting: Splitting::Inert,
        }
    }

    /// The rational prime below this ideal.
    pub fn rational_prime(&self) -> u64 {
        match self.splitting {
            Splitting::Inert => modarith::isqrt(self.norm),
            _ => self.norm,
        }
    }

    /// Image of w in the residue field when the field is F_p (split primes).
    pub fn zeta_residue(&self) -> Option<u64> {
        if self.splitting != Splitting::Split {
            return None;
        }
        let p = self.norm;
        let g = self.generator;
        // g = x + y w = 0 in F_p  =>  w = -x / y
        let yinv = inv_mod(modarith::reduce(g.b, p), p).expect("split generator has b prime to p");
        Some(mul_mod(p - modarith::reduce(g.a, p), yinv, p) % p)
    }

    fn sort_key(&self) -> (u64, EisensteinInt) {
        (self.norm, self.generator)
    }
}

impl PartialOrd for PrimeIdealRec {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PrimeIdealRec {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

/// A primitive cube root of unity modulo the prime p = 1 mod 3.
pub fn cube_root_of_unity(p: u64) -> u64 {
    debug_assert_eq!(p % 3, 1);
    (2..p)
        .map(|g| pow_mod(g, (p - 1) / 3, p))
        .find(|&w| w != 1)
        .expect("p = 1 mod 3 has a non-cube")
}

/// Primary generator of one of the two primes above p = 1 mod 3.
pub fn split_generator(p: u64) -> EisensteinInt {
    let r = cube_root_of_unity(p);
    let g = gcd(EisensteinInt::new(p as i64, 0), EisensteinInt::new(r as i64, -1));
    debug_assert_eq!(g.norm(), p);
    g.primary_associate()
        .expect("nonzero generator")
        .primary
}

/// Every prime ideal of norm at most `max_norm`, sorted by norm then generator.
pub fn enumerate_primes(max_norm: u64) -> Vec<PrimeIdealRec> {
    assert!(max_norm <= NORM_LIMIT, "max_norm beyond NORM_LIMIT");
    let mut out = Vec::new();
    for p in modarith::sieve(max_norm) {
        match p % 3 {
            0 => out.push(PrimeIdealRec::ramified()),
            1 => {
                let g = split_generator(p);
                for generator in [g, g.conj()] {
                    out.push(PrimeIdealRec {
                        generator,
                        norm: p,
                        splitting: Splitting::Split,
                    });
                }
            }
            _ => {
                if p.checked_mul(p).is_some_and(|n| n <= max_norm) {
                    out.push(PrimeIdealRec::inert(p));
                }
            }
        }
    }
    out.sort();
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    pub unit: EisensteinInt,
    pub factors: Vec<(PrimeIdealRec, u32)>,
}

impl Factorization {
    pub fn reconstruct(&self) -> EisensteinInt {
        self.factors
            .iter()
            .fold(self.unit, |acc, (p, e)| acc * p.generator.pow(*e))
    }
}

/// Factorisation into prime ideal generators times a unit.
pub fn factor(x: EisensteinInt) -> Result<Factorization, ArithError> {
    if x.is_zero() {
        return Err(ArithError::Zero);
    }
    let n = x.norm_u128();
    if n > NORM_LIMIT as u128 {
        return Err(ArithError::NormTooLarge(n));
    }
    let mut rest = x;
    let mut factors = Vec::new();
    for (p, e) in modarith::factor_u64(n as u64) {
        match p % 3 {
            0 => {
                for _ in 0..e {
                    rest = rest.div_lambda();
                }
                factors.push((PrimeIdealRec::ramified(), e));
            }
            2 => {
                let rec = PrimeIdealRec::inert(p);
                debug_assert_eq!(e % 2, 0);
                for _ in 0..e / 2 {
                    rest = rest.div_exact(rec.generator).expect("inert prime divides");
                }
                factors.push((rec, e / 2));
            }
            _ => {
                let g = split_generator(p);
                let mut k = 0;
                while k < e {
                    match rest.div_exact(g) {
                        Some(q) => {
                            rest = q;
                            k += 1;
                        }
                        None => break,
                    }
                }
                let gbar = g.conj();
                for _ in k..e {
                    rest = rest.div_exact(gbar).expect("conjugate prime divides");
                }
                for (gen, m) in [(g, k), (gbar, e - k)] {
                    if m > 0 {
                        factors.push((
                            PrimeIdealRec {
                                generator: gen,
                                norm: p,
                                splitting: Splitting::Split,
                            },
                            m,
                        ));
                    }
                }
            }
        }
    }
    debug_assert!(rest.is_unit());
    factors.sort();
    Ok(Factorization {
        unit: rest,
        factors,
    })
}

pub fn is_squarefree(x: EisensteinInt) -> Result<bool, ArithError> {
    Ok(factor(x)?.factors.iter().all(|&(_, e)| e == 1))
}

/// A member of the modulus family: square-free, = 1 mod 9, and not 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ModulusC {
    pub norm: u64,
    pub value: EisensteinInt,
}

impl ModulusC {
    pub fn new(value: EisensteinInt) -> Result<Self, ArithError> {
        if value == EisensteinInt::ONE {
            return Err(ArithError::InvalidModulus(value, "c = 1 is excluded"));
        }
        if value.a.rem_euclid(9) != 1 || value.b.rem_euclid(9) != 0 {
            return Err(ArithError::InvalidModulus(value, "not congruent to 1 mod 9"));
        }
        if !is_squarefree(value)? {
            return Err(ArithError::InvalidModulus(value, "not square-free"));
        }
        Ok(Self {
            norm: value.norm(),
            value,
        })
    }
}

impl fmt::Display for ModulusC {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.value.fmt(f)
    }
}

/// Square-free test data for one prime ideal, as congruence conditions on the
/// lattice c = (1 + 9s) + 9t w.
enum SieveRule {
    /// p^2 | c  <=>  s = -(1 + 9 t r2) / 9 mod p^2, with w -> r2 mod p^2
    Split { m: u64, r2: u64, inv9: u64 },
    /// p^2 | c  <=>  t = 0 and s = -1/9 mod p^2
    Inert { m: u64, s0: u64 },
}

fn sieve_rules(max_norm: u64) -> Vec<SieveRule> {
    let bound = modarith::isqrt(max_norm);
    enumerate_primes(bound.max(3))
        .into_iter()
        .filter_map(|rec| match rec.splitting {
            Splitting::Ramified => None,
            Splitting::Split => {
                let p = rec.norm;
                let m = p * p;
                let g2 = rec.generator * rec.generator;
                // g^2 = X + Y w = 0 mod p^2-part  =>  w = -X / Y mod p^2
                let yinv = inv_mod(modarith::reduce(g2.b, m), m)?;
                let r2 = mul_mod((m - modarith::reduce(g2.a, m)) % m, yinv, m);
                let inv9 = inv_mod(9, m)?;
                Some(SieveRule::Split { m, r2, inv9 })
            }
            Splitting::Inert => {
                let p = rec.rational_prime();
                let m = p * p;
                let inv9 = inv_mod(9, m)?;
                Some(SieveRule::Inert {
                    m,
                    s0: (m - inv9) % m,
                })
            }
        })
        .collect()
}

/// Visits every c in the family with N(c) <= max_norm, row by row
/// (rows b = 9t in increasing t, increasing a within a row).
pub fn for_each_modulus<F: FnMut(ModulusC)>(max_norm: u64, mut f: F) {
    assert!(max_norm <= NORM_LIMIT, "max_norm beyond NORM_LIMIT");
    if max_norm < 73 {
        return;
    }
    let rules = sieve_rules(max_norm);
    let y = max_norm as i128;
    let bmax = modarith::isqrt(4 * max_norm / 3) as i64;
    let tmax = bmax / 9;
    let mut marks: Vec<bool> = Vec::new();
    for t in -tmax..=tmax {
        let b = 9 * t as i128;
        let disc = 4 * y - 3 * b * b;
        if disc < 0 {
            continue;
        }
        let root = modarith::isqrt(disc as u64) as i128;
        // a in [(b - root)/2, (b + root)/2]
        let a_lo = (b - root).div_euclid(2);
        let a_hi = (b + root + 1).div_euclid(2);
        let s_lo = (a_lo - 1 + 8).div_euclid(9);
        let s_hi = (a_hi - 1).div_euclid(9);
        if s_hi < s_lo {
            continue;
        }
        let len = (s_hi - s_lo + 1) as usize;
        marks.clear();
        marks.resize(len, false);
        for rule in &rules {
            let (m, start) = match *rule {
                SieveRule::Split { m, r2, inv9 } => {
                    let tr = mul_mod(modarith::reduce(t, m), r2, m);
                    let v = (1 + mul_mod(9, tr, m)) % m;
                    (m, mul_mod((m - v) % m, inv9, m))
                }
                SieveRule::Inert { m, s0 } => {
                    if (t as i128).rem_euclid(m as i128) != 0 {
                        continue;
                    }
                    (m, s0)
                }
            };
            let off = (start as i128 - s_lo).rem_euclid(m as i128) as usize;
            let mut k = off;
            while k < len {
                marks[k] = true;
                k += m as usize;
            }
        }
        for (k, &hit) in marks.iter().enumerate() {
            if hit {
                continue;
            }
            let s = s_lo + k as i128;
            let value = EisensteinInt::new((1 + 9 * s) as i64, b as i64);
            if value == EisensteinInt::ONE {
                continue;
            }
            let norm = value.norm();
            if norm <= max_norm {
                f(ModulusC { norm, value });
            }
        }
    }
}

/// Every c in the family with N(c) <= max_norm, sorted by norm then (a, b).
pub fn enumerate_c(max_norm: u64) -> Vec<ModulusC> {
    let mut out = Vec::new();
    for_each_modulus(max_norm, |c| out.push(c));
    out.sort();
    out
}

pub fn write_primes_csv<W: Write>(w: W, primes: &[PrimeIdealRec]) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["norm", "gen_a", "gen_b", "splitting"])?;
    for p in primes {
        wr.write_record([
            p.norm.to_string(),
            p.generator.a.to_string(),
            p.generator.b.to_string(),
            p.splitting.as_str().to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_moduli_csv<W: Write>(w: W, moduli: &[ModulusC]) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["norm", "a", "b"])?;
    for c in moduli {
        wr.write_record([
            c.norm.to_string(),
            c.value.a.to_string(),
            c.value.b.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
