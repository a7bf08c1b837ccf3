//! The cubic residue symbol (alpha / lambda)_3 and the characters chi_c.
//!
//! [`symbol_prime_oracle`] exponentiates in the residue field; [`symbol`] runs
//! the reciprocity recursion; [`CubicCharacter`] tabulates chi_c for one
//! modulus so that bulk evaluation is a handful of table lookups.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use thiserror::Error;

use crate::eisenstein::{factor, EisensteinInt, ModulusC, PrimeIdealRec, Splitting};
use crate::modarith::{self, inv_mod, mul_mod, pow_mod};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymbolError {
    #[error("denominator {0} is divisible by 1 - w")]
    DivisibleByLambda(EisensteinInt),
    #[error("denominator is zero")]
    ZeroDenominator,
    #[error("{0} does not generate a prime ideal prime to 3")]
    NotPrime(EisensteinInt),
}

/// A cube root of unity w^k, or zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CubeRoot {
    Zero,
    Power(u8),
}

impl CubeRoot {
    pub const ONE: Self = CubeRoot::Power(0);

    pub fn from_exponent(k: i64) -> Self {
        CubeRoot::Power(k.rem_euclid(3) as u8)
    }

    pub fn exponent(self) -> Option<u8> {
        match self {
            CubeRoot::Zero => None,
            CubeRoot::Power(k) => Some(k),
        }
    }

    pub fn conj(self) -> Self {
        match self {
            CubeRoot::Zero => CubeRoot::Zero,
            CubeRoot::Power(k) => CubeRoot::Power((3 - k) % 3),
        }
    }

    pub fn pow(self, e: u32) -> Self {
        match self {
            CubeRoot::Zero if e == 0 => CubeRoot::ONE,
            CubeRoot::Zero => CubeRoot::Zero,
            CubeRoot::Power(k) => CubeRoot::Power(((k as u64 * e as u64) % 3) as u8),
        }
    }

    pub fn to_complex(self) -> Complex64 {
        match self {
            CubeRoot::Zero => Complex64::new(0.0, 0.0),
            CubeRoot::Power(k) => unit_root(k),
        }
    }

    /// 0, 1, 2 for w^k and 3 for zero.
    pub fn code(self) -> u8 {
        self.exponent().unwrap_or(3)
    }

    pub fn from_code(code: u8) -> Self {
        if code >= 3 {
            CubeRoot::Zero
        } else {
            CubeRoot::Power(code)
        }
    }
}

pub(crate) fn unit_root(k: u8) -> Complex64 {
    let h = 0.75f64.sqrt();
    match k % 3 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(-0.5, h),
        _ => Complex64::new(-0.5, -h),
    }
}

impl Mul for CubeRoot {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        match (self, o) {
            (CubeRoot::Power(a), CubeRoot::Power(b)) => CubeRoot::Power((a + b) % 3),
            _ => CubeRoot::Zero,
        }
    }
}

impl fmt::Display for CubeRoot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CubeRoot::Zero => f.write_str("0"),
            CubeRoot::Power(0) => f.write_str("1"),
            CubeRoot::Power(1) => f.write_str("zeta3"),
            CubeRoot::Power(_) => f.write_str("zeta3^2"),
        }
    }
}

fn is_prime_u64(n: u64) -> bool {
    n >= 2 && modarith::factor_u64(n) == vec![(n, 1)]
}

/// Multiplication in F_p[w] / (w^2 + w + 1), elements as (x, y) = x + y w.
#[inline]
fn fp2_mul(u: (u64, u64), v: (u64, u64), p: u64) -> (u64, u64) {
    let ac = mul_mod(u.0, v.0, p);
    let bd = mul_mod(u.1, v.1, p);
    let ad = mul_mod(u.0, v.1, p);
    let bc = mul_mod(u.1, v.0, p);
    ((ac + p - bd) % p, ((ad + bc) % p + p - bd) % p)
}

fn fp2_pow(mut base: (u64, u64), mut e: u64, p: u64) -> (u64, u64) {
    let mut acc = (1 % p, 0);
    while e > 0 {
        if e & 1 == 1 {
            acc = fp2_mul(acc, base, p);
        }
        base = fp2_mul(base, base, p);
        e >>= 1;
    }
    acc
}

/// (alpha / pi)_3 straight from the definition alpha^((N pi - 1)/3) mod pi.
pub fn symbol_prime_oracle(alpha: EisensteinInt, pi: EisensteinInt) -> Result<CubeRoot, SymbolError> {
    if pi.is_zero() {
        return Err(SymbolError::ZeroDenominator);
    }
    if pi.divisible_by_lambda() {
        return Err(SymbolError::DivisibleByLambda(pi));
    }
    let n = pi.norm();
    if n % 3 == 1 && is_prime_u64(n) {
        let p = n;
        let binv = inv_mod(modarith::reduce(pi.b, p), p).ok_or(SymbolError::NotPrime(pi))?;
        let r = mul_mod(p - modarith::reduce(pi.a, p), binv, p) % p;
        let x = (modarith::reduce(alpha.a, p) + mul_mod(modarith::reduce(alpha.b, p), r, p)) % p;
        if x == 0 {
            return Ok(CubeRoot::Zero);
        }
        let w = pow_mod(x, (p - 1) / 3, p);
        return Ok(if w == 1 {
            CubeRoot::Power(0)
        } else if w == r {
            CubeRoot::Power(1)
        } else {
            debug_assert_eq!(w, mul_mod(r, r, p));
            CubeRoot::Power(2)
        });
    }
    let p = modarith::isqrt(n);
    if p * p == n && p % 3 == 2 && is_prime_u64(p) {
        let x = (modarith::reduce(alpha.a, p), modarith::reduce(alpha.b, p));
        if x == (0, 0) {
            return Ok(CubeRoot::Zero);
        }
        let w = fp2_pow(x, (n - 1) / 3, p);
        return Ok(if w == (1 % p, 0) {
            CubeRoot::Power(0)
        } else if w == (0, 1) {
            CubeRoot::Power(1)
        } else {
            debug_assert_eq!(w, (p - 1, p - 1));
            CubeRoot::Power(2)
        });
    }
    Err(SymbolError::NotPrime(pi))
}

/// Exponent j with unit = +-w^j.
fn unit_exponent(u: EisensteinInt) -> i64 {
    match (u.a, u.b) {
        (1, 0) | (-1, 0) => 0,
        (0, 1) | (0, -1) => 1,
        _ => 2,
    }
}

/// (alpha / lambda)_3 for any lambda prime to 1 - w, by cubic reciprocity.
pub fn symbol(alpha: EisensteinInt, lambda: EisensteinInt) -> Result<CubeRoot, SymbolError> {
    if lambda.is_zero() {
        return Err(SymbolError::ZeroDenominator);
    }
    if lambda.divisible_by_lambda() {
        return Err(SymbolError::DivisibleByLambda(lambda));
    }
    let mut den = lambda
        .primary_associate()
        .map_err(|_| SymbolError::ZeroDenominator)?
        .primary;
    let mut num = alpha;
    let mut acc: i64 = 0;
    loop {
        if den == EisensteinInt::ONE {
            return Ok(CubeRoot::from_exponent(acc));
        }
        num = num.rem(den);
        if num.is_zero() {
            return Ok(CubeRoot::Zero);
        }
        let d = num.primary_associate().expect("nonzero remainder");
        // den = 1 + 3a + 3b w
        let a = (den.a - 1) / 3;
        let b = den.b / 3;
        acc += -unit_exponent(d.unit) * (a + b) + d.ramified_power as i64 * a;
        debug_assert!(d.primary.norm() < den.norm());
        num = den;
        den = d.primary;
    }
}

/// chi_c(<x>) = (x' / c)_3 with x' the primary part of x; chi_c(<1 - w>) = 1.
pub fn chi_c(c: &ModulusC, ideal_gen: EisensteinInt) -> CubeRoot {
    let d = ideal_gen
        .primary_associate()
        .expect("ideal generator must be nonzero");
    symbol(d.primary, c.value).expect("moduli are prime to 1 - w")
}

/// Per-prime lookup table of the cubic character modulo one prime divisor.
#[derive(Clone, Debug)]
pub enum LocalTable {
    /// residue field F_p, index x = a + b r mod p
    Split { p: u64, r: u64, table: Vec<u8> },
    /// residue field F_p[w], index (a mod p) * p + (b mod p)
    Inert { p: u64, table: Vec<u8> },
}

impl LocalTable {
    pub fn new(prime: &PrimeIdealRec) -> Self {
        match prime.splitting {
            Splitting::Split => {
                let p = prime.norm;
                let r = prime.zeta_residue().expect("split prime");
                let g = modarith::primitive_root(p);
                let w = pow_mod(g, (p - 1) / 3, p);
                let e = if w == r { 1u64 } else { 2 };
                let mut table = vec![3u8; p as usize];
                let mut x = 1u64;
                for k in 0..p - 1 {
                    table[x as usize] = ((e * k) % 3) as u8;
                    x = mul_mod(x, g, p);
                }
                LocalTable::Split { p, r, table }
            }
            Splitting::Inert => {
                let p = prime.rational_prime();
                let n = p * p;
                let order = n - 1;
                let qs = modarith::prime_factors(order);
                let g = (0..p)
                    .flat_map(|x| (1..p).map(move |y| (x, y)))
                    .find(|&g| qs.iter().all(|&q| fp2_pow(g, order / q, p) != (1 % p, 0)))
                    .expect("F_p2 has a generator");
                let w = fp2_pow(g, order / 3, p);
                let e = if w == (0, 1) { 1u64 } else { 2 };
                let mut table = vec![3u8; n as usize];
                let mut x = (1 % p, 0u64);
                for k in 0..order {
                    table[(x.0 * p + x.1) as usize] = ((e * k) % 3) as u8;
                    x = fp2_mul(x, g, p);
                }
                LocalTable::Inert { p, table }
            }
            Splitting::Ramified => panic!("moduli are prime to 1 - w"),
        }
    }

    #[inline]
    pub fn code(&self, x: EisensteinInt) -> u8 {
        match self {
            LocalTable::Split { p, r, table } => {
                let v = (modarith::reduce(x.a, *p) + mul_mod(modarith::reduce(x.b, *p), *r, *p)) % p;
                table[v as usize]
            }
            LocalTable::Inert { p, table } => {
                let i = modarith::reduce(x.a, *p) * p + modarith::reduce(x.b, *p);
                table[i as usize]
            }
        }
    }
}

/// chi_c as a product of residue-field lookups over the prime divisors of c.
#[derive(Clone, Debug)]
pub struct CubicCharacter {
    pub modulus: ModulusC,
    pub tables: Vec<LocalTable>,
}

impl CubicCharacter {
    pub fn new(c: &ModulusC) -> Self {
        let f = factor(c.value).expect("moduli are nonzero");
        let tables = f.factors.iter().map(|(p, _)| LocalTable::new(p)).collect();
        Self { modulus: *c, tables }
    }

    /// Code 0, 1, 2 for w^k, 3 when x shares a factor with c.
    #[inline]
    pub fn code(&self, x: EisensteinInt) -> u8 {
        let mut acc = 0u8;
        for t in &self.tables {
            let k = t.code(x);
            if k == 3 {
                return 3;
            }
            acc += k;
        }
        acc % 3
    }

    /// (x / c)_3
    pub fn eval(&self, x: EisensteinInt) -> CubeRoot {
        CubeRoot::from_code(self.code(x))
    }
}

/// Incremental residues of a + b w along a row of fixed b, stepping a by 3.
pub(crate) struct RowCursor<'a> {
    tables: Vec<&'a [u8]>,
    idx: Vec<u64>,
    step: Vec<u64>,
    modulus: Vec<u64>,
}

impl<'a> RowCursor<'a> {
    pub fn new(chi: &'a CubicCharacter, start: EisensteinInt) -> Self {
        let n = chi.tables.len();
        let mut tables = Vec::with_capacity(n);
        let (mut idx, mut step, mut modulus) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for t in &chi.tables {
            match t {
                LocalTable::Split { p, r, table } => {
                    idx.push((modarith::reduce(start.a, *p) + mul_mod(modarith::reduce(start.b, *p), *r, *p)) % p);
                    step.push(3 % p);
                    modulus.push(*p);
                    tables.push(&table[..]);
                }
                LocalTable::Inert { p, table } => {
                    // index (a mod p) * p + (b mod p); stepping a by 3 adds 3p mod p^2
                    idx.push(modarith::reduce(start.a, *p) * p + modarith::reduce(start.b, *p));
                    step.push((3 % p) * p);
                    modulus.push(p * p);
                    tables.push(&table[..]);
                }
            }
        }
        Self { tables, idx, step, modulus }
    }

    #[inline]
    pub fn code(&self) -> u8 {
        let mut acc = 0u8;
        let mut zero = false;
        for (t, &i) in self.tables.iter().zip(&self.idx) {
            let k = t[i as usize];
            zero |= k == 3;
            acc += k;
        }
        if zero {
            3
        } else {
            acc % 3
        }
    }

    #[inline]
    pub fn advance(&mut self) {
        for ((i, &s), &m) in self.idx.iter_mut().zip(&self.step).zip(&self.modulus) {
            let v = *i + s;
            *i = if v >= m { v - m } else { v };
        }
    }
}
