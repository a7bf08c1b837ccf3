//! The limiting characteristic function M~_sigma(y) as an Euler product of
//! local factors, and its Dirichlet-series form in the coefficients lambda_y.

use num_complex::Complex64;

use crate::cubic_symbol::unit_root;
use crate::eisenstein::{PrimeIdealRec, Splitting};
use crate::lfunction::CaseKind;
use crate::modarith;

/// Selects a_{p,j}(s): the point s, the case and the power of w.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AtomSpec {
    pub s: Complex64,
    pub case: CaseKind,
    pub j: u8,
}

impl AtomSpec {
    pub fn real(sigma: f64, case: CaseKind, j: u8) -> Self {
        Self {
            s: Complex64::new(sigma, 0.0),
            case,
            j,
        }
    }
}

/// a_{p,j}(s) for an ideal of norm `norm`.
pub fn atom_for_norm(norm: f64, spec: AtomSpec) -> f64 {
    let z = unit_root(spec.j);
    let ln = norm.ln();
    let ns = (spec.s * ln).exp(); // N^s
    match spec.case {
        CaseKind::Log => 2.0 * (Complex64::new(1.0, 0.0) - z / ns).norm().ln(),
        CaseKind::LogDeriv => 2.0 * (z * ln / (ns - z)).re,
    }
}

/// a_{p,j}(s). For the ramified prime only j = 0 is meaningful.
pub fn atom(prime: &PrimeIdealRec, spec: AtomSpec) -> f64 {
    debug_assert!(prime.splitting != Splitting::Ramified || spec.j == 0);
    atom_for_norm(prime.norm as f64, spec)
}

/// The discrete law F_{sigma,p}: atoms as (location, mass).
#[derive(Clone, Debug, PartialEq)]
pub struct LocalLaw {
    pub prime: PrimeIdealRec,
    pub atoms: Vec<(f64, f64)>,
}

impl LocalLaw {
    pub fn new(prime: &PrimeIdealRec, s: Complex64, case: CaseKind) -> Self {
        let spec = |j| AtomSpec { s, case, j };
        let atoms = if prime.splitting == Splitting::Ramified {
            vec![(-atom(prime, spec(0)), 1.0)]
        } else {
            let n = prime.norm as f64;
            let m = n / (3.0 * (n + 1.0));
            let mut v = vec![(0.0, 1.0 / (n + 1.0))];
            v.extend((0..3).map(|j| (-atom(prime, spec(j)), m)));
            v
        };
        Self { prime: *prime, atoms }
    }

    /// sum of mass * exp(i y location)
    pub fn char_fn(&self, y: f64) -> Complex64 {
        self.atoms
            .iter()
            .map(|&(loc, mass)| Complex64::from_polar(mass, y * loc))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(l, m)| l * m).sum()
    }
}

/// Local factor of M~ at one prime, from the closed form.
pub fn local_factor(prime: &PrimeIdealRec, s: Complex64, y: f64, case: CaseKind) -> Complex64 {
    let a = |j| atom(prime, AtomSpec { s, case, j });
    if prime.splitting == Splitting::Ramified {
        return Complex64::from_polar(1.0, -y * a(0));
    }
    let n = prime.norm as f64;
    let sum: Complex64 = (0..3).map(|j| Complex64::from_polar(1.0, -y * a(j))).sum();
    Complex64::new(1.0 / (n + 1.0), 0.0) + sum * (n / (3.0 * (n + 1.0)))
}

/// Unramified prime ideals grouped by norm: (norm, number of ideals).
pub(crate) fn norm_groups(cutoff: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    for p in modarith::sieve(cutoff) {
        match p % 3 {
            1 => out.push((p, 2)),
            2 if p * p <= cutoff => out.push((p * p, 1)),
            _ => {}
        }
    }
    out.sort_unstable();
    out
}

#[derive(Clone, Copy, Debug)]
struct Group {
    mult: u32,
    w0: f64,
    w1: f64,
    a: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharFnValue {
    pub value: Complex64,
    /// bound on |M~(y) - value| from the primes beyond the cutoff
    pub tail_est: f64,
}

/// Truncated Euler product for M~_s(y), precomputed for one (s, case, cutoff).
#[derive(Clone, Debug)]
pub struct CharFn {
    pub s: Complex64,
    pub case: CaseKind,
    pub prime_cutoff: u64,
    ram_atom: f64,
    groups: Vec<Group>,
    real_s: bool,
}

impl CharFn {
    pub fn new(s: Complex64, case: CaseKind, prime_cutoff: u64) -> Self {
        assert!(s.re > 0.5, "need Re(s) > 1/2");
        let ram_atom = atom_for_norm(3.0, AtomSpec { s, case, j: 0 });
        let groups = norm_groups(prime_cutoff)
            .into_iter()
            .map(|(n, mult)| {
                let nf = n as f64;
                let a = [0u8, 1, 2].map(|j| atom_for_norm(nf, AtomSpec { s, case, j }));
                Group {
                    mult,
                    w0: 1.0 / (nf + 1.0),
                    w1: nf / (3.0 * (nf + 1.0)),
                    a,
                }
            })
            .collect();
        Self {
            s,
            case,
            prime_cutoff,
            ram_atom,
            groups,
            real_s: s.im == 0.0,
        }
    }

    pub fn real(sigma: f64, case: CaseKind, prime_cutoff: u64) -> Self {
        Self::new(Complex64::new(sigma, 0.0), case, prime_cutoff)
    }

    /// The deterministic ramified term -a_{<1-w>,0}.
    pub fn ramified_shift(&self) -> f64 {
        -self.ram_atom
    }

    pub fn eval(&self, y: f64) -> CharFnValue {
        let mut acc = Complex64::from_polar(1.0, -y * self.ram_atom);
        for g in &self.groups {
            let e0 = Complex64::from_polar(1.0, -y * g.a[0]);
            let rest = if self.real_s {
                Complex64::from_polar(2.0, -y * g.a[1])
            } else {
                Complex64::from_polar(1.0, -y * g.a[1]) + Complex64::from_polar(1.0, -y * g.a[2])
            };
            let f = g.w0 + (e0 + rest) * g.w1;
            acc *= if g.mult == 2 { f * f } else { f };
        }
        let value = acc;
        CharFnValue {
            value,
            tail_est: value.norm() * self.tail_sum(y).min(2.0),
        }
    }

    pub fn value(&self, y: f64) -> Complex64 {
        self.eval(y).value
    }

    /// log |M~(y)|, accumulated without underflow.
    pub fn log_abs(&self, y: f64) -> f64 {
        let mut acc = 0.0;
        for g in &self.groups {
            let e0 = Complex64::from_polar(1.0, -y * g.a[0]);
            let rest = if self.real_s {
                Complex64::from_polar(2.0, -y * g.a[1])
            } else {
                Complex64::from_polar(1.0, -y * g.a[1]) + Complex64::from_polar(1.0, -y * g.a[2])
            };
            let f = g.w0 + (e0 + rest) * g.w1;
            acc += g.mult as f64 * f.norm().ln();
        }
        acc
    }

    /// Integral-comparison bound for sum over N(p) > cutoff of |1 - phi_p(y)|,
    /// using |1 - phi| <= |y| |E X_p| + y^2 E X_p^2 / 2.
    fn tail_sum(&self, y: f64) -> f64 {
        let p = self.prime_cutoff.max(7) as f64;
        let sigma = self.s.re;
        let lp = p.ln();
        let y = y.abs();
        let quad = 2.0 * sigma - 1.0;
        let cub = 3.0 * sigma - 1.0;
        // prime ideals of norm <= t number about t / ln t; factor 2 of slack
        let (second, first) = match self.case {
            CaseKind::Log => (y * y * p.powf(-quad) * p / (quad * lp), 2.0 * y * p.powf(1.0 - 3.0 * sigma) / (cub * lp)),
            CaseKind::LogDeriv => (
                y * y * p.powf(1.0 - 2.0 * sigma) * (lp / quad + 1.0 / (quad * quad)),
                6.0 * y * p.powf(1.0 - 3.0 * sigma) / cub,
            ),
        };
        2.0 * (second + first)
    }

    /// Mean of the model sum, i.e. -i d/dy M~ at 0.
    pub fn mean(&self) -> f64 {
        let mut m = -self.ram_atom;
        for g in &self.groups {
            m += g.mult as f64 * g.w1 * -(g.a[0] + g.a[1] + g.a[2]);
        }
        m
    }

    pub fn variance(&self) -> f64 {
        let mut v = 0.0;
        for g in &self.groups {
            let mean = g.w1 * -(g.a[0] + g.a[1] + g.a[2]);
            let second = g.w1 * (g.a[0] * g.a[0] + g.a[1] * g.a[1] + g.a[2] * g.a[2]);
            v += g.mult as f64 * (second - mean * mean);
        }
        v
    }

    /// (norm, multiplicity, [a_0, a_1, a_2]) for every unramified norm.
    pub fn atom_table(&self) -> impl Iterator<Item = (f64, u32, [f64; 3])> + '_ {
        self.groups.iter().map(|g| (1.0 / g.w0 - 1.0, g.mult, g.a))
    }
}

/// M~_s(y) truncated to N(p) <= prime_cutoff.
pub fn char_fn(s: Complex64, y: f64, case: CaseKind, prime_cutoff: u64) -> CharFnValue {
    CharFn::new(s, case, prime_cutoff).eval(y)
}

/// G_r(u) = sum_{n=1}^{r} u^n / n! * binom(r-1, n-1), G_0 = 1.
pub fn coeff_g(r: u32, u: Complex64) -> Complex64 {
    if r == 0 {
        return Complex64::new(1.0, 0.0);
    }
    // term_n = u^n / n! * C(r-1, n-1); ratio term_{n+1}/term_n = u (r-n) / (n (n+1))
    let mut term = u;
    let mut sum = term;
    for n in 1..r {
        term = term * u * ((r - n) as f64 / (n as f64 * (n + 1) as f64));
        sum += term;
    }
    sum
}

/// H_r(u) = u (u+1) ... (u+r-1) / r!, H_0 = 1.
pub fn coeff_h(r: u32, u: Complex64) -> Complex64 {
    (0..r).fold(Complex64::new(1.0, 0.0), |acc, k| acc * (u + k as f64) / (k + 1) as f64)
}

/// G_0(u) .. G_{len-1}(u) by the three-term recurrence of exp(ut/(1-t)).
pub fn g_sequence(u: Complex64, len: usize) -> Vec<Complex64> {
    let mut g = Vec::with_capacity(len);
    g.push(Complex64::new(1.0, 0.0));
    if len > 1 {
        g.push(u);
    }
    for r in 1..len.saturating_sub(1) {
        let rf = r as f64;
        let next = ((u + 2.0 * rf) * g[r] - (rf - 1.0) * g[r - 1]) / (rf + 1.0);
        g.push(next);
    }
    g
}

pub fn h_sequence(u: Complex64, len: usize) -> Vec<Complex64> {
    let mut h = Vec::with_capacity(len);
    let mut cur = Complex64::new(1.0, 0.0);
    for r in 0..len {
        h.push(cur);
        cur = cur * (u + r as f64) / (r + 1) as f64;
    }
    h
}

fn lambda_u(norm: f64, y: f64, case: CaseKind) -> Complex64 {
    match case {
        CaseKind::Log => Complex64::new(0.0, y),
        CaseKind::LogDeriv => Complex64::new(0.0, -y * norm.ln()),
    }
}

fn lambda_sequence(norm: f64, y: f64, case: CaseKind, len: usize) -> Vec<Complex64> {
    let u = lambda_u(norm, y, case);
    match case {
        CaseKind::Log => h_sequence(u, len),
        CaseKind::LogDeriv => g_sequence(u, len),
    }
}

/// lambda_y(p^power).
pub fn lambda_y(prime: &PrimeIdealRec, power: u32, y: f64, case: CaseKind) -> Complex64 {
    let u = lambda_u(prime.norm as f64, y, case);
    match case {
        CaseKind::Log => coeff_h(power, u),
        CaseKind::LogDeriv => coeff_g(power, u),
    }
}

/// How the Dirichlet series for M~ is cut off.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    /// terms with N(a^3 b^3 m^2) <= T, ramified powers with 3^(r1+r2) <= T
    TermNorm(u64),
    /// all ideals supported on primes of norm <= P, each prime summed to convergence
    PrimeSupport(u64),
}

/// sum_r lambda_y(<1-w>^r) 3^(-r sigma), to convergence or up to 3^r <= limit.
fn ramified_series(sigma: f64, y: f64, case: CaseKind, limit: Option<u64>) -> Complex64 {
    let x = 3f64.powf(-sigma);
    let lam = lambda_sequence(3.0, y, case, 400);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut xr = 1.0;
    let mut small = 0;
    for (r, l) in lam.iter().enumerate() {
        if let Some(lim) = limit {
            if 3f64.powi(r as i32) > lim as f64 {
                break;
            }
        }
        let t = l * xr;
        sum += t;
        small = if t.norm() < 1e-20 { small + 1 } else { 0 };
        if small >= 3 {
            break;
        }
        xr *= x;
    }
    sum
}

/// The (r1, r2) double sum: the square of the single ramified series.
fn ramified_double(sigma: f64, y: f64, case: CaseKind, limit: Option<u64>) -> Complex64 {
    match limit {
        None => {
            let s = ramified_series(sigma, y, case, None);
            s * s
        }
        Some(t) => {
            let x = 3f64.powf(-sigma);
            let lam = lambda_sequence(3.0, y, case, 64);
            let mut sum = Complex64::new(0.0, 0.0);
            let mut p1 = 1u64;
            for r1 in 0..lam.len() {
                if p1 > t {
                    break;
                }
                let mut p2 = p1;
                for r2 in 0..lam.len() {
                    if p2 > t {
                        break;
                    }
                    sum += lam[r1] * lam[r2] * x.powi((r1 + r2) as i32);
                    p2 = p2.saturating_mul(3);
                }
                p1 = p1.saturating_mul(3);
            }
            sum
        }
    }
}

/// Local factor of the Dirichlet series at one prime of norm N:
/// 1 + w * sum over (alpha, beta, mu) != 0 with min(alpha, beta) = 0 of
/// lambda(p^(3alpha+mu)) lambda(p^(3beta+mu)) N^(-(3alpha+3beta+2mu) sigma).
fn series_local(norm: f64, sigma: f64, y: f64, case: CaseKind) -> Complex64 {
    let x = norm.powf(-sigma);
    // A(k) = lambda(p^k) x^k until it stays negligible
    let u = lambda_u(norm, y, case);
    let mut a: Vec<Complex64> = Vec::new();
    let (mut g_prev, mut g_cur) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    let mut xk = 1.0;
    let mut small = 0;
    for k in 0..4000usize {
        let lam = g_cur;
        let t = lam * xk;
        a.push(t);
        small = if t.norm() < 1e-22 { small + 1 } else { 0 };
        if small >= 6 {
            break;
        }
        let kf = k as f64;
        let next = match case {
            CaseKind::Log => g_cur * (u + kf) / (kf + 1.0),
            CaseKind::LogDeriv => {
                if k == 0 {
                    u
                } else {
                    ((u + 2.0 * kf) * g_cur - (kf - 1.0) * g_prev) / (kf + 1.0)
                }
            }
        };
        g_prev = g_cur;
        g_cur = next;
        xk *= x;
    }
    let k_max = a.len();
    // tails[k] = sum_{alpha >= 0} A(k + 3 alpha)
    let mut tails = vec![Complex64::new(0.0, 0.0); k_max + 3];
    for k in (0..k_max).rev() {
        tails[k] = a[k] + tails[k + 3];
    }
    // for fixed mu: sum_{min(alpha,beta)=0} A(3alpha+mu) A(3beta+mu)
    //   = 2 A(mu) tails[mu] - A(mu)^2
    let mut total = Complex64::new(0.0, 0.0);
    for mu in 0..k_max {
        total += 2.0 * a[mu] * tails[mu] - a[mu] * a[mu];
    }
    let w = norm / (norm + 1.0);
    // total includes the empty triple (= 1)
    Complex64::new(1.0, 0.0) + (total - 1.0) * w
}

/// M~_sigma(y) from its Dirichlet series.
pub fn dirichlet_m(sigma: f64, y: f64, case: CaseKind, truncation: Truncation) -> Complex64 {
    assert!(sigma > 0.5, "need sigma > 1/2");
    match truncation {
        Truncation::PrimeSupport(p) => {
            let mut acc = ramified_double(sigma, y, case, None);
            for (n, mult) in norm_groups(p) {
                let f = series_local(n as f64, sigma, y, case);
                acc *= if mult == 2 { f * f } else { f };
            }
            acc
        }
        Truncation::TermNorm(t) => {
            let ram = ramified_double(sigma, y, case, Some(t));
            let ideals: Vec<(u64, u32)> = norm_groups(modarith::isqrt(t).max(1))
                .into_iter()
                .flat_map(|(n, mult)| std::iter::repeat_n(n, mult as usize))
                .map(|n| (n, 0))
                .collect();
            let norms: Vec<u64> = ideals.iter().map(|&(n, _)| n).collect();
            let mut lam_cache: Vec<Vec<Complex64>> = Vec::with_capacity(norms.len());
            for &n in &norms {
                let mut kmax = 0;
                let mut v = 1u64;
                while let Some(nv) = v.checked_mul(n) {
                    if nv > t {
                        break;
                    }
                    v = nv;
                    kmax += 1;
                }
                // exponents 3alpha+mu <= kmax + 1 suffice since the other factor has N^mu >= 1
                lam_cache.push(lambda_sequence(n as f64, y, case, kmax + 2));
            }
            let mut sum = Complex64::new(0.0, 0.0);
            term_norm_dfs(&norms, &lam_cache, sigma, t, 0, 1, Complex64::new(1.0, 0.0), &mut sum);
            ram * sum
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn term_norm_dfs(
    norms: &[u64],
    lam: &[Vec<Complex64>],
    sigma: f64,
    t: u64,
    start: usize,
    nprod: u64,
    coeff: Complex64,
    sum: &mut Complex64,
) {
    *sum += coeff * (nprod as f64).powf(-sigma);
    for i in start..norms.len() {
        let n = norms[i];
        let Some(n2) = nprod.checked_mul(n * n) else { break };
        if n2 > t {
            break;
        }
        let w = n as f64 / (n as f64 + 1.0);
        let l = &lam[i];
        let get = |k: usize| l.get(k).copied();
        // enumerate (alpha, beta, mu) with min(alpha, beta) = 0, not all zero
        let mut mu = 0u32;
        loop {
            let base_e = 2 * mu;
            let Some(pm) = n.checked_pow(base_e) else { break };
            if nprod.checked_mul(pm).is_none_or(|v| v > t) {
                break;
            }
            let mut k = 0u32;
            loop {
                // (alpha, beta) = (k, 0) and, for k > 0, (0, k)
                let e = base_e + 3 * k;
                let Some(pe) = n.checked_pow(e) else { break };
                let Some(np) = nprod.checked_mul(pe) else { break };
                if np > t {
                    break;
                }
                if e > 0 {
                    let (ia, ib) = ((3 * k + mu) as usize, mu as usize);
                    if let (Some(la), Some(lb)) = (get(ia), get(ib)) {
                        let c = la * lb * w;
                        let pairs = if k == 0 { 1.0 } else { 2.0 };
                        // (k,0) and (0,k) give la*lb and lb*la: identical products
                        term_norm_dfs(norms, lam, sigma, t, i + 1, np, coeff * c * pairs, sum);
                    }
                }
                k += 1;
            }
            mu += 1;
        }
    }
}

/// |M~| on a grid with a fitted decay exponent.
#[derive(Clone, Debug)]
pub struct DecayReport {
    pub y: Vec<f64>,
    pub log_abs: Vec<f64>,
    /// kappa in |M~| ~ exp(-C y^kappa)
    pub kappa: f64,
    pub c: f64,
    /// false if |M~| is not eventually decreasing on the grid
    pub eventually_decreasing: bool,
}

/// Fits log(-log |M~(y)|) = log C + kappa log y on the grid; the tail test
/// compares block maxima over the upper half of the grid.
pub fn decay_check(cf: &CharFn, y_grid: &[f64]) -> DecayReport {
    let logs: Vec<f64> = y_grid.iter().map(|&y| cf.log_abs(y)).collect();
    let pts: Vec<(f64, f64)> = y_grid
        .iter()
        .zip(&logs)
        .filter(|&(&y, &l)| y > 0.0 && l < 0.0)
        .map(|(&y, &l)| (y.ln(), (-l).ln()))
        .collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x, sy + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    let kappa = sxy / sxx;
    let c = (my - kappa * mx).exp();
    let half = logs.len() / 2;
    let blocks = 4usize;
    let tail = &logs[half..];
    let size = tail.len().div_ceil(blocks).max(1);
    let maxima: Vec<f64> = tail
        .chunks(size)
        .map(|ch| ch.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let eventually_decreasing = maxima.windows(2).all(|w| w[1] <= w[0]);
    DecayReport {
        y: y_grid.to_vec(),
        log_abs: logs,
        kappa,
        c,
        eventually_decreasing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eisenstein::enumerate_primes;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn g_and_h_examples() {
        assert_eq!(coeff_g(0, c(0.3, 0.2)), c(1.0, 0.0));
        assert_eq!(coeff_g(1, c(0.3, 0.2)), c(0.3, 0.2));
        assert_eq!(coeff_h(0, c(0.3, 0.2)), c(1.0, 0.0));
        let u = c(0.7, -1.1);
        assert!((coeff_h(2, u) - u * (u + 1.0) / 2.0).norm() < 1e-15);
        for r in 0..40 {
            let u = c(0.4, -2.5);
            let g = g_sequence(u, 41);
            let h = h_sequence(u, 41);
            assert!((g[r] - coeff_g(r as u32, u)).norm() <= 1e-12 * g[r].norm().max(1.0));
            assert!((h[r] - coeff_h(r as u32, u)).norm() <= 1e-12 * h[r].norm().max(1.0));
        }
    }

    #[test]
    fn atom_examples() {
        let ram = PrimeIdealRec::ramified();
        let a = atom(&ram, AtomSpec::real(1.0, CaseKind::Log, 0));
        assert!((a - 2.0 * (2.0f64 / 3.0).ln()).abs() < 1e-15);
        let p7 = enumerate_primes(7)[2];
        for case in [CaseKind::Log, CaseKind::LogDeriv] {
            let a1 = atom(&p7, AtomSpec::real(1.3, case, 1));
            let a2 = atom(&p7, AtomSpec::real(1.3, case, 2));
            assert!((a1 - a2).abs() < 1e-15);
        }
        // j = 0, N = 7, sigma = 2: 2 log 7 / (49 - 1)
        let a = atom(&p7, AtomSpec::real(2.0, CaseKind::LogDeriv, 0));
        assert!((a - 2.0 * 7f64.ln() / 48.0).abs() < 1e-15);
    }

    #[test]
    fn local_factor_two_paths() {
        for p in enumerate_primes(200) {
            for s in [c(0.75, 0.0), c(1.0, 0.0), c(1.2, 3.0)] {
                for case in [CaseKind::Log, CaseKind::LogDeriv] {
                    let law = LocalLaw::new(&p, s, case);
                    let total: f64 = law.atoms.iter().map(|a| a.1).sum();
                    assert!((total - 1.0).abs() < 1e-12);
                    for y in [-7.0, 0.0, 0.5, 3.0, 40.0] {
                        let lf = local_factor(&p, s, y, case);
                        assert!((lf - law.char_fn(y)).norm() < 1e-14);
                        assert!(lf.norm() <= 1.0 + 1e-15);
                    }
                    assert!((local_factor(&p, s, 0.0, case) - 1.0).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn product_matches_local_factors() {
        let primes = enumerate_primes(500);
        for case in [CaseKind::Log, CaseKind::LogDeriv] {
            for s in [c(1.0, 0.0), c(0.8, 2.0)] {
                let cf = CharFn::new(s, case, 500);
                for y in [0.0, 0.7, -4.0] {
                    let direct: Complex64 = primes.iter().map(|p| local_factor(p, s, y, case)).product();
                    assert!((cf.value(y) - direct).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn char_fn_symmetry() {
        let cf = CharFn::real(1.0, CaseKind::Log, 10_000);
        assert!((cf.value(0.0) - 1.0).norm() < 1e-12);
        for y in [0.3, 2.0, 11.0] {
            assert!((cf.value(-y) - cf.value(y).conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn dirichlet_trivial_cases() {
        for case in [CaseKind::Log, CaseKind::LogDeriv] {
            for tr in [Truncation::TermNorm(1000), Truncation::PrimeSupport(1000)] {
                assert!((dirichlet_m(1.0, 0.0, case, tr) - 1.0).norm() < 1e-14);
            }
            let only_ram = dirichlet_m(1.0, 2.0, case, Truncation::TermNorm(1));
            assert!((only_ram - 1.0).norm() < 1e-14);
            let ram = dirichlet_m(1.0, 2.0, case, Truncation::TermNorm(3));
            let l1 = lambda_y(&PrimeIdealRec::ramified(), 1, 2.0, case) / 3.0;
            assert!((ram - (1.0 + 2.0 * l1)).norm() < 1e-14);
        }
    }

    #[test]
    fn lambda_at_zero() {
        let p = enumerate_primes(7)[2];
        for case in [CaseKind::Log, CaseKind::LogDeriv] {
            assert_eq!(lambda_y(&p, 0, 0.0, case), c(1.0, 0.0));
            for r in 1..6 {
                assert_eq!(lambda_y(&p, r, 0.0, case), c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn series_local_matches_closed_form() {
        for case in [CaseKind::Log, CaseKind::LogDeriv] {
            for (n, mult) in norm_groups(200) {
                let p = PrimeIdealRec {
                    generator: crate::EisensteinInt::ONE,
                    norm: n,
                    splitting: if mult == 2 { Splitting::Split } else { Splitting::Inert },
                };
                for sigma in [0.75, 1.0, 1.5] {
                    for y in [-5.0, 1.0, 5.0] {
                        let a = series_local(n as f64, sigma, y, case);
                        let b = local_factor(&p, c(sigma, 0.0), y, case);
                        assert!((a - b).norm() < 1e-10, "n={n} sigma={sigma} y={y} {a} {b}");
                    }
                }
            }
        }
    }
}
