//! The acceptance pipeline: twelve numbered checks run at quick or full scale,
//! each producing one pass/fail record with its measured quantities.
//!
//! Quick and full differ only in the arithmetic side of check 9, which takes
//! Y = 1e4 (threshold 0.10) in quick mode and Y = 1e6 (threshold 0.05) in full.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::charfn::{coeff_g, coeff_h, decay_check, dirichlet_m, CharFn, Truncation};
use crate::cubic_symbol::{symbol, symbol_prime_oracle, CubeRoot, CubicCharacter};
use crate::density::{grid_mean, invert_auto, mean_from_cf, trapezoid_mass, DensityGrid, QuadParams};
use crate::eisenstein::{enumerate_c, enumerate_primes, factor, gcd, EisensteinInt, Splitting};
use crate::empirics::{count_c, empirical_pair, ks_distance, ks_distance_shifted, restricted_count, LocalFrequencies, SampleCache, SampleSet};
use crate::lfunction::{
    brauer_siegel_offset, gamma_k_reference, log_lc, logderiv_lc, smoothed_value_at, CaseKind, EvalParams,
};
use crate::randmodel::{model_cdf, sample_sum, ModelConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Quick,
    Full,
}

impl Profile {
    /// `CUBIC_DIST_PROFILE=full` selects the full run; anything else is quick.
    pub fn from_env() -> Self {
        match std::env::var("CUBIC_DIST_PROFILE") {
            Ok(v) if v.eq_ignore_ascii_case("full") => Profile::Full,
            _ => Profile::Quick,
        }
    }

    /// Y values of the arithmetic convergence schedule of check 9.
    pub fn y_schedule(self) -> Vec<u64> {
        match self {
            Profile::Quick => vec![1_000, 10_000],
            Profile::Full => vec![1_000, 10_000, 100_000, 1_000_000],
        }
    }

    pub fn arithmetic_threshold(self) -> f64 {
        match self {
            Profile::Quick => 0.10,
            Profile::Full => 0.05,
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Quick => "quick",
            Profile::Full => "full",
        })
    }
}

impl FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quick" => Ok(Profile::Quick),
            "full" => Ok(Profile::Full),
            _ => Err(format!("unknown profile '{s}' (expected quick or full)")),
        }
    }
}

pub const CRITERIA: [(u32, &str); 12] = [
    (1, "symbol oracle equivalence"),
    (2, "reciprocity and supplementary laws"),
    (3, "generating-function identities"),
    (4, "product-series duality"),
    (5, "L-value cross-oracle at sigma = 2"),
    (6, "finite-difference duality"),
    (7, "density normalization and moments"),
    (8, "decay of the characteristic function"),
    (9, "tri-lateral distribution agreement at sigma = 1"),
    (10, "counting asymptotics"),
    (11, "local heuristics"),
    (12, "Brauer-Siegel and Euler-Kronecker distributions"),
];

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    /// failed sub-checks, or the error that stopped the check
    pub failures: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
    pub seconds: f64,
}

impl CriterionResult {
    /// One line: id, PASS/FAIL, name and the failed sub-checks.
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!("criterion {:>2} {status} {} ({:.1} s)", self.id, self.name, self.seconds);
        if !self.failures.is_empty() {
            s.push_str(": ");
            s.push_str(&self.failures.join("; "));
        }
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub version: String,
    pub profile: Profile,
    pub passed: bool,
    pub criteria: Vec<CriterionResult>,
}

/// Collects metrics and sub-check outcomes for one criterion.
#[derive(Default)]
struct Check {
    metrics: BTreeMap<String, f64>,
    failures: Vec<String>,
}

impl Check {
    fn metric(&mut self, name: impl Into<String>, v: f64) {
        self.metrics.insert(name.into(), v);
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    /// Records `value` and requires value <= bound.
    fn at_most(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        let name = name.into();
        self.metric(name.clone(), value);
        self.require(value <= bound, || format!("{name} = {value:.4e} > {bound:.1e}"));
    }

    fn within(&mut self, name: impl Into<String>, value: f64, lo: f64, hi: f64) {
        let name = name.into();
        self.metric(name.clone(), value);
        self.require((lo..=hi).contains(&value), || format!("{name} = {value:.4} outside [{lo}, {hi}]"));
    }
}

const CASES: [CaseKind; 2] = [CaseKind::Log, CaseKind::LogDeriv];
const MC_SAMPLES: u64 = 1_000_000;
const MC_CUTOFF: u64 = 100_000;
const MC_SEED: u64 = 20_240_601;
const TRANSFORM_Y: u64 = 100_000;

/// Shared state across criteria: the sigma = 1 density grids and the
/// arithmetic sample sets are computed once.
pub struct Pipeline {
    pub profile: Profile,
    cache: Option<SampleCache>,
    grids: OnceLock<Result<[DensityGrid; 2], String>>,
    samples: Mutex<BTreeMap<u64, Arc<[SampleSet; 2]>>>,
}

impl Pipeline {
    pub fn new(profile: Profile, cache: Option<SampleCache>) -> Self {
        Self {
            profile,
            cache,
            grids: OnceLock::new(),
            samples: Mutex::new(BTreeMap::new()),
        }
    }

    fn unit_grids(&self) -> Result<&[DensityGrid; 2], String> {
        self.grids
            .get_or_init(|| {
                let q = QuadParams::default();
                let g0 = invert_auto(1.0, CaseKind::Log, &q).map_err(|e| e.to_string())?;
                let g1 = invert_auto(1.0, CaseKind::LogDeriv, &q).map_err(|e| e.to_string())?;
                Ok([g0, g1])
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn arithmetic(&self, y: u64) -> Result<Arc<[SampleSet; 2]>, String> {
        if let Some(s) = self.samples.lock().expect("sample map poisoned").get(&y) {
            return Ok(s.clone());
        }
        let sets = empirical_pair(y, 1.0, &EvalParams::batch(), self.cache.as_ref()).map_err(|e| e.to_string())?;
        let sets = Arc::new(sets);
        self.samples.lock().expect("sample map poisoned").insert(y, sets.clone());
        Ok(sets)
    }

    /// Runs one criterion; panics on an unknown id.
    pub fn run(&self, id: u32) -> CriterionResult {
        let (_, name) = CRITERIA.iter().find(|(k, _)| *k == id).expect("criterion id in 1..=12");
        log::info!("criterion {id}: {name}");
        let start = Instant::now();
        let outcome = match id {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(),
            4 => criterion_4(),
            5 => criterion_5(),
            6 => criterion_6(),
            7 => criterion_7(),
            8 => criterion_8(),
            9 => self.criterion_9(),
            10 => criterion_10(),
            11 => criterion_11(),
            12 => self.criterion_12(),
            _ => unreachable!(),
        };
        let (metrics, failures) = match outcome {
            Ok(c) => (c.metrics, c.failures),
            Err(e) => (BTreeMap::new(), vec![format!("error: {e}")]),
        };
        CriterionResult {
            id,
            name: name.to_string(),
            passed: failures.is_empty(),
            failures,
            metrics,
            seconds: start.elapsed().as_secs_f64(),
        }
    }

    /// Runs every criterion in order, handing each result to `each` as it
    /// completes.
    pub fn run_all(&self, mut each: impl FnMut(&CriterionResult)) -> Report {
        let mut criteria = Vec::new();
        for (id, _) in CRITERIA {
            let r = self.run(id);
            each(&r);
            criteria.push(r);
        }
        Report {
            version: VERSION.to_string(),
            profile: self.profile,
            passed: criteria.iter().all(|r| r.passed),
            criteria,
        }
    }

    fn criterion_9(&self) -> Result<Check, String> {
        let grids = self.unit_grids()?;
        let mut ch = Check::default();
        for (k, case) in CASES.into_iter().enumerate() {
            let tag = case.as_str();
            let cfg = ModelConfig {
                sigma: 1.0,
                case,
                prime_cutoff: MC_CUTOFF,
                n_samples: MC_SAMPLES,
                seed: MC_SEED,
            };
            let mc = sample_sum(&cfg).map_err(|e| e.to_string())?;
            ch.at_most(format!("ks_mc_{tag}"), ks_distance(&model_cdf(&mc), &grids[k]), 0.02);
        }
        let schedule = self.profile.y_schedule();
        let mut ks = [Vec::new(), Vec::new()];
        for &y in &schedule {
            let sets = self.arithmetic(y)?;
            for k in 0..2 {
                let set = &sets[k];
                let v = ks_distance(&set.cdf(), &grids[k]);
                let tag = CASES[k].as_str();
                ch.metric(format!("ks_arith_{tag}_y{y}"), v);
                ch.metric(format!("ks_weighted_{tag}_y{y}"), ks_distance(&set.weighted_cdf(), &grids[k]));
                ch.metric(format!("excluded_{tag}_y{y}"), set.n_excluded() as f64);
                if let Some(e) = set.max_err_est() {
                    ch.metric(format!("max_err_est_{tag}_y{y}"), e);
                }
                ks[k].push(v);
            }
        }
        let top = *schedule.last().expect("nonempty schedule");
        for k in 0..2 {
            let tag = CASES[k].as_str();
            let last = *ks[k].last().expect("nonempty schedule");
            ch.require(last <= self.profile.arithmetic_threshold(), || {
                format!(
                    "ks_arith_{tag}_y{top} = {last:.4} > {}",
                    self.profile.arithmetic_threshold()
                )
            });
            for (i, w) in ks[k].windows(2).enumerate() {
                ch.require(w[1] <= 1.2 * w[0], || {
                    format!("{tag} KS rose from {:.4} (Y = {}) to {:.4} (Y = {})", w[0], schedule[i], w[1], schedule[i + 1])
                });
            }
        }
        Ok(ch)
    }

    fn criterion_12(&self) -> Result<Check, String> {
        let grids = self.unit_grids()?;
        let sets = self.arithmetic(TRANSFORM_Y)?;
        let mut ch = Check::default();
        // E(c) = log L_c(1) - log(4 sqrt 3 pi^2); gamma_{K_c} = (L_c'/L_c)(1) + gamma_k
        let shifts = [-brauer_siegel_offset(), gamma_k_reference()];
        let names = ["brauer_siegel", "euler_kronecker"];
        for k in 0..2 {
            let moved = sets[k].shifted(shifts[k]);
            let ks = ks_distance_shifted(&moved.cdf(), &grids[k], shifts[k]);
            ch.at_most(format!("ks_{}", names[k]), ks, 0.07);
            ch.metric(format!("n_{}", names[k]), (moved.samples.len() - moved.n_excluded()) as f64);
        }
        Ok(ch)
    }
}

fn random_element(rng: &mut ChaCha8Rng, bound: i64) -> EisensteinInt {
    EisensteinInt::new(rng.random_range(-bound..=bound), rng.random_range(-bound..=bound))
}

/// 1 + 3x + 3y w with |x|, |y| <= bound.
fn random_primary(rng: &mut ChaCha8Rng, bound: i64) -> EisensteinInt {
    EisensteinInt::new(1 + 3 * rng.random_range(-bound..=bound), 3 * rng.random_range(-bound..=bound))
}

fn criterion_1() -> Result<Check, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut ch = Check::default();
    let (mut pairs, mut mismatches, mut zeros) = (0u64, 0u64, 0u64);
    for p in enumerate_primes(10_000) {
        if p.splitting == Splitting::Ramified {
            continue;
        }
        let pi = p.generator;
        for k in 0..100 {
            let mut alpha = random_element(&mut rng, 1_000_000);
            if k % 10 == 0 {
                alpha = alpha * pi;
            }
            let fast = symbol(alpha, pi).map_err(|e| e.to_string())?;
            let slow = symbol_prime_oracle(alpha, pi).map_err(|e| e.to_string())?;
            pairs += 1;
            zeros += (slow == CubeRoot::Zero) as u64;
            mismatches += (fast != slow) as u64;
        }
    }
    ch.metric("pairs", pairs as f64);
    ch.metric("zero_values", zeros as f64);
    ch.at_most("mismatches", mismatches as f64, 0.0);
    ch.at_most("seconds", start.elapsed().as_secs_f64(), 60.0);
    Ok(ch)
}

/// Symbol with a composite denominator from the factorization and the oracle.
fn symbol_by_factoring(alpha: EisensteinInt, lambda: EisensteinInt) -> Result<CubeRoot, String> {
    let f = factor(lambda).map_err(|e| e.to_string())?;
    let mut acc = CubeRoot::ONE;
    for (p, e) in f.factors {
        acc = acc * symbol_prime_oracle(alpha, p.generator).map_err(|e| e.to_string())?.pow(e);
    }
    Ok(acc)
}

fn criterion_2() -> Result<Check, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut ch = Check::default();
    let (mut flips, mut oracle_mismatch) = (0u64, 0u64);
    let mut pairs = 0;
    while pairs < 1000 {
        let alpha = random_primary(&mut rng, 300);
        let lambda = random_primary(&mut rng, 300);
        if alpha == lambda || gcd(alpha, lambda).norm() != 1 {
            continue;
        }
        pairs += 1;
        let ab = symbol(alpha, lambda).map_err(|e| e.to_string())?;
        let ba = symbol(lambda, alpha).map_err(|e| e.to_string())?;
        flips += (ab != ba) as u64;
        oracle_mismatch += (ab != symbol_by_factoring(alpha, lambda)?) as u64;
        oracle_mismatch += (ba != symbol_by_factoring(lambda, alpha)?) as u64;
    }
    ch.at_most("reciprocity_failures", flips as f64, 0.0);
    ch.at_most("composite_oracle_mismatches", oracle_mismatch as f64, 0.0);

    let primes: Vec<_> = enumerate_primes(1_000_000)
        .into_iter()
        .filter(|p| p.splitting != Splitting::Ramified)
        .collect();
    let one_minus_zeta = EisensteinInt::LAMBDA;
    let mut supp = 0u64;
    for _ in 0..1000 {
        let lam = primes[rng.random_range(0..primes.len())].generator;
        // lam = 1 + 3a + 3b w
        let (a, b) = ((lam.a - 1) / 3, lam.b / 3);
        let want_zeta = CubeRoot::from_exponent(-(a + b));
        let want_lambda = CubeRoot::from_exponent(a);
        for (num, want) in [(EisensteinInt::ZETA, want_zeta), (one_minus_zeta, want_lambda)] {
            let oracle = symbol_prime_oracle(num, lam).map_err(|e| e.to_string())?;
            let fast = symbol(num, lam).map_err(|e| e.to_string())?;
            supp += (oracle != want) as u64 + (fast != want) as u64;
        }
    }
    ch.at_most("supplementary_mismatches", supp as f64, 0.0);
    Ok(ch)
}

/// Taylor coefficients of exp(g) from those of g: n f_n = sum_k k g_k f_{n-k}.
fn exp_series(g: &[Complex64]) -> Vec<Complex64> {
    let mut f = vec![Complex64::new(0.0, 0.0); g.len()];
    f[0] = g[0].exp();
    for n in 1..g.len() {
        let s: Complex64 = (1..=n).map(|k| g[k] * k as f64 * f[n - k]).sum();
        f[n] = s / n as f64;
    }
    f
}

fn criterion_3() -> Result<Check, String> {
    const R: usize = 30;
    let mut ch = Check::default();
    let c = Complex64::new;
    // The truncation tail of sum G_r(u) t^r is about |u| |t|^31 / (1 - |t|), so
    // the closed-form comparison at |t| = 0.5 uses |u| <= 0.05.
    let small_u = [c(0.0, 0.05), c(0.0, -0.05), c(0.05, 0.0), c(-0.03, 0.04)];
    let mut closed = 0.0f64;
    for &u in &small_u {
        for radius in [0.1, 0.3, 0.5] {
            for k in 0..16 {
                let t = Complex64::from_polar(radius, k as f64 * std::f64::consts::PI / 8.0);
                let mut tr = c(1.0, 0.0);
                let (mut sg, mut sh) = (c(0.0, 0.0), c(0.0, 0.0));
                for r in 0..=R {
                    sg += coeff_g(r as u32, u) * tr;
                    sh += coeff_h(r as u32, u) * tr;
                    tr *= t;
                }
                closed = closed.max((sg - (u * t / (1.0 - t)).exp()).norm());
                closed = closed.max((sh - (-u * (1.0 - t).ln()).exp()).norm());
            }
        }
    }
    ch.at_most("closed_form_error", closed, 1e-10);
    // coefficient-level identity for larger u against a power-series oracle
    let big_u = [c(0.0, 2.0), c(0.0, -5.0 * 7f64.ln()), c(1.5, -0.5), c(0.0, 20.0)];
    let mut coeff = 0.0f64;
    for &u in &big_u {
        let mut g = vec![c(0.0, 0.0); R + 1];
        let mut h = vec![c(0.0, 0.0); R + 1];
        for k in 1..=R {
            g[k] = u;
            h[k] = u / k as f64;
        }
        let (fg, fh) = (exp_series(&g), exp_series(&h));
        for r in 0..=R {
            let eg = (coeff_g(r as u32, u) - fg[r]).norm() / fg[r].norm().max(1.0);
            let eh = (coeff_h(r as u32, u) - fh[r]).norm() / fh[r].norm().max(1.0);
            coeff = coeff.max(eg).max(eh);
        }
    }
    ch.at_most("coefficient_error", coeff, 1e-10);
    Ok(ch)
}

fn criterion_4() -> Result<Check, String> {
    const CUTOFF: u64 = 1_000_000;
    let mut ch = Check::default();
    let mut worst = 0.0f64;
    for case in CASES {
        for sigma in [0.75, 1.0, 1.5] {
            let cf = CharFn::real(sigma, case, CUTOFF);
            for y in [0.0, 1.0, -1.0, 5.0, -5.0] {
                let d = (cf.value(y) - dirichlet_m(sigma, y, case, Truncation::PrimeSupport(CUTOFF))).norm();
                worst = worst.max(d);
            }
        }
    }
    ch.at_most("max_difference", worst, 1e-4);
    Ok(ch)
}

fn smallest_moduli(n: usize) -> Vec<crate::eisenstein::ModulusC> {
    let mut y = 1000;
    loop {
        let c = enumerate_c(y);
        if c.len() >= n {
            return c.into_iter().take(n).collect();
        }
        y *= 2;
    }
}

fn criterion_5() -> Result<Check, String> {
    let p = EvalParams::default();
    let mut ch = Check::default();
    let mut worst = 0.0f64;
    for c in smallest_moduli(50) {
        let eu = log_lc(&c, 2.0, &p).map_err(|e| e.to_string())?;
        let chi = CubicCharacter::new(&c);
        let sm = smoothed_value_at(&chi, 2.0, CaseKind::Log, p.smoothing_x(&c, 2.0), u64::MAX).map_err(|e| e.to_string())?;
        worst = worst.max((eu.value - sm.value).abs());
    }
    ch.at_most("max_difference", worst, 1e-6);
    Ok(ch)
}

fn criterion_6() -> Result<Check, String> {
    let p = EvalParams::default();
    let h = 1e-4;
    let mut ch = Check::default();
    let mut worst = 0.0f64;
    for c in smallest_moduli(50) {
        let d = logderiv_lc(&c, 2.0, &p).map_err(|e| e.to_string())?.value;
        let up = log_lc(&c, 2.0 + h, &p).map_err(|e| e.to_string())?.value;
        let down = log_lc(&c, 2.0 - h, &p).map_err(|e| e.to_string())?.value;
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((fd - d).abs() / d.abs());
    }
    ch.at_most("max_relative_error", worst, 1e-3);
    Ok(ch)
}

fn criterion_7() -> Result<Check, String> {
    let q = QuadParams::default();
    let mut ch = Check::default();
    for sigma in [1.0, 2.0] {
        for case in CASES {
            let tag = format!("{}_s{sigma}", case.as_str());
            let g = invert_auto(sigma, case, &q).map_err(|e| e.to_string())?;
            let cf = CharFn::real(sigma, case, q.prime_cutoff);
            ch.at_most(format!("mass_error_{tag}"), (trapezoid_mass(&g) - 1.0).abs(), 1e-3);
            let m = grid_mean(&g);
            ch.at_most(format!("mean_error_{tag}"), (m - mean_from_cf(&cf, 1e-4)).abs(), 1e-3);
            ch.metric(format!("mean_{tag}"), m);
        }
    }
    Ok(ch)
}

fn criterion_8() -> Result<Check, String> {
    let mut ch = Check::default();
    let grid: Vec<f64> = (200..=500).map(f64::from).collect();
    for (case, lo) in [(CaseKind::Log, 0.6), (CaseKind::LogDeriv, 0.7)] {
        let tag = case.as_str();
        let d = decay_check(&CharFn::real(1.0, case, MC_CUTOFF), &grid);
        ch.within(format!("kappa_{tag}"), d.kappa, lo, 1.3);
        ch.metric(format!("c_{tag}"), d.c);
        ch.require(d.eventually_decreasing, || format!("|M~| not decreasing on [200, 500] ({tag})"));
    }
    Ok(ch)
}

fn criterion_10() -> Result<Check, String> {
    const Y: u64 = 10_000_000;
    let mut ch = Check::default();
    let r = count_c(Y);
    let yf = Y as f64;
    ch.metric("predicted_slope", r.predicted_slope);
    ch.metric("count", r.count as f64);
    ch.at_most("count_ratio_error", (r.count as f64 / yf / r.predicted_slope - 1.0).abs(), 0.02);
    ch.at_most("weighted_ratio_error", (r.weighted / yf / r.predicted_slope - 1.0).abs(), 0.02);
    let two = restricted_count(EisensteinInt::new(2, 0), Y).map_err(|e| e.to_string())?;
    ch.at_most("restricted_ratio_error", (two.weighted / two.predicted - 1.0).abs(), 0.02);
    Ok(ch)
}

fn criterion_11() -> Result<Check, String> {
    let moduli = enumerate_c(1_000_000);
    let mut ch = Check::default();
    ch.metric("n_moduli", moduli.len() as f64);
    for p in enumerate_primes(13).into_iter().filter(|p| [4, 7, 13].contains(&p.norm)) {
        let f = LocalFrequencies::count(&p, &moduli);
        let tag = format!("{}_{}", p.generator.a, p.generator.b);
        ch.within(format!("divisor_z_{tag}"), f.divisor_z(), -3.0, 3.0);
        for (j, z) in f.symbol_z().into_iter().enumerate() {
            ch.within(format!("symbol_z{j}_{tag}"), z, -3.0, 3.0);
        }
    }
    Ok(ch)
}

/// Runs all criteria with a fresh pipeline.
pub fn reproduce(profile: Profile, cache: Option<SampleCache>, each: impl FnMut(&CriterionResult)) -> Report {
    Pipeline::new(profile, cache).run_all(each)
}
