//! Arithmetic side: the family c up to Y, empirical distribution functions of
//! the L-values, KS distances, local frequencies and counting asymptotics.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cubic_symbol::{chi_c, CubeRoot};
use crate::density::{cdf_at, DensityGrid};
use crate::eisenstein::{factor, for_each_modulus, ArithError, EisensteinInt, ModulusC, PrimeIdealRec, Splitting};
use crate::lfunction::{CaseKind, EvalParams, Evaluator, LError, LValue};
use crate::modarith;

/// Weighted step distribution function of a finite sample.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalCdf {
    values: Vec<f64>,
    /// cum[k] = total weight of values[..=k], normalised to end at 1
    cum: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(values: &[f64]) -> Self {
        Self::weighted(values.iter().map(|&v| (v, 1.0)).collect())
    }

    /// Pairs (value, weight); weights must be nonnegative with positive sum.
    pub fn weighted(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.retain(|p| p.0.is_finite());
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let mut acc = 0.0;
        let mut cum = Vec::with_capacity(pairs.len());
        for p in &pairs {
            acc += p.1;
            cum.push(if total > 0.0 { acc / total } else { 0.0 });
        }
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        Self {
            values: pairs.into_iter().map(|p| p.0).collect(),
            cum,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// F(z) = weight of values <= z.
    pub fn eval(&self, z: f64) -> f64 {
        let k = self.values.partition_point(|&v| v <= z);
        if k == 0 { 0.0 } else { self.cum[k - 1] }
    }

    fn left_limit(&self, k: usize) -> f64 {
        // first index with this value
        let v = self.values[k];
        let j = self.values.partition_point(|&x| x < v);
        if j == 0 { 0.0 } else { self.cum[j - 1] }
    }

    /// sup |F - G| over the jump points, using both one-sided limits.
    pub fn ks_to<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        let mut d = 0.0f64;
        let mut k = 0;
        while k < self.values.len() {
            let v = self.values[k];
            let gv = g(v);
            let lo = self.left_limit(k);
            let hi = self.eval(v);
            d = d.max((hi - gv).abs()).max((lo - gv).abs());
            k = self.values.partition_point(|&x| x <= v);
        }
        d
    }

    /// Two-sample KS distance.
    pub fn ks_between(&self, other: &EmpiricalCdf) -> f64 {
        let mut d = 0.0f64;
        for v in self.values.iter().chain(&other.values) {
            d = d.max((self.eval(*v) - other.eval(*v)).abs());
        }
        d
    }
}

/// KS distance between sample points and the predicted distribution.
pub fn ks_distance(empirical: &EmpiricalCdf, predicted: &DensityGrid) -> f64 {
    empirical.ks_to(|z| cdf_at_quiet(predicted, z))
}

/// KS distance with the predicted distribution shifted by `shift`.
pub fn ks_distance_shifted(empirical: &EmpiricalCdf, predicted: &DensityGrid, shift: f64) -> f64 {
    empirical.ks_to(|z| cdf_at_quiet(predicted, z - shift))
}

fn cdf_at_quiet(g: &DensityGrid, z: f64) -> f64 {
    let (lo, hi) = (g.z_values[0], g.z_values[g.z_values.len() - 1]);
    if z <= lo {
        g.cdf_values[0]
    } else if z >= hi {
        g.cdf_values[g.cdf_values.len() - 1]
    } else {
        cdf_at(g, z)
    }
}

/// sup |F - G| for two gridded distribution functions, over both grids.
pub fn ks_grids(a: &DensityGrid, b: &DensityGrid) -> f64 {
    a.z_values
        .iter()
        .chain(&b.z_values)
        .map(|&z| (cdf_at_quiet(a, z) - cdf_at_quiet(b, z)).abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EmpiricalSample {
    pub modulus: ModulusC,
    /// None for excluded moduli (|L_c| below the zero threshold)
    pub value: Option<f64>,
    pub err_est: Option<f64>,
}

impl EmpiricalSample {
    pub fn excluded(&self) -> bool {
        self.value.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct SampleSet {
    pub y: u64,
    pub sigma: f64,
    pub case: CaseKind,
    pub samples: Vec<EmpiricalSample>,
}

impl SampleSet {
    pub fn n_excluded(&self) -> usize {
        self.samples.iter().filter(|s| s.excluded()).count()
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().filter_map(|s| s.value).collect()
    }

    /// Unweighted over N(c) <= Y.
    pub fn cdf(&self) -> EmpiricalCdf {
        EmpiricalCdf::new(&self.values())
    }

    /// Weights e^{-N(c)/Y}.
    pub fn weighted_cdf(&self) -> EmpiricalCdf {
        let y = self.y as f64;
        EmpiricalCdf::weighted(
            self.samples
                .iter()
                .filter_map(|s| s.value.map(|v| (v, (-(s.modulus.norm as f64) / y).exp())))
                .collect(),
        )
    }

    /// None when no sample carries an estimate (e.g. loaded from an old cache file).
    pub fn max_err_est(&self) -> Option<f64> {
        self.samples.iter().filter_map(|s| s.err_est).reduce(f64::max)
    }

    /// Applies v -> v + shift to every value.
    pub fn shifted(&self, shift: f64) -> SampleSet {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.value = s.value.map(|v| v + shift);
        }
        out
    }
}

/// CSV cache of sample sets, one file per (Y, sigma, case, params).
#[derive(Clone, Debug)]
pub struct SampleCache {
    pub dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct CacheRow {
    norm: u64,
    a: i64,
    b: i64,
    value: Option<f64>,
    excluded: bool,
    /// absent in files written before the column existed
    #[serde(default)]
    err_est: Option<f64>,
}

impl SampleCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// `$CUBIC_DIST_CACHE` or `./cache`.
    pub fn from_env() -> Self {
        Self::new(std::env::var_os("CUBIC_DIST_CACHE").map(PathBuf::from).unwrap_or_else(|| "cache".into()))
    }

    pub fn key(y: u64, sigma: f64, case: CaseKind, params: &EvalParams) -> String {
        let desc = serde_json::json!({
            "y": y,
            "sigma": sigma,
            "case": case,
            "params": params,
            "format": 1,
        });
        let digest = Sha256::digest(desc.to_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("samples_{key}.csv"))
    }

    pub fn load(&self, key: &str) -> Option<Vec<EmpiricalSample>> {
        let path = self.path(key);
        if !path.exists() {
            return None;
        }
        match read_samples(&path) {
            Ok(s) => Some(s),
            Err(e) => {
                log::warn!("ignoring unreadable cache file {}: {e}", path.display());
                None
            }
        }
    }

    pub fn store(&self, key: &str, samples: &[EmpiricalSample]) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path(key);
        let tmp = path.with_extension("csv.tmp");
        {
            let mut w = csv::Writer::from_path(&tmp)?;
            for s in samples {
                w.serialize(CacheRow {
                    norm: s.modulus.norm,
                    a: s.modulus.value.a,
                    b: s.modulus.value.b,
                    value: s.value,
                    excluded: s.excluded(),
                    err_est: s.err_est,
                })?;
            }
            w.flush()?;
        }
        fs::rename(tmp, path)
    }
}

#[derive(Debug, thiserror::Error)]
enum CacheError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("invalid modulus in cache: {0}")]
    Modulus(#[from] ArithError),
    #[error("inconsistent row for {0}")]
    Row(EisensteinInt),
}

fn read_samples(path: &Path) -> Result<Vec<EmpiricalSample>, CacheError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: CacheRow = row?;
        let modulus = ModulusC::new(EisensteinInt::new(row.a, row.b))?;
        if modulus.norm != row.norm || row.excluded != row.value.is_none() {
            return Err(CacheError::Row(modulus.value));
        }
        out.push(EmpiricalSample {
            modulus,
            value: row.value,
            err_est: row.err_est,
        });
    }
    Ok(out)
}

fn collect_moduli(y: u64) -> Vec<ModulusC> {
    let mut v = Vec::new();
    for_each_modulus(y, |c| v.push(c));
    v.sort();
    v
}

fn to_sample(modulus: ModulusC, r: Result<LValue, LError>) -> EmpiricalSample {
    match r {
        Ok(v) => EmpiricalSample {
            modulus,
            value: Some(v.value),
            err_est: Some(v.err_est),
        },
        Err(e) => {
            if !e.is_exclusion() {
                log::warn!("evaluation failed for {modulus}: {e}");
            }
            EmpiricalSample {
                modulus,
                value: None,
                err_est: None,
            }
        }
    }
}

/// Log and LogDeriv sample sets over N(c) <= Y, from one evaluation pass
/// (or the cache).
pub fn empirical_pair(y: u64, sigma: f64, params: &EvalParams, cache: Option<&SampleCache>) -> Result<[SampleSet; 2], LError> {
    let cases = [CaseKind::Log, CaseKind::LogDeriv];
    let keys = cases.map(|case| SampleCache::key(y, sigma, case, params));
    if let Some(cache) = cache {
        if let (Some(a), Some(b)) = (cache.load(&keys[0]), cache.load(&keys[1])) {
            log::info!("loaded Y = {y}, sigma = {sigma} samples from cache");
            return Ok([0, 1].map(|k| SampleSet {
                y,
                sigma,
                case: cases[k],
                samples: if k == 0 { a.clone() } else { b.clone() },
            }));
        }
    }
    let ev = Evaluator::new(sigma, *params)?;
    let moduli = collect_moduli(y);
    log::info!("evaluating {} moduli up to norm {y} at sigma = {sigma}", moduli.len());
    // chi_{conj c}(a) = conj chi_c(conj a), so L_{conj c}(s) = L_c(s) and only
    // the member with b >= 0 of each conjugate pair is evaluated
    let reps: Vec<ModulusC> = moduli.iter().filter(|c| c.value.b >= 0).copied().collect();
    let values: HashMap<(i64, i64), [Result<LValue, LError>; 2]> = reps
        .par_iter()
        .map(|c| ((c.value.a, c.value.b), ev.eval_both(c)))
        .collect();
    let pairs: Vec<[EmpiricalSample; 2]> = moduli
        .iter()
        .map(|c| {
            let rep = if c.value.b >= 0 { c.value } else { c.value.conj() };
            let [a, b] = values[&(rep.a, rep.b)].clone();
            [to_sample(*c, a), to_sample(*c, b)]
        })
        .collect();
    let sets = [0, 1].map(|k| SampleSet {
        y,
        sigma,
        case: cases[k],
        samples: pairs.iter().map(|p| p[k]).collect(),
    });
    if let Some(cache) = cache {
        for (k, set) in sets.iter().enumerate() {
            if let Err(e) = cache.store(&keys[k], &set.samples) {
                log::warn!("could not write cache: {e}");
            }
        }
    }
    Ok(sets)
}

/// One sample set; see `empirical_pair`.
pub fn empirical_cdf(y: u64, sigma: f64, case: CaseKind, params: &EvalParams, cache: Option<&SampleCache>) -> Result<SampleSet, LError> {
    let key = SampleCache::key(y, sigma, case, params);
    if let Some(samples) = cache.and_then(|c| c.load(&key)) {
        return Ok(SampleSet {
            y,
            sigma,
            case,
            samples,
        });
    }
    let ev = Evaluator::new(sigma, *params)?;
    let samples: Vec<EmpiricalSample> = collect_moduli(y)
        .par_iter()
        .map(|c| to_sample(*c, ev.eval(c, case)))
        .collect();
    if let Some(cache) = cache {
        if let Err(e) = cache.store(&key, &samples) {
            log::warn!("could not write cache: {e}");
        }
    }
    Ok(SampleSet {
        y,
        sigma,
        case,
        samples,
    })
}

/// Divisibility and symbol counts of one prime over a set of moduli.
#[derive(Clone, Debug, Serialize)]
pub struct LocalFrequencies {
    pub prime: PrimeIdealRec,
    pub n_moduli: u64,
    pub divisible: u64,
    /// counts of chi_c(p) = 1, w, w^2
    pub symbol_counts: [u64; 3],
}

impl LocalFrequencies {
    pub fn count(prime: &PrimeIdealRec, moduli: &[ModulusC]) -> Self {
        let mut divisible = 0;
        let mut symbol_counts = [0u64; 3];
        for c in moduli {
            match chi_c(c, prime.generator) {
                CubeRoot::Zero => divisible += 1,
                CubeRoot::Power(k) => symbol_counts[k as usize] += 1,
            }
        }
        Self {
            prime: *prime,
            n_moduli: moduli.len() as u64,
            divisible,
            symbol_counts,
        }
    }

    pub fn divisor_fraction(&self) -> f64 {
        self.divisible as f64 / self.n_moduli as f64
    }

    pub fn expected_divisor(&self) -> f64 {
        1.0 / (self.prime.norm as f64 + 1.0)
    }

    pub fn expected_symbol(&self) -> f64 {
        let n = self.prime.norm as f64;
        n / (3.0 * (n + 1.0))
    }

    fn z(count: u64, n: u64, p: f64) -> f64 {
        let n = n as f64;
        (count as f64 - n * p) / (n * p * (1.0 - p)).sqrt()
    }

    /// Binomial z-score of the divisor count.
    pub fn divisor_z(&self) -> f64 {
        Self::z(self.divisible, self.n_moduli, self.expected_divisor())
    }

    pub fn symbol_z(&self) -> [f64; 3] {
        self.symbol_counts.map(|k| Self::z(k, self.n_moduli, self.expected_symbol()))
    }
}

/// Fraction of c with N(c) <= Y divisible by the prime.
pub fn divisor_probability(prime: &PrimeIdealRec, y: u64) -> f64 {
    let moduli = collect_moduli(y);
    if moduli.is_empty() {
        return 0.0;
    }
    LocalFrequencies::count(prime, &moduli).divisor_fraction()
}

/// res_{s=1} zeta_k = 2 pi h / (w sqrt|d|) = pi / (3 sqrt 3).
pub fn zeta_k_residue() -> f64 {
    std::f64::consts::PI / (3.0 * 3f64.sqrt())
}

/// |H_<9>| = |(O/9)^x| / |image of units|.
pub const RAY_CLASS_ORDER_9: u64 = 9;

/// zeta_k(2) by its Euler product over rational primes up to `cutoff`;
/// the omitted tail is below 2 / (cutoff log cutoff).
pub fn zeta_k2(cutoff: u64) -> f64 {
    let mut log = 0.0;
    for p in modarith::sieve(cutoff) {
        let pf = p as f64;
        log -= match p % 3 {
            0 => (1.0 - pf.powi(-2)).ln(),
            1 => 2.0 * (1.0 - pf.powi(-2)).ln(),
            _ => (1.0 - pf.powi(-4)).ln(),
        };
    }
    log.exp()
}

/// 3 res zeta_k / (4 |H_<9>| zeta_k(2)).
pub fn predicted_slope() -> f64 {
    3.0 * zeta_k_residue() / (4.0 * RAY_CLASS_ORDER_9 as f64 * zeta_k2(10_000_000))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub y: u64,
    pub count: u64,
    /// sum of e^{-N(c)/Y} over the whole family
    pub weighted: f64,
    pub predicted_slope: f64,
}

/// e^{-N/Y} < 1e-17 beyond this multiple of Y.
const WEIGHT_TAIL: u64 = 40;

fn count_with<F: Fn(&ModulusC) -> bool>(y: u64, keep: F) -> (u64, f64) {
    let yf = y as f64;
    let mut count = 0;
    let mut weighted = 0.0;
    for_each_modulus(y.saturating_mul(WEIGHT_TAIL), |c| {
        if keep(&c) {
            if c.norm <= y {
                count += 1;
            }
            weighted += (-(c.norm as f64) / yf).exp();
        }
    });
    (count, weighted)
}

pub fn count_c(y: u64) -> CountReport {
    let (count, weighted) = count_with(y, |_| true);
    CountReport {
        y,
        count,
        weighted,
        predicted_slope: predicted_slope(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestrictedCount {
    pub weighted: f64,
    pub predicted: f64,
    /// prod over p | a of (1 + 1/N(p))^-1
    pub local_factor: f64,
}

/// Weighted count of c coprime to `ideal` against C_a Y.
pub fn restricted_count(ideal: EisensteinInt, y: u64) -> Result<RestrictedCount, ArithError> {
    let f = factor(ideal)?;
    if f.factors.iter().any(|(p, _)| p.splitting == Splitting::Ramified) {
        return Err(ArithError::InvalidModulus(ideal, "ideal must be prime to 3"));
    }
    let gens: Vec<EisensteinInt> = f.factors.iter().map(|(p, _)| p.generator).collect();
    let local_factor: f64 = f.factors.iter().map(|(p, _)| 1.0 / (1.0 + 1.0 / p.norm as f64)).product();
    let (_, weighted) = count_with(y, |c| gens.iter().all(|g| !g.divides(c.value)));
    Ok(RestrictedCount {
        weighted,
        predicted: predicted_slope() * local_factor * y as f64,
        local_factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_cdf() {
        let f = EmpiricalCdf::new(&[3.0, 1.0, 2.0, 2.0]);
        assert_eq!(f.eval(0.5), 0.0);
        assert_eq!(f.eval(1.0), 0.25);
        assert_eq!(f.eval(2.0), 0.75);
        assert_eq!(f.eval(2.5), 0.75);
        assert_eq!(f.eval(3.0), 1.0);
        // sup over jumps of |F - 0.5|: F jumps 0 -> 0.25 -> 0.75 -> 1
        assert!((f.ks_to(|_| 0.5) - 0.5).abs() < 1e-15);
        assert_eq!(f.ks_between(&f), 0.0);
        let single = EmpiricalCdf::new(&[0.3]);
        assert_eq!(single.eval(0.29), 0.0);
        assert_eq!(single.eval(0.3), 1.0);
    }

    #[test]
    fn weighted_cdf_normalised() {
        let f = EmpiricalCdf::weighted(vec![(1.0, 1.0), (2.0, 3.0)]);
        assert!((f.eval(1.0) - 0.25).abs() < 1e-15);
        assert_eq!(f.eval(2.0), 1.0);
    }

    #[test]
    fn zeta_k2_value() {
        // zeta(2) L(2, chi_-3)
        let want = std::f64::consts::PI.powi(2) / 6.0 * 0.781_302_412_896_486;
        assert!((zeta_k2(10_000_000) - want).abs() < 1e-8);
    }

    #[test]
    fn small_counts() {
        assert_eq!(count_c(72).count, 0);
        assert_eq!(count_c(73).count, 2);
        let r = count_c(10_000);
        assert!(r.weighted <= r.count as f64 * std::f64::consts::E);
    }

    #[test]
    fn local_factor_of_two() {
        let r = restricted_count(EisensteinInt::new(2, 0), 1000).unwrap();
        assert!((r.local_factor - 0.8).abs() < 1e-15);
        assert!(restricted_count(EisensteinInt::new(3, 0), 1000).is_err());
        let one = restricted_count(EisensteinInt::ONE, 1000).unwrap();
        assert!((one.weighted - count_c(1000).weighted).abs() < 1e-9);
    }
}
