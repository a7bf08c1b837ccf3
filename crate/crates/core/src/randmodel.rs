//! Monte Carlo sampler of the random model: a deterministic ramified term plus
//! independent X_p over unramified prime ideals, where X_p = 0 with probability
//! 1/(N+1) and -a_{p,j} with probability N/(3(N+1)) for each j.
//!
//! Sample i is drawn from ChaCha8 keyed by the seed with stream i, so the
//! output does not depend on how samples are sharded across threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charfn::{atom_for_norm, norm_groups, AtomSpec};
use crate::empirics::EmpiricalCdf;
use crate::lfunction::CaseKind;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub sigma: f64,
    pub case: CaseKind,
    pub prime_cutoff: u64,
    pub n_samples: u64,
    pub seed: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("sigma must exceed 1/2")]
    Sigma,
    #[error("n_samples must be at least 1")]
    Samples,
    #[error("prime_cutoff must be at least 7")]
    Cutoff,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.sigma > 0.5) {
            return Err(ModelError::Sigma);
        }
        if self.n_samples < 1 {
            return Err(ModelError::Samples);
        }
        if self.prime_cutoff < 7 {
            return Err(ModelError::Cutoff);
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Law {
    norm: u64,
    mult: u32,
    /// u32 thresholds: u < t[0] -> 0, u < t[1] -> j=0, u < t[2] -> j=1, else j=2
    t: [u32; 3],
    /// values -a_{p,j}
    v: [f64; 3],
    /// [0, -a_0, -a_1, -a_2] indexed by the number of thresholds passed
    table: [f64; 4],
}

/// Per-prime laws for one (sigma, case, cutoff).
#[derive(Clone, Debug)]
pub struct Sampler {
    ram: f64,
    laws: Vec<Law>,
    seed: u64,
}

fn threshold(p: f64) -> u32 {
    (p * 4_294_967_296.0).round().min(u32::MAX as f64) as u32
}

/// Outcome code of one draw: 0, 1, 2 for the atoms j, 3 for the zero value.
#[inline]
fn outcome(u: u32, t: &[u32; 3]) -> u8 {
    if u < t[0] {
        3
    } else if u < t[1] {
        0
    } else if u < t[2] {
        1
    } else {
        2
    }
}

impl Sampler {
    /// No validation, so that cutoffs below 7 (no unramified primes) work.
    pub fn new(sigma: f64, case: CaseKind, prime_cutoff: u64, seed: u64) -> Self {
        let laws = norm_groups(prime_cutoff)
            .into_iter()
            .map(|(n, mult)| {
                let nf = n as f64;
                let p0 = 1.0 / (nf + 1.0);
                let pj = nf / (3.0 * (nf + 1.0));
                let v = [0u8, 1, 2].map(|j| -atom_for_norm(nf, AtomSpec::real(sigma, case, j)));
                Law {
                    norm: n,
                    mult,
                    t: [threshold(p0), threshold(p0 + pj), threshold(p0 + 2.0 * pj)],
                    v,
                    table: [0.0, v[0], v[1], v[2]],
                }
            })
            .collect();
        Self {
            ram: -atom_for_norm(3.0, AtomSpec::real(sigma, case, 0)),
            laws,
            seed,
        }
    }

    pub fn from_config(cfg: &ModelConfig) -> Result<Self, ModelError> {
        cfg.validate()?;
        Ok(Self::new(cfg.sigma, cfg.case, cfg.prime_cutoff, cfg.seed))
    }

    fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    pub fn ramified_term(&self) -> f64 {
        self.ram
    }

    /// Sample number `index`.
    pub fn draw(&self, index: u64) -> f64 {
        let mut buf = Vec::new();
        self.draw_with(index, &mut buf)
    }

    fn n_draws(&self) -> usize {
        self.laws.iter().map(|l| l.mult as usize).sum()
    }

    /// Same as `draw`, reusing `buf` for the uniform variates.
    fn draw_with(&self, index: u64, buf: &mut Vec<u32>) -> f64 {
        let mut rng = self.rng(index);
        buf.resize(self.n_draws(), 0);
        rng.fill(&mut buf[..]);
        let mut acc = self.ram;
        let mut it = buf.iter();
        for law in &self.laws {
            for _ in 0..law.mult {
                let &u = it.next().expect("buffer sized to the draw count");
                let k = (u >= law.t[0]) as usize + (u >= law.t[1]) as usize + (u >= law.t[2]) as usize;
                acc += law.table[k];
            }
        }
        acc
    }

    /// Sample `index` with the outcome codes of the first prime ideal of each
    /// listed norm.
    pub fn draw_traced(&self, index: u64, norms: &[u64]) -> (f64, Vec<u8>) {
        let mut buf = vec![0u32; self.n_draws()];
        self.rng(index).fill(&mut buf[..]);
        let mut it = buf.into_iter();
        let mut acc = self.ram;
        let mut trace = vec![u8::MAX; norms.len()];
        for law in &self.laws {
            for m in 0..law.mult {
                let k = outcome(it.next().expect("buffer sized to the draw count"), &law.t);
                if m == 0 {
                    if let Some(pos) = norms.iter().position(|&n| n == law.norm) {
                        trace[pos] = k;
                    }
                }
                if k < 3 {
                    acc += law.v[k as usize];
                }
            }
        }
        (acc, trace)
    }

    pub fn draws(&self, n: u64) -> Vec<f64> {
        (0..n)
            .into_par_iter()
            .map_init(Vec::new, |buf, i| self.draw_with(i, buf))
            .collect()
    }
}

/// n_samples independent draws of the model sum.
pub fn sample_sum(cfg: &ModelConfig) -> Result<Vec<f64>, ModelError> {
    Ok(Sampler::from_config(cfg)?.draws(cfg.n_samples))
}

pub fn model_cdf(samples: &[f64]) -> EmpiricalCdf {
    assert!(!samples.is_empty(), "model_cdf needs at least one sample");
    EmpiricalCdf::new(samples)
}

/// Empirical characteristic function mean(e^{iyX}) and its standard error.
pub fn empirical_char_fn(samples: &[f64], y: f64) -> (Complex64, f64) {
    let n = samples.len() as f64;
    let mean: Complex64 = samples.iter().map(|&x| Complex64::from_polar(1.0, y * x)).sum::<Complex64>() / n;
    let var = samples
        .iter()
        .map(|&x| (Complex64::from_polar(1.0, y * x) - mean).norm_sqr())
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Sample mean and its standard error.
pub fn mean_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::CharFn;

    #[test]
    fn only_ramified_below_seven() {
        for case in [CaseKind::Log, CaseKind::LogDeriv] {
            let s = Sampler::new(1.0, case, 3, 1);
            let cf = CharFn::real(1.0, case, 7);
            assert_eq!(s.draw(0), cf.ramified_shift());
        }
        let cfg = ModelConfig {
            sigma: 1.0,
            case: CaseKind::Log,
            prime_cutoff: 3,
            n_samples: 1,
            seed: 0,
        };
        assert_eq!(sample_sum(&cfg).unwrap_err(), ModelError::Cutoff);
    }

    #[test]
    fn deterministic() {
        let cfg = ModelConfig {
            sigma: 1.0,
            case: CaseKind::LogDeriv,
            prime_cutoff: 1000,
            n_samples: 50,
            seed: 42,
        };
        let a = sample_sum(&cfg).unwrap();
        assert_eq!(a, sample_sum(&cfg).unwrap());
        let s = Sampler::from_config(&cfg).unwrap();
        assert_eq!(s.draw(17), a[17]);
        assert_eq!(s.draw_traced(17, &[7]).0, a[17]);
        let other = sample_sum(&ModelConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn thresholds_partition() {
        let s = Sampler::new(1.0, CaseKind::Log, 100, 0);
        for law in &s.laws {
            assert!(law.t[0] < law.t[1] && law.t[1] < law.t[2]);
            let n = law.norm as f64;
            let p0 = law.t[0] as f64 / 4_294_967_296.0;
            assert!((p0 - 1.0 / (n + 1.0)).abs() < 1e-9);
            let p2 = 1.0 - law.t[2] as f64 / 4_294_967_296.0;
            assert!((p2 - n / (3.0 * (n + 1.0))).abs() < 1e-9);
        }
        assert_eq!(outcome(0, &s.laws[0].t), 3);
        assert_eq!(outcome(u32::MAX, &s.laws[0].t), 2);
    }

    #[test]
    fn single_sample_cdf() {
        let f = model_cdf(&[1.5]);
        assert_eq!(f.eval(1.49), 0.0);
        assert_eq!(f.eval(1.5), 1.0);
    }
}
