//! Fourier inversion of M~_sigma to the density M_sigma and the distribution
//! function F_sigma.
//!
//! M(z) = (1/pi) int_0^Ymax Re(e^{-izy} M~(y)) dy by composite Simpson; the
//! y < 0 half is the complex conjugate.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charfn::CharFn;
use crate::lfunction::CaseKind;

/// Numerical floor for negative density values.
pub const NEG_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadParams {
    pub prime_cutoff: u64,
    /// |M~| required at and beyond Y_max
    pub decay_threshold: f64,
    pub y_start: f64,
    pub y_cap: f64,
    /// allowed change of any M value under step halving
    pub refine_tol: f64,
    /// extra halvings tried before giving up
    pub max_refinements: u32,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self {
            prime_cutoff: 100_000,
            decay_threshold: 1e-8,
            y_start: 50.0,
            y_cap: 1e5,
            refine_tol: 1e-5,
            max_refinements: 3,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensityError {
    #[error("z grid must be nonempty and strictly increasing")]
    BadGrid,
    #[error("sigma must exceed 1/2")]
    BadSigma,
    #[error("|M~| = {abs:e} at y = {y} is above the decay threshold and y hit the cap")]
    NoDecay { y: f64, abs: f64 },
    #[error("Simpson refinement changed the density by {change:e}")]
    NotConverged { change: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityGrid {
    pub sigma: f64,
    pub case: CaseKind,
    pub z_values: Vec<f64>,
    pub m_values: Vec<f64>,
    pub cdf_values: Vec<f64>,
    pub y_max: f64,
    pub y_step: f64,
    /// max |M_h - M_{2h}| at the accepted step
    pub refine_change: f64,
    pub prime_cutoff: u64,
}

/// Smallest Y = y_start * 2^k with |M~| below the threshold on [Y, 2Y].
pub fn find_y_max(cf: &CharFn, quad: &QuadParams) -> Result<f64, DensityError> {
    let mut y = quad.y_start;
    loop {
        let worst = (0..8)
            .map(|k| y * (1.0 + k as f64 / 8.0))
            .map(|t| (t, cf.value(t).norm()))
            .fold((y, 0.0f64), |acc, v| if v.1 > acc.1 { v } else { acc });
        if worst.1 < quad.decay_threshold {
            return Ok(y);
        }
        if 2.0 * y > quad.y_cap {
            return Err(DensityError::NoDecay { y: worst.0, abs: worst.1 });
        }
        y *= 2.0;
    }
}

fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

/// (1/pi) sum_k w_k Re(e^{-i z y_k} v_k) for every z, stepping the phase
/// along runs of the grid.
fn inversion_sums(z: &[f64], ys: &[f64], vals: &[Complex64], weights: &[f64]) -> Vec<f64> {
    const RUN: usize = 64;
    let mut out = vec![0.0; z.len()];
    out.par_chunks_mut(RUN).enumerate().for_each(|(ci, chunk)| {
        let zs = &z[ci * RUN..ci * RUN + chunk.len()];
        for (k, (&y, &v)) in ys.iter().zip(vals).enumerate() {
            let wv = v * weights[k];
            let mut phase = Complex64::from_polar(1.0, -zs[0] * y);
            for (j, o) in chunk.iter_mut().enumerate() {
                if j > 0 {
                    // exact restart per point keeps non-uniform grids correct
                    phase = Complex64::from_polar(1.0, -zs[j] * y);
                }
                *o += (phase * wv).re;
            }
        }
    });
    out.iter_mut().for_each(|m| *m /= std::f64::consts::PI);
    out
}

fn uniform_step(z: &[f64]) -> Option<f64> {
    if z.len() < 2 {
        return None;
    }
    let d = z[1] - z[0];
    let ok = z.windows(2).all(|w| ((w[1] - w[0]) - d).abs() <= 1e-9 * d.abs().max(1e-300) + 1e-12 * w[1].abs());
    ok.then_some(d)
}

/// Same sums with the phase advanced by e^{-i dz y} on a uniform grid,
/// restarted exactly at the start of every run.
fn inversion_sums_uniform(z: &[f64], dz: f64, ys: &[f64], vals: &[Complex64], weights: &[f64]) -> Vec<f64> {
    const RUN: usize = 64;
    let mut out = vec![0.0; z.len()];
    out.par_chunks_mut(RUN).enumerate().for_each(|(ci, chunk)| {
        let z0 = z[ci * RUN];
        for (k, (&y, &v)) in ys.iter().zip(vals).enumerate() {
            let step = Complex64::from_polar(1.0, -dz * y);
            let mut phase = Complex64::from_polar(1.0, -z0 * y) * (v * weights[k]);
            for o in chunk.iter_mut() {
                *o += phase.re;
                phase *= step;
            }
        }
    });
    out.iter_mut().for_each(|m| *m /= std::f64::consts::PI);
    out
}

fn cumulative_trapezoid(z: &[f64], m: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(z.len());
    out.push(0.0);
    for k in 1..z.len() {
        acc += 0.5 * (m[k] + m[k - 1]) * (z[k] - z[k - 1]);
        out.push(acc);
    }
    out
}

/// Inverts a precomputed characteristic function on the given z grid.
pub fn invert_cf(cf: &CharFn, z_grid: &[f64], quad: &QuadParams) -> Result<DensityGrid, DensityError> {
    if z_grid.is_empty() || z_grid.windows(2).any(|w| w[1] <= w[0]) || z_grid.iter().any(|z| !z.is_finite()) {
        return Err(DensityError::BadGrid);
    }
    let y_max = find_y_max(cf, quad)?;
    let zmax = z_grid.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let h0 = if zmax > 0.0 {
        0.5f64.min(std::f64::consts::PI / (8.0 * zmax))
    } else {
        0.5
    };
    // n multiple of 4 so the 2h rule reuses every other node
    let mut n = ((y_max / h0).ceil() as usize).div_ceil(4) * 4;
    let uniform = uniform_step(z_grid);
    let sums = |ys: &[f64], vals: &[Complex64], w: &[f64]| match uniform {
        Some(dz) => inversion_sums_uniform(z_grid, dz, ys, vals, w),
        None => inversion_sums(z_grid, ys, vals, w),
    };
    let mut last_change = f64::INFINITY;
    for _ in 0..=quad.max_refinements {
        let h = y_max / n as f64;
        let ys: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
        let vals: Vec<Complex64> = ys.par_iter().map(|&y| cf.value(y)).collect();
        let fine = sums(&ys, &vals, &simpson_weights(n, h));
        let ys2: Vec<f64> = ys.iter().step_by(2).copied().collect();
        let vals2: Vec<Complex64> = vals.iter().step_by(2).copied().collect();
        let coarse = sums(&ys2, &vals2, &simpson_weights(n / 2, 2.0 * h));
        let change = fine.iter().zip(&coarse).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        last_change = change;
        if change <= quad.refine_tol {
            let cdf = cumulative_trapezoid(z_grid, &fine).into_iter().map(|c| c.clamp(0.0, 1.0)).collect();
            return Ok(DensityGrid {
                sigma: cf.s.re,
                case: cf.case,
                z_values: z_grid.to_vec(),
                m_values: fine,
                cdf_values: cdf,
                y_max,
                y_step: h,
                refine_change: change,
                prime_cutoff: cf.prime_cutoff,
            });
        }
        log::debug!("refining Simpson step {h}: change {change:e}");
        n *= 2;
    }
    Err(DensityError::NotConverged { change: last_change })
}

/// M_sigma and F_sigma on `z_grid`.
pub fn invert(sigma: f64, case: CaseKind, z_grid: &[f64], quad: &QuadParams) -> Result<DensityGrid, DensityError> {
    if !(sigma > 0.5) {
        return Err(DensityError::BadSigma);
    }
    invert_cf(&CharFn::real(sigma, case, quad.prime_cutoff), z_grid, quad)
}

/// Uniform grid from `lo` to `hi` (inclusive, up to rounding).
pub fn linspace_step(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

/// [-8, 8] step 0.01 at sigma = 1; mean +/- 12 s.d. with step
/// min(0.01, pi / Y_max) otherwise.
pub fn default_z_grid(cf: &CharFn, quad: &QuadParams) -> Result<Vec<f64>, DensityError> {
    if cf.s.re == 1.0 {
        return Ok(linspace_step(-8.0, 8.0, 0.01));
    }
    let y_max = find_y_max(cf, quad)?;
    let (m, sd) = (cf.mean(), cf.variance().sqrt());
    let step = 0.01f64.min(std::f64::consts::PI / y_max);
    Ok(linspace_step(m - 12.0 * sd, m + 12.0 * sd, step))
}

/// Inverts on the default grid, widening it by half its width on each side
/// while more than 1e-3 of the mass lies outside.
pub fn invert_auto(sigma: f64, case: CaseKind, quad: &QuadParams) -> Result<DensityGrid, DensityError> {
    if !(sigma > 0.5) {
        return Err(DensityError::BadSigma);
    }
    let cf = CharFn::real(sigma, case, quad.prime_cutoff);
    let mut z = default_z_grid(&cf, quad)?;
    for _ in 0..4 {
        let g = invert_cf(&cf, &z, quad)?;
        let mass = trapezoid_mass(&g);
        if (1.0 - mass).abs() <= 1e-3 {
            return Ok(g);
        }
        let (lo, hi) = (z[0], z[z.len() - 1]);
        let step = z[1] - z[0];
        let w = hi - lo;
        log::info!("density mass {mass} on [{lo}, {hi}], widening");
        z = linspace_step(lo - w / 2.0, hi + w / 2.0, step);
    }
    invert_cf(&cf, &z, quad)
}

pub fn trapezoid_mass(g: &DensityGrid) -> f64 {
    *cumulative_trapezoid(&g.z_values, &g.m_values).last().unwrap_or(&0.0)
}

/// int z M(z) dz by trapezoid.
pub fn grid_mean(g: &DensityGrid) -> f64 {
    let zm: Vec<f64> = g.z_values.iter().zip(&g.m_values).map(|(z, m)| z * m).collect();
    *cumulative_trapezoid(&g.z_values, &zm).last().unwrap_or(&0.0)
}

/// -i M~'(0) by a central difference.
pub fn mean_from_cf(cf: &CharFn, h: f64) -> f64 {
    let d = (cf.value(h) - cf.value(-h)) / (2.0 * h);
    (d * Complex64::new(0.0, -1.0)).re
}

/// Full complex Simpson quadrature over [-Y, Y] at one point, used to check
/// the conjugate-symmetric shortcut.
pub fn density_point_full(cf: &CharFn, z: f64, y_max: f64, n: usize) -> Complex64 {
    let n = n.div_ceil(2) * 2;
    let h = 2.0 * y_max / n as f64;
    let w = simpson_weights(n, h);
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, wk) in w.iter().enumerate() {
        let y = -y_max + k as f64 * h;
        acc += Complex64::from_polar(1.0, -z * y) * cf.value(y) * *wk;
    }
    acc / (2.0 * std::f64::consts::PI)
}

/// F(z) by linear interpolation; clamped to the end values outside the grid.
pub fn cdf_at(grid: &DensityGrid, z: f64) -> f64 {
    let zs = &grid.z_values;
    let n = zs.len();
    if z <= zs[0] {
        if z < zs[0] {
            log::warn!("cdf_at: z = {z} below grid start {}", zs[0]);
        }
        return grid.cdf_values[0];
    }
    if z >= zs[n - 1] {
        if z > zs[n - 1] {
            log::warn!("cdf_at: z = {z} above grid end {}", zs[n - 1]);
        }
        return grid.cdf_values[n - 1];
    }
    let k = zs.partition_point(|&v| v <= z);
    let (z0, z1) = (zs[k - 1], zs[k]);
    let (f0, f1) = (grid.cdf_values[k - 1], grid.cdf_values[k]);
    f0 + (f1 - f0) * (z - z0) / (z1 - z0)
}

/// Smallest z with F(z) >= q, interpolated.
pub fn quantile(grid: &DensityGrid, q: f64) -> Option<f64> {
    let k = grid.cdf_values.iter().position(|&f| f >= q)?;
    if k == 0 {
        return Some(grid.z_values[0]);
    }
    let (f0, f1) = (grid.cdf_values[k - 1], grid.cdf_values[k]);
    let (z0, z1) = (grid.z_values[k - 1], grid.z_values[k]);
    Some(if f1 > f0 { z0 + (q - f0) / (f1 - f0) * (z1 - z0) } else { z1 })
}
