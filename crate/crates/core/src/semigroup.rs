//! Heat kernel, the semigroup `T(t)u = e^{-t} G(t,·) ∗ u` generated by
//! `Δ - I`, and log-log checks of its `L^p → L^q` decay rates.
//!
//! Convolution runs in frequency space on periodic grids. The kernel is
//! tabulated per axis (summed over periodic images), renormalized to unit
//! discrete mass, and applied one axis at a time; the product of the 1-D
//! kernels is the tabulated N-dimensional Gaussian.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{gradient_magnitude, lp_norm, GridSpec, ScalarField};
use crate::stats::linear_fit;

/// `G(t, x) = (4πt)^{-N/2} e^{-|x|²/4t}`.
pub fn heat_kernel(t: f64, x: &[f64], dim: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("heat kernel needs t > 0, got {t}")));
    }
    let r2: f64 = x.iter().take(dim).map(|c| c * c).sum();
    Ok((4.0 * PI * t).powf(-(dim as f64) / 2.0) * (-r2 / (4.0 * t)).exp())
}

/// Unit-mass periodic heat kernel spectrum for one axis.
fn kernel_spectrum(grid: &GridSpec, t: f64, fft: &Arc<dyn Fft<f64>>) -> Vec<Complex64> {
    let n = grid.cells();
    let h = grid.spacing();
    let period = 2.0 * grid.half_width();
    let images = ((10.0 * (2.0 * t).sqrt()) / period).ceil() as i64 + 1;
    let mut k: Vec<Complex64> = (0..n)
        .map(|j| {
            // offset j·h, wrapped to (-L, L]
            let d = if j <= n / 2 {
                j as f64 * h
            } else {
                (j as f64 - n as f64) * h
            };
            let w: f64 = (-images..=images)
                .map(|m| {
                    let x = d + m as f64 * period;
                    (-x * x / (4.0 * t)).exp()
                })
                .sum();
            Complex64::new(w, 0.0)
        })
        .collect();
    let mass: f64 = k.iter().map(|c| c.re).sum();
    for c in &mut k {
        c.re /= mass;
    }
    fft.process(&mut k);
    k
}

/// `G(t,·) ∗ u` on a periodic grid: the heat flow without the `e^{-t}` factor.
pub fn apply_heat(u: &ScalarField, t: f64) -> Result<ScalarField> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("heat flow needs t > 0, got {t}")));
    }
    let grid = *u.grid();
    if !grid.is_periodic() {
        return Err(Error::invalid("spectral convolution requires a periodic grid"));
    }
    let n = grid.cells();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let spectrum = kernel_spectrum(&grid, t, &forward);
    let mut values = u.values().to_vec();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let scale = 1.0 / n as f64;
    for axis in 0..grid.dim() {
        grid.for_each_line(axis, |base, stride| {
            for (k, c) in line.iter_mut().enumerate() {
                *c = Complex64::new(values[base + k * stride], 0.0);
            }
            forward.process(&mut line);
            for (c, s) in line.iter_mut().zip(&spectrum) {
                *c *= s;
            }
            inverse.process(&mut line);
            for (k, c) in line.iter().enumerate() {
                values[base + k * stride] = c.re * scale;
            }
        });
    }
    ScalarField::new(grid, values)
}

/// `T(t)u = e^{-t} (G(t,·) ∗ u)`.
pub fn apply_semigroup(u: &ScalarField, t: f64) -> Result<ScalarField> {
    let decay = (-t).exp();
    Ok(apply_heat(u, t)?.map(|v| decay * v))
}

/// Exponent of `t` asserted by the decay estimate:
/// `-(1/p - 1/q)N/2`, minus another `½` for the gradient variant.
pub fn expected_exponent(p: f64, q: f64, dim: usize, gradient: bool) -> f64 {
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    let base = -(inv(p) - inv(q)) * dim as f64 / 2.0;
    if gradient {
        base - 0.5
    } else {
        base
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub p: f64,
    pub q: f64,
    pub gradient: bool,
    pub expected_exponent: f64,
    pub fitted_exponent: f64,
    /// `max_t R(t) t^{-expected}`: the single constant bounding every ratio.
    pub fitted_constant: f64,
    pub times: Vec<f64>,
    /// `R(t) = max_u ‖T(t)u‖_q / (e^{-t}‖u‖_p)` (or with `∇T(t)u`).
    pub ratios: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Measures the worst-case ratio over the data corpus at each time and fits
/// its power law in `t`. The corpus stands in for the supremum over `u`
/// implicit in the operator norm; a spike realizes it for `p = 1`, Fourier
/// modes for `p = q = 2`.
pub fn verify_decay_estimates(
    corpus: &[ScalarField],
    p: f64,
    q: f64,
    gradient: bool,
    times: &[f64],
    tolerance: f64,
) -> Result<DecayReport> {
    if !(p >= 1.0) || !(p <= q) {
        return Err(Error::invalid(format!("need 1 ≤ p ≤ q ≤ ∞, got p = {p}, q = {q}")));
    }
    if corpus.is_empty() || times.len() < 2 {
        return Err(Error::invalid("decay check needs data and at least two times"));
    }
    let dim = corpus[0].grid().dim();
    let mut ratios = Vec::with_capacity(times.len());
    for &t in times {
        let mut worst: f64 = 0.0;
        for u in corpus {
            let norm_in = lp_norm(u, p, None)?;
            if norm_in == 0.0 {
                continue;
            }
            let evolved = apply_semigroup(u, t)?;
            let out = if gradient {
                lp_norm(&gradient_magnitude(&evolved), q, None)?
            } else {
                lp_norm(&evolved, q, None)?
            };
            worst = worst.max(out / ((-t).exp() * norm_in));
        }
        ratios.push(worst);
    }
    let expected = expected_exponent(p, q, dim, gradient);
    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    let fitted_constant = times
        .iter()
        .zip(&ratios)
        .map(|(t, r)| r * t.powf(-expected))
        .fold(0.0, f64::max);
    Ok(DecayReport {
        p,
        q,
        gradient,
        expected_exponent: expected,
        fitted_exponent: fit.slope,
        fitted_constant,
        times: times.to_vec(),
        ratios,
        tolerance,
        pass: (fit.slope - expected).abs() <= tolerance,
    })
}

/// Geometric time grid with `count` points on `[t0, t1]`.
pub fn log_times(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    let (a, b) = (t0.ln(), t1.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Unit-mass single-cell spike at the cell nearest the origin.
pub fn spike(grid: &GridSpec) -> ScalarField {
    let mut values = vec![0.0; grid.len()];
    let mid = grid.cells() / 2;
    let idx = (0..grid.dim()).fold(0, |acc, axis| acc + mid * grid.stride(axis));
    values[idx] = 1.0 / grid.cell_volume();
    ScalarField::from_raw(*grid, values)
}

/// Cosine modes `cos(πk x₁/L)` for each listed wavenumber index.
pub fn fourier_modes(grid: &GridSpec, indices: &[usize]) -> Result<Vec<ScalarField>> {
    let l = grid.half_width();
    indices
        .iter()
        .map(|&k| ScalarField::from_fn(*grid, |x| (PI * k as f64 * x[0] / l).cos()))
        .collect()
}
