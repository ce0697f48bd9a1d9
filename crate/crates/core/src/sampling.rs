//! Random smooth fields for inequality corpora and randomized scenarios.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

/// Sum of random low-frequency cosine modes on the box, clipped at zero and
/// rescaled so that `max = target_max`. Returns zeros if every sample clips.
///
/// `offset` shifts the raw sum before clipping; an offset of 1 or more keeps
/// the field strictly positive.
pub fn band_limited<R: Rng + ?Sized>(
    grid: &GridSpec,
    rng: &mut R,
    max_mode: usize,
    offset: f64,
    target_max: f64,
) -> Result<ScalarField> {
    if max_mode == 0 || !(target_max >= 0.0) {
        return Err(Error::invalid("band_limited needs max_mode ≥ 1 and target_max ≥ 0"));
    }
    let dim = grid.dim();
    let wavenumber = std::f64::consts::PI / grid.half_width();
    let modes: Vec<([f64; 3], f64, f64)> = (0..4 * max_mode)
        .map(|_| {
            let mut k = [0.0; 3];
            for kk in k.iter_mut().take(dim) {
                *kk = rng.gen_range(-(max_mode as i64)..=max_mode as i64) as f64 * wavenumber;
            }
            let amp = rng.gen_range(-1.0..1.0);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            (k, amp, phase)
        })
        .collect();
    let norm = (modes.len() as f64).sqrt();
    let raw = ScalarField::from_fn(*grid, |x| {
        let s: f64 = modes
            .iter()
            .map(|(k, a, ph)| a * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + ph).cos())
            .sum();
        (offset + s / norm).max(0.0)
    })?;
    let top = raw.max();
    if top <= 0.0 {
        return Ok(ScalarField::zeros(*grid));
    }
    Ok(raw.map(|x| x * target_max / top))
}
