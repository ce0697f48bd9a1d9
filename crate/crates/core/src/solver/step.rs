use crate::error::{Error, Result};
use crate::grid::{divergence, face_gradient, FaceFluxField, GridSpec, ScalarField};

use super::linear::ImplicitOperator;
use super::ModelParams;

/// Negative-undershoot bookkeeping for one `u`-update.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClipStats {
    /// Smallest value before clipping.
    pub min_pre_clip: f64,
    /// `∑ |negative part| h^N` removed by the clip.
    pub clipped_mass: f64,
}

/// Exact flow of `u' = u(a - bu)` over `dt`.
pub fn logistic_flow(u: f64, a: f64, b: f64, dt: f64) -> f64 {
    if u <= 0.0 {
        return u;
    }
    if a > 0.0 {
        let decay = (-a * dt).exp();
        a * u / (b * u + (a - b * u) * decay)
    } else {
        u / (1.0 + b * u * dt)
    }
}

/// Backward Euler for `v_t = Δv - u_frozen v`:
/// solves `(I - dtΔ + dt·u_frozen) v' = v`.
pub fn step_v(u_frozen: &ScalarField, v: &ScalarField, dt: f64) -> Result<ScalarField> {
    u_frozen.grid().check_same(v.grid())?;
    if u_frozen.min() < 0.0 {
        return Err(Error::invalid("frozen u must be nonnegative in the v-step"));
    }
    let grid = v.grid();
    let ones = vec![vec![1.0; grid.len()]; grid.dim()];
    let op = ImplicitOperator::new(grid, dt, &ones, Some(u_frozen.values()));
    op.solve(v)
}

/// Arithmetic face means `(u_i + u_{i+1})/2`, per axis.
fn face_means(u: &ScalarField) -> Vec<Vec<f64>> {
    let grid = u.grid();
    let n = grid.cells();
    let vals = u.values();
    (0..grid.dim())
        .map(|axis| {
            let mut out = vec![0.0; grid.len()];
            grid.for_each_line(axis, |base, stride| {
                for k in 0..n {
                    let i = base + k * stride;
                    let j = if k + 1 < n { i + stride } else { base };
                    out[i] = 0.5 * (vals[i] + vals[j]);
                }
            });
            out
        })
        .collect()
}

/// Donor-cell fluxes `u_upwind · χ∂v` on every face.
fn upwind_flux(grid: &GridSpec, u: &ScalarField, v: &ScalarField, chi: f64) -> Result<FaceFluxField> {
    let n = grid.cells();
    let gv = face_gradient(v);
    let vals = u.values();
    let axes = (0..grid.dim())
        .map(|axis| {
            let g = gv.axis(axis);
            let mut f = vec![0.0; grid.len()];
            grid.for_each_line(axis, |base, stride| {
                for k in 0..n {
                    let i = base + k * stride;
                    let j = if k + 1 < n { i + stride } else { base };
                    let w = chi * g[i];
                    f[i] = if w > 0.0 { w * vals[i] } else { w * vals[j] };
                }
            });
            f
        })
        .collect();
    FaceFluxField::new(*grid, axes)
}

/// One step of the `u`-equation with `v` frozen: explicit donor-cell
/// chemotactic advection, then semi-implicit diffusion with face diffusivity
/// `m(ε+ū)^{m-1}` lagged at the input state, then the exact logistic flow.
///
/// Undershoots down to `-clip_tolerance` are clipped to zero and reported.
pub fn step_u(
    params: &ModelParams,
    u: &ScalarField,
    v_frozen: &ScalarField,
    dt: f64,
    clip_tolerance: f64,
) -> Result<(ScalarField, ClipStats)> {
    u.grid().check_same(v_frozen.grid())?;
    let grid = *u.grid();
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("dt = {dt} must be positive")));
    }
    let chi = params.chi();
    let limit = params.stable_dt(u, v_frozen);
    if dt > limit * (1.0 + 1e-12) {
        let growth = params.a() + params.b() * u.max_abs();
        let which = if growth > 0.0 && (0.5 / growth) <= limit * (1.0 + 1e-12) {
            "logistic"
        } else {
            "advection"
        };
        return Err(Error::Cfl { which, dt, limit });
    }

    let advected = if chi != 0.0 {
        let flux = upwind_flux(&grid, u, v_frozen, chi)?;
        let div = divergence(&flux);
        u.zip_map(&div, |ui, di| ui - dt * di)?
    } else {
        u.clone()
    };

    let diffusivity: Vec<Vec<f64>> = face_means(u)
        .into_iter()
        .map(|axis| axis.into_iter().map(|m| params.diffusivity(m)).collect())
        .collect();
    let op = ImplicitOperator::new(&grid, dt, &diffusivity, None);
    let diffused = op.solve(&advected)?;

    let (a, b) = (params.a(), params.b());
    let mut stats = ClipStats {
        min_pre_clip: f64::INFINITY,
        clipped_mass: 0.0,
    };
    let mut values = diffused.into_values();
    for x in &mut values {
        *x = logistic_flow(*x, a, b, dt);
        stats.min_pre_clip = stats.min_pre_clip.min(*x);
        if *x < 0.0 {
            if *x < -clip_tolerance {
                return Err(Error::Negativity {
                    min: *x,
                    tolerance: clip_tolerance,
                });
            }
            stats.clipped_mass -= *x;
            *x = 0.0;
        }
    }
    stats.clipped_mass *= grid.cell_volume();
    Ok((ScalarField::new(grid, values)?, stats))
}
