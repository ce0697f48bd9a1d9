use crate::error::{Error, Result};
use crate::grid::{BallCover, GridSpec, ScalarField};

use super::step::{step_u, step_v};
use super::{ModelParams, PicardConfig, StepReport};

/// `p = max(N, ⌈m⌉+1) + 1`, strictly above `max{N, m+1}`.
pub fn picard_norm_exponent(dim: usize, m: f64) -> f64 {
    (dim as f64).max(m.ceil() + 1.0) + 1.0
}

/// Per-run state for the local `L^p` distance: unit balls centered on a
/// unit-spaced, cell-aligned lattice.
#[derive(Clone, Debug)]
pub struct PicardWorkspace {
    cover: BallCover,
    p: f64,
}

impl PicardWorkspace {
    pub fn new(grid: &GridSpec, params: &ModelParams) -> Result<Self> {
        Ok(PicardWorkspace {
            cover: BallCover::lattice(grid, 1.0, 1.0)?,
            p: picard_norm_exponent(grid.dim(), params.m()),
        })
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    /// `sup_{x₀} ‖f‖_{L^p(B₁(x₀))}`.
    pub fn norm(&self, f: &ScalarField) -> Result<f64> {
        self.cover.sup_lp(f, self.p)
    }
}

/// One time step as the fixed point of `ũ ↦ step_u(u, step_v(ũ, v))`,
/// iterated from `ũ⁽⁰⁾ = u` until successive iterates agree to `cfg.tol`
/// (relative) in the local `L^p` norm.
pub fn picard_step(
    params: &ModelParams,
    u: &ScalarField,
    v: &ScalarField,
    dt: f64,
    cfg: &PicardConfig,
    ws: &PicardWorkspace,
) -> Result<(ScalarField, ScalarField, StepReport)> {
    cfg.validate()?;
    let mut iterate = u.clone();
    let mut prev_distance: Option<f64> = None;
    let mut contraction: f64 = 0.0;
    let mut above_one = 0usize;
    let mut recent = Vec::new();
    let mut clipped_mass = 0.0;
    let mut min_pre_clip = f64::INFINITY;
    for k in 0..cfg.max_iters {
        let v_next = step_v(&iterate, v, dt)?;
        let (u_next, clip) = step_u(params, u, &v_next, dt, cfg.clip_tolerance)?;
        let diff = u_next.zip_map(&iterate, |a, b| a - b)?;
        let distance = ws.norm(&diff)?;
        let scale = ws.norm(&u_next)?.max(f64::MIN_POSITIVE);
        if let Some(prev) = prev_distance {
            // ratios of roundoff-level distances carry no information
            if prev > 1e3 * f64::EPSILON * scale {
                let factor = distance / prev;
                contraction = contraction.max(factor);
                recent.push(factor);
                if factor >= 1.0 {
                    above_one += 1;
                    if above_one >= 3 {
                        let n = recent.len();
                        return Err(Error::PicardDivergence {
                            factors: recent[n - 3..].to_vec(),
                        });
                    }
                } else {
                    above_one = 0;
                }
            }
        }
        if distance <= cfg.tol * scale {
            clipped_mass += clip.clipped_mass;
            min_pre_clip = min_pre_clip.min(clip.min_pre_clip);
            let report = StepReport {
                t: 0.0,
                dt,
                iterations: k,
                contraction_factor: contraction,
                clipped_mass,
                min_pre_clip,
                u_inf: u_next.max_abs(),
                v_inf: v_next.max_abs(),
                grad_v_inf: crate::grid::max_face_gradient(&v_next),
            };
            return Ok((u_next, v_next, report));
        }
        prev_distance = Some(distance);
        iterate = u_next;
    }
    Err(Error::PicardMaxIters {
        iterations: cfg.max_iters,
        distance: prev_distance.unwrap_or(f64::NAN),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(chi: f64) -> (ModelParams, ScalarField, ScalarField, PicardWorkspace) {
        let grid = GridSpec::periodic(1, 4.0, 64).unwrap();
        let params = ModelParams::new(2.0, 0.01, chi, 1.0, 1.0).unwrap();
        let u = ScalarField::from_fn(grid, |x| 1.0 + 0.5 * (x[0] * 0.8).sin()).unwrap();
        let v = ScalarField::from_fn(grid, |x| 0.5 + 0.4 * (x[0] * 1.6).cos()).unwrap();
        let ws = PicardWorkspace::new(&grid, &params).unwrap();
        (params, u, v, ws)
    }

    #[test]
    fn norm_exponent_exceeds_threshold() {
        assert_eq!(picard_norm_exponent(1, 2.0), 4.0);
        assert_eq!(picard_norm_exponent(3, 1.5), 4.0);
        assert_eq!(picard_norm_exponent(3, 3.0), 5.0);
        for (n, m) in [(1, 1.5), (2, 2.0), (3, 2.5), (3, 1.1)] {
            assert!(picard_norm_exponent(n, m) > (n as f64).max(m + 1.0));
        }
    }

    #[test]
    fn decoupled_without_chemotaxis() {
        let (params, u, v, ws) = setup(0.0);
        let (_, _, report) = picard_step(&params, &u, &v, 0.01, &PicardConfig::default(), &ws).unwrap();
        assert_eq!(report.iterations, 1);
        assert_eq!(report.contraction_factor, 0.0);
    }

    #[test]
    fn zero_density_gives_heat_step() {
        let (params, u, v, ws) = setup(1.0);
        let zero = ScalarField::zeros(*u.grid());
        let (u1, v1, report) = picard_step(&params, &zero, &v, 0.01, &PicardConfig::default(), &ws).unwrap();
        assert_eq!(report.contraction_factor, 0.0);
        assert!(u1.values().iter().all(|&x| x == 0.0));
        let heat = step_v(&zero, &v, 0.01).unwrap();
        assert_eq!(v1, heat);
    }

    #[test]
    fn contraction_shrinks_with_dt() {
        let (params, u, v, ws) = setup(1.0);
        let cfg = PicardConfig {
            tol: 1e-13,
            ..PicardConfig::default()
        };
        let factors: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&dt| {
                picard_step(&params, &u, &v, dt, &cfg, &ws)
                    .unwrap()
                    .2
                    .contraction_factor
            })
            .collect();
        assert!(factors[0] < 1.0, "{factors:?}");
        assert!(factors[1] < factors[0] && factors[2] < factors[1], "{factors:?}");
    }

    #[test]
    fn iteration_cap_reported() {
        let (params, u, v, ws) = setup(1.0);
        let cfg = PicardConfig {
            tol: 1e-300,
            max_iters: 2,
            ..PicardConfig::default()
        };
        assert!(matches!(
            picard_step(&params, &u, &v, 0.01, &cfg, &ws),
            Err(Error::PicardMaxIters { .. })
        ));
    }
}
