//! Time integration of
//!
//! ```text
//! u_t = m∇·((ε+u)^{m-1}∇u) - χ∇·(u∇v) + u(a - bu)
//! v_t = Δv - uv
//! ```
//!
//! Each time step is a Picard iteration between a frozen-`u` solve for `v`
//! and a frozen-`v` solve for `u`; see [`picard_step`].

mod driver;
pub mod linear;
mod picard;
mod step;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{max_face_gradient, ScalarField};

pub use driver::{run, NoObserver, Observer, RunControl, RunSummary, Snapshot, TrajectoryRecorder};
pub use picard::{picard_norm_exponent, picard_step, PicardWorkspace};
pub use step::{logistic_flow, step_u, step_v, ClipStats};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelParamsRaw", into = "ModelParamsRaw")]
pub struct ModelParams {
    m: f64,
    eps: f64,
    chi: f64,
    a: f64,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelParamsRaw {
    m: f64,
    eps: f64,
    chi: f64,
    a: f64,
    b: f64,
}

impl TryFrom<ModelParamsRaw> for ModelParams {
    type Error = Error;

    fn try_from(r: ModelParamsRaw) -> Result<Self> {
        ModelParams::new(r.m, r.eps, r.chi, r.a, r.b)
    }
}

impl From<ModelParams> for ModelParamsRaw {
    fn from(p: ModelParams) -> Self {
        ModelParamsRaw {
            m: p.m,
            eps: p.eps,
            chi: p.chi,
            a: p.a,
            b: p.b,
        }
    }
}

impl ModelParams {
    /// `b = 0` is accepted so the pure porous-medium oracle can run; the
    /// localized estimates require `b > 0` and check it themselves.
    pub fn new(m: f64, eps: f64, chi: f64, a: f64, b: f64) -> Result<Self> {
        if !(m > 1.0 && m.is_finite()) {
            return Err(Error::invalid(format!("m = {m} must exceed 1")));
        }
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::invalid(format!("ε = {eps} must lie in [0, 1)")));
        }
        if !chi.is_finite() {
            return Err(Error::invalid("χ must be finite"));
        }
        if !(a >= 0.0 && a.is_finite()) || !(b >= 0.0 && b.is_finite()) {
            return Err(Error::invalid(format!("need a, b ≥ 0, got a = {a}, b = {b}")));
        }
        Ok(ModelParams { m, eps, chi, a, b })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.m, eps, self.chi, self.a, self.b)
    }

    /// Face diffusivity `m(ε+ū)^{m-1}`.
    pub fn diffusivity(&self, u_face: f64) -> f64 {
        self.m * (self.eps + u_face.max(0.0)).powf(self.m - 1.0)
    }

    /// Largest step allowed by the upwind CFL bound and the logistic bound.
    pub fn stable_dt(&self, u: &ScalarField, v: &ScalarField) -> f64 {
        let grid = u.grid();
        let gv = max_face_gradient(v);
        let cfl = if self.chi != 0.0 && gv > 0.0 {
            grid.spacing() / (2.0 * grid.dim() as f64 * self.chi.abs() * gv)
        } else {
            f64::INFINITY
        };
        let growth = self.a + self.b * u.max_abs();
        let logistic = if growth > 0.0 { 0.5 / growth } else { f64::INFINITY };
        cfl.min(logistic)
    }
}

/// Nonnegative initial pair on a shared grid.
#[derive(Clone, Debug)]
pub struct InitialData {
    pub u0: ScalarField,
    pub v0: ScalarField,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct InitialNorms {
    pub u0_inf: f64,
    pub v0_inf: f64,
    pub grad_v0_inf: f64,
}

impl InitialData {
    pub fn new(u0: ScalarField, v0: ScalarField) -> Result<Self> {
        u0.grid().check_same(v0.grid())?;
        if u0.min() < 0.0 || v0.min() < 0.0 {
            return Err(Error::invalid("initial data must be nonnegative"));
        }
        Ok(InitialData { u0, v0 })
    }

    pub fn norms(&self) -> InitialNorms {
        InitialNorms {
            u0_inf: self.u0.max_abs(),
            v0_inf: self.v0.max_abs(),
            grad_v0_inf: max_face_gradient(&self.v0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PicardConfig {
    /// Relative tolerance on successive iterates in the local `L^p` norm.
    pub tol: f64,
    pub max_iters: usize,
    pub contraction_factor_alarm: f64,
    /// Undershoots down to `-clip_tolerance` are clipped and ledgered;
    /// anything lower is a hard error.
    pub clip_tolerance: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            tol: 1e-10,
            max_iters: 50,
            contraction_factor_alarm: 0.9,
            clip_tolerance: 1e-8,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iters == 0 || !(self.clip_tolerance >= 0.0) {
            return Err(Error::invalid("Picard tolerance and iteration cap must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StepReport {
    /// Time at the end of the step.
    pub t: f64,
    pub dt: f64,
    pub iterations: usize,
    /// Largest ratio of successive iterate distances (0 when the iteration
    /// stopped before a ratio was measurable).
    pub contraction_factor: f64,
    pub clipped_mass: f64,
    pub min_pre_clip: f64,
    pub u_inf: f64,
    pub v_inf: f64,
    pub grad_v_inf: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1.0, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(2.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(2.0, -0.1, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(2.0, 0.0, 1.0, -1.0, 1.0).is_err());
        assert!(ModelParams::new(2.0, 0.0, -1.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn params_deserialize_validates() {
        let bad: std::result::Result<ModelParams, _> =
            serde_json::from_str(r#"{"m": 0.5, "eps": 0.0, "chi": 1.0, "a": 1.0, "b": 1.0}"#);
        assert!(bad.is_err());
    }
}
