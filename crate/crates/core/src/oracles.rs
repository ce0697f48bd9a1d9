//! Closed-form solutions used as references by the refinement studies.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

/// Source-type self-similar solution of `u_t = Δ(u^m)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Barenblatt {
    pub m: f64,
    pub dim: usize,
    /// Free constant fixing the mass.
    pub c: f64,
}

impl Barenblatt {
    pub fn new(m: f64, dim: usize, c: f64) -> Result<Self> {
        if !(m > 1.0) || !(1..=3).contains(&dim) || !(c > 0.0) {
            return Err(Error::invalid("Barenblatt profile needs m > 1, N in 1..=3, C > 0"));
        }
        Ok(Barenblatt { m, dim, c })
    }

    pub fn alpha(&self) -> f64 {
        let n = self.dim as f64;
        n / (n * (self.m - 1.0) + 2.0)
    }

    pub fn k(&self) -> f64 {
        self.alpha() * (self.m - 1.0) / (2.0 * self.m * self.dim as f64)
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        let a = self.alpha();
        let r2: f64 = x.iter().take(self.dim).map(|xi| xi * xi).sum();
        let inner = self.c - self.k() * r2 * t.powf(-2.0 * a / self.dim as f64);
        if inner <= 0.0 {
            0.0
        } else {
            t.powf(-a) * inner.powf(1.0 / (self.m - 1.0))
        }
    }

    /// Radius of the support at time `t`.
    pub fn front(&self, t: f64) -> f64 {
        (self.c / self.k()).sqrt() * t.powf(self.alpha() / self.dim as f64)
    }

    pub fn field(&self, grid: &GridSpec, t: f64) -> Result<ScalarField> {
        if grid.dim() != self.dim {
            return Err(Error::GridMismatch("Barenblatt dimension differs from grid".into()));
        }
        if !(t > 0.0) {
            return Err(Error::invalid("Barenblatt profile is defined for t > 0"));
        }
        ScalarField::from_fn(*grid, |x| self.eval(t, &x[..self.dim]))
    }
}

/// Solution of `u' = u(a - bu)` with `u(0) = u0`.
pub fn logistic_exact(u0: f64, a: f64, b: f64, t: f64) -> f64 {
    if a == 0.0 {
        return u0 / (1.0 + b * u0 * t);
    }
    a * u0 / (b * u0 + (a - b * u0) * (-a * t).exp())
}

/// Heat flow of `A·exp(-|x|²/(2s²))` on ℝᴺ.
pub fn gaussian_heat(amplitude: f64, s: f64, t: f64, x: &[f64], dim: usize) -> f64 {
    let var = s * s + 2.0 * t;
    let r2: f64 = x.iter().take(dim).map(|xi| xi * xi).sum();
    amplitude * (s * s / var).powf(dim as f64 / 2.0) * (-r2 / (2.0 * var)).exp()
}
