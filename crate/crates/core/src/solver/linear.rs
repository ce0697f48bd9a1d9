//! Implicit finite-volume operators `I + dt·c - dt·∇·(D∇·)` and their solves.
//!
//! The operator is a symmetric M-matrix whenever `c ≥ 0` and `D ≥ 0`, so
//! its inverse is entrywise nonnegative: solutions inherit positivity and the
//! discrete maximum principle. One-dimensional systems are solved directly
//! (Thomas, or Sherman–Morrison for the periodic corner entries); higher
//! dimensions use Jacobi-preconditioned conjugate gradients.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

const CG_TOLERANCE: f64 = 1e-14;
const CG_ACCEPTABLE: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct ImplicitOperator {
    grid: GridSpec,
    /// `dt·D/h²` on each cell's right face, per axis; zero on boundary faces.
    coupling: Vec<Vec<f64>>,
    diag: Vec<f64>,
}

impl ImplicitOperator {
    /// `face_diffusivity[axis][i]` is `D` on the right face of cell `i`;
    /// `reaction` is the cellwise `c`.
    pub fn new(grid: &GridSpec, dt: f64, face_diffusivity: &[Vec<f64>], reaction: Option<&[f64]>) -> Self {
        let n = grid.cells();
        let h2 = grid.spacing() * grid.spacing();
        let mut diag: Vec<f64> = match reaction {
            Some(c) => c.iter().map(|ci| 1.0 + dt * ci).collect(),
            None => vec![1.0; grid.len()],
        };
        let mut coupling = Vec::with_capacity(grid.dim());
        for (axis, d) in face_diffusivity.iter().enumerate().take(grid.dim()) {
            let mut c = vec![0.0; grid.len()];
            grid.for_each_line(axis, |base, stride| {
                for k in 0..n {
                    let i = base + k * stride;
                    let j = if k + 1 < n {
                        i + stride
                    } else if grid.is_periodic() {
                        base
                    } else {
                        continue;
                    };
                    let w = dt * d[i] / h2;
                    c[i] = w;
                    diag[i] += w;
                    diag[j] += w;
                }
            });
            coupling.push(c);
        }
        ImplicitOperator {
            grid: *grid,
            coupling,
            diag,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.grid.cells();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, xi)| d * xi).collect();
        for axis in 0..self.grid.dim() {
            let c = &self.coupling[axis];
            self.grid.for_each_line(axis, |base, stride| {
                for k in 0..n {
                    let i = base + k * stride;
                    let j = if k + 1 < n {
                        i + stride
                    } else if self.grid.is_periodic() {
                        base
                    } else {
                        continue;
                    };
                    y[i] -= c[i] * x[j];
                    y[j] -= c[i] * x[i];
                }
            });
        }
        y
    }

    pub fn solve(&self, rhs: &ScalarField) -> Result<ScalarField> {
        self.grid.check_same(rhs.grid())?;
        let x = if self.grid.dim() == 1 {
            if self.grid.is_periodic() {
                self.solve_cyclic(rhs.values())
            } else {
                let lower: Vec<f64> = self.coupling[0].iter().map(|c| -c).collect();
                thomas(&lower, &self.diag, &lower, rhs.values())
            }
        } else {
            self.solve_cg(rhs.values())?
        };
        ScalarField::new(self.grid, x).map_err(|_| Error::LinearSolve {
            iterations: 0,
            residual: f64::NAN,
        })
    }

    /// Periodic tridiagonal system: Thomas on the open chain plus a rank-one
    /// Sherman–Morrison correction for the wrap-around coupling.
    fn solve_cyclic(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let c = &self.coupling[0];
        let off: Vec<f64> = c.iter().map(|v| -v).collect();
        // off[i] couples i and i+1; off[n-1] is the corner entry
        let corner = off[n - 1];
        let mut open = off.clone();
        open[n - 1] = 0.0;
        if corner == 0.0 {
            return thomas(&open, &self.diag, &open, rhs);
        }
        let gamma = -self.diag[0];
        let mut diag = self.diag.clone();
        diag[0] -= gamma;
        diag[n - 1] -= corner * corner / gamma;
        let x = thomas(&open, &diag, &open, rhs);
        let mut uvec = vec![0.0; n];
        uvec[0] = gamma;
        uvec[n - 1] = corner;
        let z = thomas(&open, &diag, &open, &uvec);
        let fact = (x[0] + corner * x[n - 1] / gamma) / (1.0 + z[0] + corner * z[n - 1] / gamma);
        x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
    }

    fn solve_cg(&self, b: &[f64]) -> Result<Vec<f64>> {
        let len = b.len();
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; len]);
        }
        let inv_diag: Vec<f64> = self.diag.iter().map(|d| 1.0 / d).collect();
        let mut x: Vec<f64> = b.iter().zip(&inv_diag).map(|(bi, di)| bi * di).collect();
        let ax = self.apply(&x);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let max_iter = 50 + 20 * (len as f64).sqrt() as usize;
        let mut best = norm2(&r) / bnorm;
        for it in 0..max_iter {
            if best <= CG_TOLERANCE {
                return Ok(x);
            }
            let ap = self.apply(&p);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for i in 0..len {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let res = norm2(&r) / bnorm;
            if res <= CG_TOLERANCE {
                return Ok(x);
            }
            // stagnation at roundoff level
            if it > 10 && res >= 0.999 * best && res <= CG_ACCEPTABLE {
                return Ok(x);
            }
            best = best.min(res);
            for i in 0..len {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..len {
                p[i] = z[i] + beta * p[i];
            }
        }
        let ax = self.apply(&x);
        let res = norm2(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>()) / bnorm;
        if res <= CG_ACCEPTABLE {
            Ok(x)
        } else {
            Err(Error::LinearSolve {
                iterations: max_iter,
                residual: res,
            })
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves the tridiagonal system with `lower[i-1]`, `diag[i]`, `upper[i]`
/// coupling rows `i-1`, `i`, `i+1` (symmetric storage: `lower[i]` couples
/// `i` and `i+1`).
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i - 1] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}
