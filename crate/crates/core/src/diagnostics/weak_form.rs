use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{gradient, GridSpec, ScalarField};
use crate::solver::{ModelParams, Observer, Snapshot, StepReport};

/// `ψ(t, x) = A·η(t)·∏ᵢ b((xᵢ - cᵢ)/wᵢ)` with `η(t) = cos²(πt/(2T₁))` on
/// `[0, T₁)` and `b(s) = cos²(πs/2)` on `|s| < 1`. Both factors are C¹ with
/// compact support.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestFunction {
    pub amplitude: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub center: [f64; 3],
    pub width: [f64; 3],
}

impl TestFunction {
    pub fn bump(center: &[f64], width: &[f64], t_end: f64) -> Self {
        let mut c = [0.0; 3];
        let mut w = [1.0; 3];
        c[..center.len()].copy_from_slice(center);
        w[..width.len()].copy_from_slice(width);
        TestFunction {
            amplitude: 1.0,
            t_start: 0.0,
            t_end,
            center: c,
            width: w,
        }
    }

    /// Same spatial bump, with the time window moved to start at `t_start`.
    pub fn delayed(&self, t_start: f64) -> Self {
        TestFunction {
            t_start,
            t_end: t_start + (self.t_end - self.t_start),
            ..self.clone()
        }
    }

    fn time(&self, t: f64) -> (f64, f64) {
        let len = self.t_end - self.t_start;
        let s = t - self.t_start;
        if s < 0.0 || s >= len {
            return (0.0, 0.0);
        }
        let a = PI * s / (2.0 * len);
        (a.cos().powi(2), -(PI / (2.0 * len)) * (2.0 * a).sin())
    }

    fn space(&self, dim: usize, x: &[f64; 3]) -> (f64, [f64; 3]) {
        let mut vals = [1.0; 3];
        let mut ders = [0.0; 3];
        for i in 0..dim {
            let s = (x[i] - self.center[i]) / self.width[i];
            if s.abs() >= 1.0 {
                return (0.0, [0.0; 3]);
            }
            let a = PI * s / 2.0;
            vals[i] = a.cos().powi(2);
            ders[i] = -(PI / (2.0 * self.width[i])) * (2.0 * a).sin();
        }
        let value: f64 = vals[..dim].iter().product();
        let mut grad = [0.0; 3];
        for i in 0..dim {
            grad[i] = ders[i] * (0..dim).filter(|&j| j != i).map(|j| vals[j]).product::<f64>();
        }
        (self.amplitude * value, grad.map(|g| self.amplitude * g))
    }

    /// Support must stay strictly inside the box.
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        let l = grid.half_width();
        for i in 0..grid.dim() {
            if !(self.width[i] > 0.0) || self.center[i] - self.width[i] <= -l || self.center[i] + self.width[i] >= l {
                return Err(Error::invalid(format!(
                    "test function support on axis {i} touches the box boundary"
                )));
            }
        }
        if !(self.t_end > self.t_start) || self.t_start < 0.0 {
            return Err(Error::invalid("test function needs 0 ≤ t_start < t_end"));
        }
        Ok(())
    }
}

/// `|LHS - RHS|` of both integral identities for one test function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeakResidual {
    pub u: f64,
    pub v: f64,
}

struct Tabulated {
    psi: Vec<f64>,
    grad: Vec<[f64; 3]>,
}

/// Accumulates both sides of the weak formulation along a run, with
/// trapezoidal quadrature over every recorded time.
pub struct WeakFormRecorder {
    params: ModelParams,
    grid: GridSpec,
    tests: Vec<TestFunction>,
    tables: Vec<Tabulated>,
    /// `∫₀ᵗ g dt + ∫u₀ψ(0)` per test and equation.
    acc: Vec<[f64; 2]>,
    last: Option<(f64, Vec<[f64; 2]>)>,
}

impl WeakFormRecorder {
    pub fn new(grid: &GridSpec, params: &ModelParams, tests: Vec<TestFunction>) -> Result<Self> {
        for t in &tests {
            t.validate(grid)?;
        }
        let tables = tests
            .iter()
            .map(|tf| {
                let (psi, grad): (Vec<f64>, Vec<[f64; 3]>) = (0..grid.len())
                    .map(|i| tf.space(grid.dim(), &grid.cell_center(i)))
                    .unzip();
                Tabulated { psi, grad }
            })
            .collect();
        Ok(WeakFormRecorder {
            params: *params,
            grid: *grid,
            acc: vec![[0.0; 2]; tests.len()],
            tests,
            tables,
            last: None,
        })
    }

    /// Integrands at time `t`:
    /// `∫ uψ_t - D∇u·∇ψ + χu∇v·∇ψ + (au - bu²)ψ` and `∫ vψ_t - ∇v·∇ψ - uvψ`.
    fn integrands(&self, t: f64, u: &ScalarField, v: &ScalarField) -> Vec<[f64; 2]> {
        let dim = self.grid.dim();
        let gu = gradient(u);
        let gv = gradient(v);
        let (m, eps, chi, a, b) = (
            self.params.m(),
            self.params.eps(),
            self.params.chi(),
            self.params.a(),
            self.params.b(),
        );
        let vol = self.grid.cell_volume();
        self.tests
            .iter()
            .zip(&self.tables)
            .map(|(tf, tab)| {
                let (eta, deta) = tf.time(t);
                if eta == 0.0 && deta == 0.0 {
                    return [0.0, 0.0];
                }
                let mut su = 0.0;
                let mut sv = 0.0;
                for i in 0..self.grid.len() {
                    let psi = tab.psi[i];
                    if psi == 0.0 && tab.grad[i].iter().all(|g| *g == 0.0) {
                        continue;
                    }
                    let ui = u.values()[i];
                    let vi = v.values()[i];
                    let mut du = 0.0;
                    let mut dv = 0.0;
                    for k in 0..dim {
                        du += gu[k].values()[i] * tab.grad[i][k];
                        dv += gv[k].values()[i] * tab.grad[i][k];
                    }
                    let diff = m * (eps + ui.max(0.0)).powf(m - 1.0);
                    su += ui * psi * deta + eta * (-diff * du + chi * ui * dv + (a * ui - b * ui * ui) * psi);
                    sv += vi * psi * deta - eta * (dv + ui * vi * psi);
                }
                [su * vol, sv * vol]
            })
            .collect()
    }

    pub fn record(&mut self, t: f64, u: &ScalarField, v: &ScalarField) -> Result<()> {
        self.grid.check_same(u.grid())?;
        let g = self.integrands(t, u, v);
        match &self.last {
            None => {
                // initial-data term ∫u₀ψ(0) and ∫v₀ψ(0)
                for (k, tf) in self.tests.iter().enumerate() {
                    let (eta, _) = tf.time(t);
                    let vol = self.grid.cell_volume();
                    let tab = &self.tables[k];
                    let iu: f64 = u.values().iter().zip(&tab.psi).map(|(a, b)| a * b).sum();
                    let iv: f64 = v.values().iter().zip(&tab.psi).map(|(a, b)| a * b).sum();
                    self.acc[k][0] += eta * iu * vol;
                    self.acc[k][1] += eta * iv * vol;
                }
            }
            Some((t0, g0)) => {
                if t <= *t0 {
                    return Err(Error::invalid("weak-form times must increase"));
                }
                let dt = t - t0;
                for k in 0..self.tests.len() {
                    for e in 0..2 {
                        self.acc[k][e] += 0.5 * dt * (g0[k][e] + g[k][e]);
                    }
                }
            }
        }
        self.last = Some((t, g));
        Ok(())
    }

    pub fn tests(&self) -> &[TestFunction] {
        &self.tests
    }

    /// Residuals so far; meaningful once the run has passed every `t_end`.
    pub fn residuals(&self) -> Vec<WeakResidual> {
        self.acc
            .iter()
            .map(|a| WeakResidual {
                u: a[0].abs(),
                v: a[1].abs(),
            })
            .collect()
    }
}

impl Observer for WeakFormRecorder {
    fn on_snapshot(&mut self, s: &Snapshot) -> Result<()> {
        if self.last.is_none() {
            self.record(s.t, &s.u, &s.v)?;
        }
        Ok(())
    }

    fn on_step(&mut self, r: &StepReport, u: &ScalarField, v: &ScalarField) -> Result<()> {
        self.record(r.t, u, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (GridSpec, ModelParams) {
        (
            GridSpec::periodic(1, 4.0, 64).unwrap(),
            ModelParams::new(2.0, 0.1, 1.0, 1.0, 1.0).unwrap(),
        )
    }

    #[test]
    fn zero_test_function() {
        let (grid, params) = setup();
        let mut tf = TestFunction::bump(&[0.0], &[1.0], 1.0);
        tf.amplitude = 0.0;
        let mut rec = WeakFormRecorder::new(&grid, &params, vec![tf]).unwrap();
        let u = ScalarField::from_fn(grid, |x| 1.0 + x[0].sin()).unwrap();
        rec.record(0.0, &u, &u).unwrap();
        rec.record(0.5, &u, &u).unwrap();
        assert_eq!(rec.residuals()[0], WeakResidual { u: 0.0, v: 0.0 });
    }

    #[test]
    fn support_after_horizon_gives_zero() {
        let (grid, params) = setup();
        let tf = TestFunction::bump(&[0.0], &[1.0], 1.0).delayed(5.0);
        let mut rec = WeakFormRecorder::new(&grid, &params, vec![tf]).unwrap();
        let u = ScalarField::from_fn(grid, |x| 1.0 + x[0].sin()).unwrap();
        for k in 0..=10 {
            rec.record(0.1 * k as f64, &u, &u).unwrap();
        }
        assert_eq!(rec.residuals()[0], WeakResidual { u: 0.0, v: 0.0 });
    }

    #[test]
    fn boundary_support_rejected() {
        let (grid, params) = setup();
        let tf = TestFunction::bump(&[3.5], &[1.0], 1.0);
        assert!(WeakFormRecorder::new(&grid, &params, vec![tf]).is_err());
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let tf = TestFunction::bump(&[0.3, -0.2], &[1.0, 0.7], 1.0);
        let x = [0.5, 0.1, 0.0];
        let (_, g) = tf.space(2, &x);
        let h = 1e-6;
        for k in 0..2 {
            let mut p = x;
            let mut q = x;
            p[k] += h;
            q[k] -= h;
            let fd = (tf.space(2, &p).0 - tf.space(2, &q).0) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-8);
        }
        let (_, dt) = tf.time(0.3);
        let fd = (tf.time(0.3 + h).0 - tf.time(0.3 - h).0) / (2.0 * h);
        assert!((fd - dt).abs() < 1e-8);
    }
}
