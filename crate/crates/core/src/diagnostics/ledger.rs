use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutoff::{build_cutoff, shifted_family, CutoffFunction};
use crate::error::{Error, Result};
use crate::grid::{gradient_magnitude, max_face_gradient, BallCover, GridSpec, Point, ScalarField};
use crate::solver::{ModelParams, Observer, Snapshot, StepReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerConfig {
    pub kappa: f64,
    /// Exponents tracked with full `X`, `Y`, `Z` series.
    pub rs: Vec<f64>,
    /// `p` of the gradient dissipation `(u+ε)^{p+m-2}|∇u|²φ²`.
    pub p: f64,
    /// Moser rungs; only `Y_r^{1/r}` is kept for these.
    #[serde(default)]
    pub rungs: Vec<f64>,
    /// Spacing of the center lattice, `1/κ` when absent.
    #[serde(default)]
    pub center_spacing: Option<f64>,
    /// Also update after every accepted step, not only at snapshots.
    #[serde(default)]
    pub per_step: bool,
}

impl LedgerConfig {
    /// `r ∈ {p+1, p+2, p+m}` and the given rungs.
    pub fn standard(kappa: f64, p: f64, m: f64, rungs: Vec<f64>) -> Self {
        let mut rs = vec![p + 1.0, p + 2.0, p + m];
        rs.dedup();
        LedgerConfig {
            kappa,
            rs,
            p,
            rungs,
            center_spacing: None,
            per_step: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rs.is_empty() || self.rs.iter().chain(&self.rungs).any(|r| !(*r >= 1.0 && r.is_finite())) {
            return Err(Error::invalid("ledger exponents must be finite and ≥ 1"));
        }
        if !(self.p >= 1.0) {
            return Err(Error::invalid("ledger p must be ≥ 1"));
        }
        Ok(())
    }

    pub fn index_of(&self, r: f64) -> Option<usize> {
        self.rs.iter().position(|x| (x - r).abs() < 1e-12)
    }
}

/// One ledger row; every supremum is over the center lattice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerRow {
    pub t: f64,
    pub u_inf: f64,
    pub v_inf: f64,
    pub grad_v_inf: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// Exponentially weighted gradient dissipation.
    pub d: f64,
    /// `W_r` per rung.
    pub w: Vec<f64>,
    pub c_kappa: f64,
}

/// Time series of the localized functionals along one trajectory.
#[derive(Clone, Debug)]
pub struct FunctionalLedger {
    config: LedgerConfig,
    params: ModelParams,
    grid: GridSpec,
    cutoff: CutoffFunction,
    centers: Vec<Point>,
    /// `φ²(x - x₀)` per center.
    weights: Vec<Vec<f64>>,
    balls: BallCover,
    x_centers: Vec<Vec<f64>>,
    z_centers: Vec<Vec<f64>>,
    d_centers: Vec<f64>,
    y: Vec<f64>,
    rung_roots: Vec<f64>,
    c_kappa: f64,
    u_sup: f64,
    last_t: Option<f64>,
    rows: Vec<LedgerRow>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl FunctionalLedger {
    pub fn new(grid: &GridSpec, params: &ModelParams, config: LedgerConfig) -> Result<Self> {
        config.validate()?;
        let cutoff = build_cutoff(config.kappa, grid.dim())?;
        let spacing = config.center_spacing.unwrap_or(1.0 / config.kappa);
        let centers = shifted_family(&cutoff, spacing, grid)?;
        Self::with_centers(grid, params, config, cutoff, centers)
    }

    /// Same as [`FunctionalLedger::new`] with an explicit set of centers.
    pub fn with_centers(
        grid: &GridSpec,
        params: &ModelParams,
        config: LedgerConfig,
        cutoff: CutoffFunction,
        centers: Vec<Point>,
    ) -> Result<Self> {
        config.validate()?;
        let weights = centers
            .par_iter()
            .map(|c| {
                cutoff
                    .recentered(&c[..grid.dim()])
                    .weight_field(grid)
                    .map(|w| w.into_values().into_iter().map(|x| x * x).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let radius = (1.0 / config.kappa).max(grid.spacing());
        let balls = BallCover::new(grid, radius, &centers)?;
        let nr = config.rs.len();
        let nc = centers.len();
        Ok(FunctionalLedger {
            rung_roots: vec![0.0; config.rungs.len()],
            y: vec![0.0; nr],
            x_centers: vec![vec![0.0; nc]; nr],
            z_centers: vec![vec![0.0; nc]; nr],
            d_centers: vec![0.0; nc],
            config,
            params: *params,
            grid: *grid,
            cutoff,
            centers,
            weights,
            balls,
            c_kappa: 0.0,
            u_sup: 0.0,
            last_t: None,
            rows: Vec::new(),
        })
    }

    pub fn config(&self) -> &LedgerConfig {
        &self.config
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn cutoff(&self) -> &CutoffFunction {
        &self.cutoff
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn rows(&self) -> &[LedgerRow] {
        &self.rows
    }

    /// Latest `X_{r,x₀}` for every center, for the `k`-th tracked exponent.
    pub fn x_per_center(&self, k: usize) -> &[f64] {
        &self.x_centers[k]
    }

    /// Latest `Z_{r,x₀}` for every center.
    pub fn z_per_center(&self, k: usize) -> &[f64] {
        &self.z_centers[k]
    }

    /// `sup_{s≤t} ‖u(s)‖_∞` over the recorded times.
    pub fn u_sup(&self) -> f64 {
        self.u_sup
    }

    /// `∫(u+ε)^r φ²(x-x₀)` for every center.
    pub fn x_centers_for(&self, u: &ScalarField, r: f64) -> Vec<f64> {
        let eps = self.params.eps();
        let vol = self.grid.cell_volume();
        let powered: Vec<f64> = u.values().iter().map(|x| (x + eps).powf(r)).collect();
        self.weights.par_iter().map(|w| dot(&powered, w) * vol).collect()
    }

    /// `sup_{x₀} (∫(u+ε)^r φ²)^{1/r}`, scaled to avoid overflow at large `r`.
    pub fn root_sup(&self, u: &ScalarField, r: f64) -> f64 {
        let eps = self.params.eps();
        let top = u.max() + eps;
        if top <= 0.0 {
            return 0.0;
        }
        let vol = self.grid.cell_volume();
        let scaled: Vec<f64> = u.values().iter().map(|x| ((x + eps) / top).powf(r)).collect();
        let best = self
            .weights
            .par_iter()
            .map(|w| dot(&scaled, w) * vol)
            .reduce(|| 0.0, f64::max);
        top * best.powf(1.0 / r)
    }

    fn dissipation_centers(&self, u: &ScalarField) -> Vec<f64> {
        let eps = self.params.eps();
        let e = self.config.p + self.params.m() - 2.0;
        let vol = self.grid.cell_volume();
        let g = gradient_magnitude(u);
        let integrand: Vec<f64> = u
            .values()
            .iter()
            .zip(g.values())
            .map(|(x, gx)| (x + eps).powf(e) * gx * gx)
            .collect();
        self.weights.par_iter().map(|w| dot(&integrand, w) * vol).collect()
    }

    /// Records the state at time `t`. Times must increase; repeating the last
    /// time is a no-op.
    pub fn update(&mut self, t: f64, u: &ScalarField, v: &ScalarField) -> Result<&LedgerRow> {
        self.grid.check_same(u.grid())?;
        self.grid.check_same(v.grid())?;
        if let Some(last) = self.last_t {
            if t == last {
                return Ok(self.rows.last().expect("a row exists once a time is recorded"));
            }
            if t < last {
                return Err(Error::invalid(format!("ledger time went backwards: {t} < {last}")));
            }
        }
        let decay = self.last_t.map(|s| (-(t - s)).exp());
        for k in 0..self.config.rs.len() {
            let xs = self.x_centers_for(u, self.config.rs[k]);
            if let Some(e) = decay {
                for (z, x) in self.z_centers[k].iter_mut().zip(&xs) {
                    *z = e * *z + (1.0 - e) * x;
                }
            }
            let xmax = xs.iter().copied().fold(0.0, f64::max);
            self.y[k] = self.y[k].max(xmax);
            self.x_centers[k] = xs;
        }
        if let Some(e) = decay {
            let ds = self.dissipation_centers(u);
            for (d, x) in self.d_centers.iter_mut().zip(&ds) {
                *d = e * *d + (1.0 - e) * x;
            }
        }
        for (j, &r) in self.config.rungs.iter().enumerate() {
            self.rung_roots[j] = self.rung_roots[j].max(self.root_sup(u, r));
        }
        let p0 = super::moser::base_exponent(self.grid.dim(), self.params.m());
        let shifted = u.map(|x| x + self.params.eps());
        self.c_kappa = self.c_kappa.max(self.balls.sup_mean_lp(&shifted, p0)?);
        self.u_sup = self.u_sup.max(u.max_abs());
        self.last_t = Some(t);
        let sup = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        let row = LedgerRow {
            t,
            u_inf: u.max_abs(),
            v_inf: v.max_abs(),
            grad_v_inf: max_face_gradient(v),
            x: self.x_centers.iter().map(|xs| sup(xs)).collect(),
            y: self.y.clone(),
            z: self.z_centers.iter().map(|zs| sup(zs)).collect(),
            d: sup(&self.d_centers),
            w: self.rung_roots.iter().map(|r| r.max(self.c_kappa)).collect(),
            c_kappa: self.c_kappa,
        };
        self.rows.push(row);
        Ok(self.rows.last().expect("row just pushed"))
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["t", "u_inf", "v_inf", "gradv_inf"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for prefix in ["X", "Y", "Z"] {
            h.extend(self.config.rs.iter().map(|r| format!("{prefix}_r{r}")));
        }
        h.push("D".into());
        h.extend(self.config.rungs.iter().map(|r| format!("W_r{r}")));
        h.push("C_kappa".into());
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.csv_header())?;
        for row in &self.rows {
            let mut rec: Vec<String> = [row.t, row.u_inf, row.v_inf, row.grad_v_inf]
                .iter()
                .map(|x| x.to_string())
                .collect();
            for series in [&row.x, &row.y, &row.z] {
                rec.extend(series.iter().map(|x| x.to_string()));
            }
            rec.push(row.d.to_string());
            rec.extend(row.w.iter().map(|x| x.to_string()));
            rec.push(row.c_kappa.to_string());
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl Observer for FunctionalLedger {
    fn on_snapshot(&mut self, s: &Snapshot) -> Result<()> {
        self.update(s.t, &s.u, &s.v).map(|_| ())
    }

    fn on_step(&mut self, report: &StepReport, u: &ScalarField, v: &ScalarField) -> Result<()> {
        if self.config.per_step {
            self.update(report.t, u, v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ledger(eps: f64) -> FunctionalLedger {
        let grid = GridSpec::periodic(1, 20.0, 64).unwrap();
        let params = ModelParams::new(2.0, eps, 1.0, 1.0, 1.0).unwrap();
        let cfg = LedgerConfig {
            kappa: 0.2,
            rs: vec![2.0, 3.0],
            p: 2.0,
            rungs: vec![4.0, 64.0],
            center_spacing: None,
            per_step: false,
        };
        FunctionalLedger::new(&grid, &params, cfg).unwrap()
    }

    #[test]
    fn zero_state_gives_zero_functionals() {
        let mut l = ledger(0.0);
        let g = *l.grid();
        for t in [0.0, 0.5, 1.0] {
            let row = l
                .update(t, &ScalarField::zeros(g), &ScalarField::zeros(g))
                .unwrap()
                .clone();
            assert!(row.x.iter().chain(&row.y).chain(&row.z).all(|&x| x == 0.0));
            assert_eq!(row.d, 0.0);
        }
    }

    #[test]
    fn constant_one_closed_form() {
        let mut l = ledger(0.0);
        let g = *l.grid();
        let one = ScalarField::constant(g, 1.0);
        let v = ScalarField::zeros(g);
        let mass: f64 = l.weights[0].iter().sum::<f64>() * g.cell_volume();
        for k in 0..=10 {
            let t = 0.1 * k as f64;
            l.update(t, &one, &v).unwrap();
            let x0 = l.x_per_center(0)[0];
            let z0 = l.z_per_center(0)[0];
            assert!((x0 - mass).abs() < 1e-12 * mass);
            assert!((z0 - (1.0 - (-t).exp()) * mass).abs() < 1e-12 * mass, "t={t}");
        }
    }

    #[test]
    fn rejects_time_reversal() {
        let mut l = ledger(0.1);
        let g = *l.grid();
        let f = ScalarField::constant(g, 1.0);
        l.update(1.0, &f, &f).unwrap();
        assert!(l.update(0.5, &f, &f).is_err());
        assert_eq!(l.update(1.0, &f, &f).unwrap().t, 1.0);
        assert_eq!(l.rows().len(), 1);
    }

    #[test]
    fn root_matches_direct_power() {
        let l = ledger(0.05);
        let g = *l.grid();
        let u = ScalarField::from_fn(g, |x| 1.0 + 0.5 * (x[0] / 5.0).sin()).unwrap();
        let direct = l.x_centers_for(&u, 3.0).into_iter().fold(0.0, f64::max).powf(1.0 / 3.0);
        assert!((l.root_sup(&u, 3.0) - direct).abs() < 1e-12 * direct);
        assert!(l.root_sup(&ScalarField::constant(g, 40.0), 400.0).is_finite());
    }

    #[test]
    fn csv_columns() {
        let mut l = ledger(0.0);
        let g = *l.grid();
        l.update(0.0, &ScalarField::constant(g, 1.0), &ScalarField::zeros(g))
            .unwrap();
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(
            header,
            "t,u_inf,v_inf,gradv_inf,X_r2,X_r3,Y_r2,Y_r3,Z_r2,Z_r3,D,W_r4,W_r64,C_kappa"
        );
        assert_eq!(text.lines().count(), 2);
    }
}
