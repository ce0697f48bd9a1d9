use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cutoff::{build_cutoff, CutoffReport};
use crate::diagnostics::{fit_constant, GnsCheck, TestFunction, WeakFormRecorder};
use crate::error::{Error, Result};
use crate::grid::{integrate, GridSpec, ScalarField};
use crate::oracles::{gaussian_heat, logistic_exact, Barenblatt};
use crate::sampling::band_limited;
use crate::semigroup::{fourier_modes, log_times, spike, verify_decay_estimates, DecayReport};
use crate::solver::{run, InitialData, ModelParams, NoObserver, RunControl};
use crate::stats::{fitted_order, observed_orders};

/// One measured quantity against its limit.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub suite: String,
    pub name: String,
    pub measured: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Verdict {
    fn at_most(suite: &str, name: String, measured: f64, limit: f64) -> Self {
        Verdict {
            suite: suite.into(),
            name,
            measured,
            limit,
            pass: measured <= limit,
        }
    }

    fn at_least(suite: &str, name: String, measured: f64, limit: f64) -> Self {
        Verdict {
            suite: suite.into(),
            name,
            measured,
            limit,
            pass: measured >= limit,
        }
    }
}

pub const CUTOFF_KAPPAS: [f64; 4] = [0.5, 0.2, 0.1, 0.05];

/// Pointwise properties on `samples` radii per `(κ, N)`, and stability of
/// the measured `κᴺ∫φ` across `κ`.
pub fn cutoff_suite(kappas: &[f64], samples: usize) -> Result<(Vec<CutoffReport>, Vec<Verdict>)> {
    let mut reports = Vec::new();
    let mut verdicts = Vec::new();
    for dim in 1..=3 {
        let mut masses = Vec::new();
        for &kappa in kappas {
            let r = build_cutoff(kappa, dim)?.radial_report(samples);
            let tag = format!("N={dim} kappa={kappa}");
            verdicts.push(Verdict::at_least(
                "cutoff",
                format!("{tag} min phi"),
                r.phi_min,
                f64::MIN_POSITIVE,
            ));
            verdicts.push(Verdict::at_most("cutoff", format!("{tag} max phi"), r.phi_max, 1.0));
            verdicts.push(Verdict::at_most(
                "cutoff",
                format!("{tag} |grad phi|/(kappa phi)"),
                r.grad_ratio,
                0.95,
            ));
            verdicts.push(Verdict::at_most(
                "cutoff",
                format!("{tag} |hess phi|/(kappa^2 phi)"),
                r.hess_ratio,
                0.95,
            ));
            masses.push(r.mass);
            reports.push(r);
        }
        let spread = masses.iter().copied().fold(0.0, f64::max) / masses.iter().copied().fold(f64::INFINITY, f64::min);
        verdicts.push(Verdict::at_most(
            "cutoff",
            format!("N={dim} mass spread across kappa"),
            spread,
            2.0,
        ));
    }
    Ok((reports, verdicts))
}

/// The decay checks on a fine periodic line, for `t ∈ [0.01, 1]`.
pub fn semigroup_suite() -> Result<(Vec<DecayReport>, Vec<Verdict>)> {
    let grid = GridSpec::periodic(1, 10.0, 4096)?;
    let times = log_times(0.01, 1.0, 9);
    let spike_corpus = vec![spike(&grid)];
    let indices: Vec<usize> = (0..=80).collect();
    let modes = fourier_modes(&grid, &indices)?;
    let mut mixed = spike_corpus.clone();
    mixed.extend(modes.iter().cloned());
    let cases: Vec<(f64, f64, bool, &[ScalarField])> = vec![
        (1.0, f64::INFINITY, false, &spike_corpus),
        (2.0, 2.0, false, &modes),
        (1.0, 2.0, false, &spike_corpus),
        (1.0, f64::INFINITY, true, &spike_corpus),
        (2.0, 2.0, true, &modes),
        (1.0, 2.0, true, &spike_corpus),
    ];
    let reports = cases
        .par_iter()
        .map(|(p, q, g, corpus)| verify_decay_estimates(corpus, *p, *q, *g, &times, 0.1))
        .collect::<Result<Vec<_>>>()?;
    let mut verdicts: Vec<Verdict> = reports
        .iter()
        .map(|r| {
            let name = format!(
                "{}(p,q)=({},{}) exponent error",
                if r.gradient { "gradient " } else { "" },
                r.p,
                r.q
            );
            Verdict::at_most("semigroup", name, (r.fitted_exponent - r.expected_exponent).abs(), 0.1)
        })
        .collect();
    let mut worst: f64 = 0.0;
    for u in &mixed {
        for &t in &times {
            let out = crate::semigroup::apply_semigroup(u, t)?;
            worst = worst.max(out.max_abs() - (-t).exp() * u.max_abs());
        }
    }
    verdicts.push(Verdict::at_most(
        "semigroup",
        "sup-norm contraction excess".into(),
        worst,
        1e-12,
    ));
    Ok((reports, verdicts))
}

/// Random band-limited fields on the 3-D box sized to the cut-off scale,
/// `L = (N+1)/(γκ)`.
pub fn gns_corpus(kappa: f64, cells: usize, count: usize, seed: u64) -> Result<Vec<ScalarField>> {
    let phi = build_cutoff(kappa, 3)?;
    let grid = GridSpec::periodic(3, 4.0 / (phi.gamma() * kappa), cells)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| band_limited(&grid, &mut rng, 2, 0.5, 1.0)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct GnsRow {
    pub r: f64,
    pub delta: f64,
    pub constants: Vec<(f64, f64)>,
    pub ratio: f64,
}

/// Fits one constant per `(r, δ, κ)` on an independent corpus per `κ` and
/// compares the constants across `κ`.
pub fn gns_suite(kappas: &[f64], cells: usize, count: usize, seed: u64) -> Result<(Vec<GnsRow>, Vec<Verdict>)> {
    let corpora = kappas
        .iter()
        .enumerate()
        .map(|(i, &k)| gns_corpus(k, cells, count, seed + i as u64))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for r in [2.0, 3.0] {
        let check = GnsCheck::new(r, 3)?;
        for delta in [0.1, 1.0] {
            let constants = kappas
                .iter()
                .zip(&corpora)
                .map(|(&k, corpus)| Ok((k, fit_constant(&check, corpus, &build_cutoff(k, 3)?, delta)?.constant)))
                .collect::<Result<Vec<(f64, f64)>>>()?;
            let hi = constants.iter().map(|c| c.1).fold(0.0, f64::max);
            let lo = constants.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            let ratio = if hi == 0.0 { 1.0 } else { hi / lo };
            verdicts.push(Verdict::at_most(
                "gns",
                format!("r={r} delta={delta} constant ratio across kappa"),
                ratio,
                3.0,
            ));
            rows.push(GnsRow {
                r,
                delta,
                constants,
                ratio,
            });
        }
    }
    Ok((rows, verdicts))
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinementRow {
    pub oracle: String,
    pub h: Vec<f64>,
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
    pub fitted_order: f64,
    /// Every error sits at roundoff level, so no order is measurable.
    pub exact: bool,
}

impl RefinementRow {
    fn new(oracle: impl Into<String>, h: Vec<f64>, errors: Vec<f64>) -> Result<Self> {
        let exact = errors.iter().all(|e| *e < 1e-13);
        let fitted = if exact {
            f64::INFINITY
        } else {
            fitted_order(&h, &errors)?
        };
        Ok(RefinementRow {
            oracle: oracle.into(),
            orders: observed_orders(&h, &errors),
            fitted_order: fitted,
            exact,
            h,
            errors,
        })
    }

    pub fn verdict(&self, min_order: f64) -> Verdict {
        Verdict::at_least("refine", format!("{} order", self.oracle), self.fitted_order, min_order)
    }
}

fn fixed_step(horizon: f64, dt: f64) -> RunControl {
    RunControl {
        horizon,
        dt0: dt,
        dt_max: dt,
        adaptive: false,
        snapshot_every: horizon,
        ..RunControl::default()
    }
}

/// Spatially constant density against the closed-form logistic flow, with
/// `dt` halved per level.
pub fn logistic_study(levels: usize) -> Result<RefinementRow> {
    let grid = GridSpec::periodic(1, 4.0, 16)?;
    let params = ModelParams::new(2.0, 0.01, 1.0, 1.0, 2.0)?;
    let (u0, horizon) = (0.1, 2.0);
    let mut h = Vec::new();
    let mut errors = Vec::new();
    for k in 0..levels {
        let dt = 0.1 / 2f64.powi(k as i32);
        let data = InitialData::new(ScalarField::constant(grid, u0), ScalarField::constant(grid, 0.5))?;
        let s = run(&params, &data, &fixed_step(horizon, dt), &mut NoObserver)?;
        let exact = logistic_exact(u0, params.a(), params.b(), horizon);
        h.push(dt);
        errors.push(s.final_u.values().iter().map(|x| (x - exact).abs()).fold(0.0, f64::max));
    }
    RefinementRow::new("logistic (dt)", h, errors)
}

/// `u ≡ 0`: the signal follows the heat equation; Gaussian data, `dt ∝ h²`.
pub fn heat_study(levels: usize) -> Result<RefinementRow> {
    let params = ModelParams::new(2.0, 0.0, 0.0, 0.0, 0.0)?;
    let horizon = 0.5;
    let rows = (0..levels)
        .into_par_iter()
        .map(|k| {
            let grid = GridSpec::periodic(1, 10.0, 64 << k)?;
            let hh = grid.spacing();
            let v0 = ScalarField::from_fn(grid, |x| gaussian_heat(1.0, 1.0, 0.0, x, 1))?;
            let data = InitialData::new(ScalarField::zeros(grid), v0)?;
            let s = run(&params, &data, &fixed_step(horizon, 0.1 * hh * hh), &mut NoObserver)?;
            let exact = ScalarField::from_fn(grid, |x| gaussian_heat(1.0, 1.0, horizon, x, 1))?;
            Ok((hh, integrate(&s.final_v.zip_map(&exact, |a, e| (a - e).abs())?, None)?))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let (h, e) = rows.into_iter().unzip();
    RefinementRow::new("heat (h)", h, e)
}

/// Pure porous-medium flow from the Barenblatt profile at `t = 1` to `t = 2`,
/// `dt = h/4`, L¹ error.
pub fn barenblatt_study(levels: usize, m: f64) -> Result<RefinementRow> {
    let params = ModelParams::new(m, 0.0, 0.0, 0.0, 0.0)?;
    let b = Barenblatt::new(m, 1, 1.0)?;
    let rows = (0..levels)
        .into_par_iter()
        .map(|k| {
            let grid = GridSpec::zero_flux(1, 6.0, 64 << k)?;
            let hh = grid.spacing();
            let data = InitialData::new(b.field(&grid, 1.0)?, ScalarField::zeros(grid))?;
            let s = run(&params, &data, &fixed_step(1.0, 0.25 * hh), &mut NoObserver)?;
            let exact = b.field(&grid, 2.0)?;
            Ok((hh, integrate(&s.final_u.zip_map(&exact, |a, e| (a - e).abs())?, None)?))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let (h, e) = rows.into_iter().unzip();
    RefinementRow::new(format!("barenblatt m={m} (h)"), h, e)
}

/// Test functions of the weak-residual study.
pub fn weak_test_functions() -> Vec<TestFunction> {
    vec![
        TestFunction::bump(&[0.0], &[1.5], 0.5),
        TestFunction::bump(&[1.0], &[1.0], 0.4),
        TestFunction::bump(&[-1.5], &[2.0], 0.5),
    ]
}

/// Weak-form residuals of a smooth positive run under `(h, dt) → (h/2, dt/4)`;
/// one row per test function and equation.
pub fn weak_residual_study(levels: usize) -> Result<Vec<RefinementRow>> {
    let params = ModelParams::new(2.0, 0.1, 1.0, 1.0, 1.0)?;
    let tests = weak_test_functions();
    let per_level = (0..levels)
        .into_par_iter()
        .map(|k| {
            let grid = GridSpec::periodic(1, 4.0, 32 << k)?;
            let q = std::f64::consts::PI / 4.0;
            let u0 = ScalarField::from_fn(grid, |x| 1.0 + 0.5 * (q * x[0]).cos())?;
            let v0 = ScalarField::from_fn(grid, |x| 0.6 + 0.3 * (2.0 * q * x[0]).sin())?;
            let data = InitialData::new(u0, v0)?;
            let mut rec = WeakFormRecorder::new(&grid, &params, tests.clone())?;
            let dt = 0.05 / 4f64.powi(k as i32);
            run(&params, &data, &fixed_step(0.5, dt), &mut rec)?;
            Ok((grid.spacing(), rec.residuals()))
        })
        .collect::<Result<Vec<_>>>()?;
    let h: Vec<f64> = per_level.iter().map(|l| l.0).collect();
    let mut rows = Vec::new();
    for (j, _) in tests.iter().enumerate() {
        let eu = per_level.iter().map(|l| l.1[j].u).collect();
        let ev = per_level.iter().map(|l| l.1[j].v).collect();
        rows.push(RefinementRow::new(
            format!("weak residual psi{j} u-equation (h)"),
            h.clone(),
            eu,
        )?);
        rows.push(RefinementRow::new(
            format!("weak residual psi{j} v-equation (h)"),
            h.clone(),
            ev,
        )?);
    }
    Ok(rows)
}

/// Every oracle study at `levels` refinement levels.
pub fn refinement_study(levels: usize, m: f64) -> Result<Vec<RefinementRow>> {
    if levels < 3 {
        return Err(Error::invalid("a refinement study needs at least three levels"));
    }
    let mut rows = vec![
        logistic_study(levels)?,
        heat_study(levels)?,
        barenblatt_study(levels, m)?,
    ];
    rows.extend(weak_residual_study(levels)?);
    Ok(rows)
}

/// Minimum orders used by [`refinement_verdicts`].
pub fn required_order(oracle: &str) -> f64 {
    if oracle.starts_with("logistic") {
        0.9
    } else if oracle.starts_with("heat") {
        1.9
    } else {
        0.8
    }
}

pub fn refinement_verdicts(rows: &[RefinementRow]) -> Vec<Verdict> {
    rows.iter().map(|r| r.verdict(required_order(&r.oracle))).collect()
}

pub fn write_refinement_csv<W: std::io::Write>(rows: &[RefinementRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["oracle", "level", "h", "error", "order"])?;
    for row in rows {
        for (k, (h, e)) in row.h.iter().zip(&row.errors).enumerate() {
            let order = if k == 0 {
                String::new()
            } else {
                row.orders[k - 1].to_string()
            };
            w.write_record([row.oracle.clone(), k.to_string(), h.to_string(), e.to_string(), order])?;
        }
    }
    w.flush()?;
    Ok(())
}
