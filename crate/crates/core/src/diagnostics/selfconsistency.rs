use serde::Serialize;

use crate::error::{Error, Result};
use crate::solver::{ModelParams, Snapshot};

use super::ledger::{FunctionalLedger, LedgerConfig};

/// Powers `(α, β)` in `Y + D ≤ C₀(κ^α Y^β + κ^{-N})`:
/// `α = 2 + N(p+m-2)/(p+m+2)` and `β = 2(p+m)/(p+m+2)`.
pub fn exponents(p: f64, m: f64, dim: usize) -> (f64, f64) {
    let s = p + m + 2.0;
    (2.0 + dim as f64 * (p + m - 2.0) / s, 2.0 * (p + m) / s)
}

#[derive(Clone, Debug, Serialize)]
pub struct SelfConsistencyFit {
    pub p: f64,
    pub m: f64,
    pub dim: usize,
    pub kappa: f64,
    /// Smallest `C₀` valid at every recorded time.
    pub c0: f64,
    /// Set when every left-hand side vanished, so any `C₀ > 0` fits.
    pub degenerate: bool,
    /// `(t, C₀(t))` per ledger row.
    pub per_time: Vec<(f64, f64)>,
}

impl SelfConsistencyFit {
    /// `C₀` over rows with `t ≤ t_max` only.
    pub fn c0_until(&self, t_max: f64) -> f64 {
        self.per_time
            .iter()
            .filter(|(t, _)| *t <= t_max + 1e-12)
            .map(|(_, c)| *c)
            .fold(0.0, f64::max)
    }
}

/// Fits `C₀` from the `Y_{p+1}` and dissipation series of a ledger.
pub fn fit_c0(ledger: &FunctionalLedger) -> Result<SelfConsistencyFit> {
    let cfg = ledger.config();
    let (p, m, dim) = (cfg.p, ledger.params().m(), ledger.grid().dim());
    let k = cfg
        .index_of(p + 1.0)
        .ok_or_else(|| Error::invalid(format!("ledger lacks the Y_r series for r = p + 1 = {}", p + 1.0)))?;
    if ledger.rows().is_empty() {
        return Err(Error::invalid("ledger has no rows"));
    }
    let kappa = cfg.kappa;
    let (alpha, beta) = exponents(p, m, dim);
    let floor = kappa.powi(-(dim as i32));
    let per_time: Vec<(f64, f64)> = ledger
        .rows()
        .iter()
        .map(|row| {
            let y = row.y[k];
            (row.t, (y + row.d) / (kappa.powf(alpha) * y.powf(beta) + floor))
        })
        .collect();
    let c0 = per_time.iter().map(|(_, c)| *c).fold(0.0, f64::max);
    Ok(SelfConsistencyFit {
        p,
        m,
        dim,
        kappa,
        c0,
        degenerate: c0 == 0.0,
        per_time,
    })
}

/// `κ* = ½(2C₀)^{-(p+m)/(p+m+2)}`.
pub fn threshold_kappa(c0: f64, p: f64, m: f64) -> f64 {
    0.5 * (2.0 * c0).powf(-(p + m) / (p + m + 2.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdCheck {
    pub kappa_star: f64,
    /// `Y_{p+1}` at the last snapshot, measured with `φ_{κ*}`.
    pub y_final: f64,
    /// `2C₀κ*^{-N}`
    pub bound: f64,
    pub passes: bool,
}

/// Recomputes `Y_{p+1}` with the cut-off at `κ*` from stored snapshots and
/// compares it with `2C₀κ*^{-N}`.
pub fn threshold_check(snapshots: &[Snapshot], params: &ModelParams, p: f64, c0: f64) -> Result<ThresholdCheck> {
    let first = snapshots.first().ok_or_else(|| Error::invalid("no snapshots"))?;
    let grid = *first.u.grid();
    let kappa_star = threshold_kappa(c0, p, params.m());
    if !(kappa_star > 0.0 && kappa_star < 1.0) {
        return Err(Error::invalid(format!(
            "threshold κ* = {kappa_star} falls outside (0, 1); C₀ = {c0} is too small"
        )));
    }
    let cfg = LedgerConfig {
        kappa: kappa_star,
        rs: vec![p + 1.0],
        p,
        rungs: Vec::new(),
        center_spacing: None,
        per_step: false,
    };
    let mut ledger = FunctionalLedger::new(&grid, params, cfg)?;
    let mut y_final = 0.0;
    for s in snapshots {
        y_final = ledger.update(s.t, &s.u, &s.v)?.y[0];
    }
    let bound = 2.0 * c0 * kappa_star.powi(-(grid.dim() as i32));
    Ok(ThresholdCheck {
        kappa_star,
        y_final,
        bound,
        passes: y_final <= bound,
    })
}
