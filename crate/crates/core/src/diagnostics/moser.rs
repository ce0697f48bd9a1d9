use serde::Serialize;

use crate::error::{Error, Result};

use super::ledger::FunctionalLedger;

/// `max{N+1, m+1}`, the bottom of the ladder before adjustment.
pub fn minimal_base(dim: usize, m: f64) -> f64 {
    (dim as f64 + 1.0).max(m + 1.0)
}

/// Ladder base actually used: [`minimal_base`], moved up to `m + 2` when it
/// equals `m + 1` (the rungs would otherwise all coincide).
pub fn base_exponent(dim: usize, m: f64) -> f64 {
    let p0 = minimal_base(dim, m);
    if p0 - m - 1.0 < 1e-12 {
        m + 2.0
    } else {
        p0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MoserLadder {
    pub dim: usize,
    pub m: f64,
    pub p0: f64,
    pub rungs: Vec<f64>,
}

impl MoserLadder {
    /// Rungs `r_n = 2ⁿ(p₀-m-1)+m+1` for `n = 0..=n_max`.
    pub fn with_base(dim: usize, m: f64, p0: f64, n_max: usize) -> Result<Self> {
        if !(p0 > m + 1.0) {
            return Err(Error::invalid(format!(
                "ladder base {p0} must exceed m + 1 = {}",
                m + 1.0
            )));
        }
        let rungs = (0..=n_max)
            .map(|n| 2f64.powi(n as i32) * (p0 - m - 1.0) + m + 1.0)
            .collect();
        Ok(MoserLadder { dim, m, p0, rungs })
    }

    pub fn new(dim: usize, m: f64, n_max: usize) -> Result<Self> {
        Self::with_base(dim, m, base_exponent(dim, m), n_max)
    }

    /// Shortest ladder whose top rung is at least `r_min`.
    pub fn reaching(dim: usize, m: f64, r_min: f64) -> Result<Self> {
        let mut n = 0;
        loop {
            let ladder = Self::new(dim, m, n)?;
            if *ladder.rungs.last().expect("ladder is never empty") >= r_min {
                return Ok(ladder);
            }
            n += 1;
        }
    }

    pub fn n_max(&self) -> usize {
        self.rungs.len() - 1
    }

    /// `β_j = ∏_{i=j}^{n} (1 + (m-1)/r_i)` for `j = 0..=n+1` (the empty
    /// product at `j = n+1` is 1).
    pub fn betas(&self) -> Vec<f64> {
        let n = self.rungs.len();
        let mut b = vec![1.0; n + 1];
        for j in (0..n).rev() {
            b[j] = b[j + 1] * (1.0 + (self.m - 1.0) / self.rungs[j]);
        }
        b
    }

    /// Terms `β_{j+1}/r_j`.
    pub fn sum_terms(&self) -> Vec<f64> {
        let b = self.betas();
        self.rungs.iter().enumerate().map(|(j, r)| b[j + 1] / r).collect()
    }

    /// Log-terms `(2+2N)β_{j+1} ln r_j / r_j` of the rung product.
    pub fn product_log_terms(&self) -> Vec<f64> {
        let b = self.betas();
        let c = 2.0 + 2.0 * self.dim as f64;
        self.rungs
            .iter()
            .enumerate()
            .map(|(j, r)| c * b[j + 1] * r.ln() / r)
            .collect()
    }
}

fn tail_ratio(terms: &[f64]) -> f64 {
    match terms {
        [.., a, b] if *a > 0.0 => b / a,
        _ => f64::NAN,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MoserReport {
    pub ladder: MoserLadder,
    /// `W_{r_n}` at the last recorded time.
    pub w: Vec<f64>,
    /// `sup_{s≤t} ‖u(s)‖_∞ + ε`, the limit `W_r` approaches as `r → ∞`.
    pub reference: f64,
    pub top_relative_error: f64,
    pub diverging: bool,
    pub sum: f64,
    pub log_product: f64,
    pub sum_tail_ratio: f64,
    pub product_tail_ratio: f64,
}

impl MoserReport {
    pub fn passes(&self, tolerance: f64, ratio_limit: f64) -> bool {
        !self.diverging
            && self.w.iter().all(|w| w.is_finite())
            && self.top_relative_error <= tolerance
            && self.sum_tail_ratio < ratio_limit
            && self.product_tail_ratio < ratio_limit
    }
}

/// Reads `W_{r_n}` off the ledger's last row and compares the top rung with
/// the running grid maximum.
pub fn moser_report(ledger: &FunctionalLedger, ladder: &MoserLadder) -> Result<MoserReport> {
    let row = ledger
        .rows()
        .last()
        .ok_or_else(|| Error::invalid("ledger has no rows"))?;
    let tracked = &ledger.config().rungs;
    let w = ladder
        .rungs
        .iter()
        .map(|r| {
            tracked
                .iter()
                .position(|x| (x - r).abs() < 1e-9)
                .map(|k| row.w[k])
                .ok_or_else(|| Error::invalid(format!("ledger does not track rung {r}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let reference = ledger.u_sup() + ledger.params().eps();
    let top = *w.last().expect("ladder is never empty");
    let increasing = w.windows(2).all(|p| p[1] > p[0]);
    let sums = ladder.sum_terms();
    let logs = ladder.product_log_terms();
    Ok(MoserReport {
        top_relative_error: if reference > 0.0 {
            (top - reference).abs() / reference
        } else {
            top
        },
        diverging: increasing && top > 2.0 * reference,
        sum: sums.iter().sum(),
        log_product: logs.iter().sum(),
        sum_tail_ratio: tail_ratio(&sums),
        product_tail_ratio: tail_ratio(&logs),
        ladder: ladder.clone(),
        w,
        reference,
    })
}
