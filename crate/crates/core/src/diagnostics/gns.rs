use rayon::prelude::*;
use serde::Serialize;

use crate::cutoff::CutoffFunction;
use crate::error::{Error, Result};
use crate::grid::{face_gradient, integrate, GridSpec, ScalarField};

/// Exponent bookkeeping for the localized interpolation inequality
///
/// ```text
/// κ²∫u^{2r}φ² ≤ δ‖∇(u^r φ)‖² + C κ^{2+2θ} δ^{-θ} [∫u^{r+1}φ^q]^{2/q}
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GnsCheck {
    pub r: f64,
    pub dim: usize,
}

/// The three integrals entering the inequality for one field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GnsTerms {
    /// `∫u^{2r}φ²`
    pub weighted: f64,
    /// `‖∇(u^r φ)‖²`
    pub gradient: f64,
    /// `∫u^{r+1}φ^q`
    pub mixed: f64,
}

impl GnsCheck {
    pub fn new(r: f64, dim: usize) -> Result<Self> {
        if !(r > 1.0 && r.is_finite()) {
            return Err(Error::invalid(format!("r = {r} must exceed 1")));
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::invalid("dimension must be 1, 2 or 3"));
        }
        Ok(GnsCheck { r, dim })
    }

    pub fn q(&self) -> f64 {
        (self.r + 1.0) / self.r
    }

    pub fn theta(&self) -> f64 {
        self.dim as f64 * (self.r - 1.0) / (2.0 * (self.r + 1.0))
    }

    /// `2 + 2θ - 2N/q`, the net power of `κ` when every length is scaled by
    /// `1/κ`.
    pub fn scaling_exponent(&self) -> f64 {
        2.0 + 2.0 * self.theta() - 2.0 * self.dim as f64 / self.q()
    }

    pub fn terms(&self, u: &ScalarField, phi: &ScalarField) -> Result<GnsTerms> {
        u.grid().check_same(phi.grid())?;
        if u.min() < 0.0 {
            return Err(Error::invalid("the inequality is stated for nonnegative u"));
        }
        let r = self.r;
        let q = self.q();
        let ur = u.map(|x| x.powf(r));
        let w = ur.zip_map(phi, |a, b| a * b)?;
        let fg = face_gradient(&w);
        Ok(GnsTerms {
            weighted: integrate(&w.map(|x| x * x), None)?,
            gradient: fg.dot(&fg)?,
            mixed: integrate(&u.zip_map(phi, |a, b| a.powf(r + 1.0) * b.powf(q))?, None)?,
        })
    }

    /// Smallest `C` for which the inequality holds with the given terms.
    pub fn required_constant(&self, t: &GnsTerms, kappa: f64, delta: f64) -> f64 {
        let excess = kappa * kappa * t.weighted - delta * t.gradient;
        if excess <= 0.0 {
            return 0.0;
        }
        let theta = self.theta();
        let scale = kappa.powf(2.0 + 2.0 * theta) * delta.powf(-theta) * t.mixed.powf(2.0 / self.q());
        excess / scale
    }
}

/// Extends a field constantly along new trailing axes, giving the same
/// values on a `target_dim`-dimensional grid of equal width and resolution.
pub fn extend_constant(u: &ScalarField, target_dim: usize) -> Result<ScalarField> {
    let g = u.grid();
    if target_dim < g.dim() || target_dim > 3 {
        return Err(Error::invalid("target dimension must lie between the field's and 3"));
    }
    let grid = GridSpec::new(target_dim, g.half_width(), g.cells(), g.boundary())?;
    let repeat = g.cells().pow((target_dim - g.dim()) as u32);
    let values = (0..grid.len()).map(|i| u.values()[i / repeat]).collect();
    ScalarField::new(grid, values)
}

#[derive(Clone, Debug, Serialize)]
pub struct GnsFit {
    pub r: f64,
    pub kappa: f64,
    pub delta: f64,
    /// Smallest `C` valid for the whole corpus.
    pub constant: f64,
    pub worst_field: usize,
}

/// One constant per `(r, κ, δ)` covering every field in the corpus; `φ` is
/// centered at the origin of the grid.
pub fn fit_constant(check: &GnsCheck, corpus: &[ScalarField], phi: &CutoffFunction, delta: f64) -> Result<GnsFit> {
    if corpus.is_empty() {
        return Err(Error::invalid("empty corpus"));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid("δ must be positive"));
    }
    let weight = phi.weight_field(corpus[0].grid())?;
    let kappa = phi.kappa();
    let constants = corpus
        .par_iter()
        .map(|u| Ok(check.required_constant(&check.terms(u, &weight)?, kappa, delta)))
        .collect::<Result<Vec<f64>>>()?;
    let (worst_field, constant) =
        constants
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0), |best, (i, c)| if c > best.1 { (i, c) } else { best });
    Ok(GnsFit {
        r: check.r,
        kappa,
        delta,
        constant,
        worst_field,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::build_cutoff;

    #[test]
    fn exponents_for_r2_in_3d() {
        let c = GnsCheck::new(2.0, 3).unwrap();
        assert_eq!(c.q(), 1.5);
        assert_eq!(c.theta(), 0.5);
        assert_eq!(2.0 + 2.0 * c.theta(), (2.0 * 5.0 - 3.0 + 2.0) / 3.0);
        assert!(GnsCheck::new(1.0, 3).is_err());
        assert!(GnsCheck::new(0.5, 3).is_err());
    }

    #[test]
    fn scaling_exponent_at_critical_r() {
        for (p, m) in [(2.0, 2.0), (3.0, 1.5), (4.0, 3.0)] {
            let c = GnsCheck::new((p + m) / 2.0, 3).unwrap();
            assert!((c.scaling_exponent() - (2.0 - 3.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_field_needs_no_constant() {
        let grid = GridSpec::periodic(3, 40.0, 16).unwrap();
        let phi = build_cutoff(0.2, 3).unwrap();
        let c = GnsCheck::new(2.0, 3).unwrap();
        let fit = fit_constant(&c, &[ScalarField::zeros(grid)], &phi, 1.0).unwrap();
        assert_eq!(fit.constant, 0.0);
    }

    #[test]
    fn constant_extension_keeps_values() {
        let g = GridSpec::periodic(1, 2.0, 8).unwrap();
        let u = ScalarField::from_fn(g, |x| x[0]).unwrap();
        let e = extend_constant(&u, 3).unwrap();
        assert_eq!(e.grid().dim(), 3);
        for i in 0..e.len() {
            let c = e.grid().cell_center(i);
            assert_eq!(e.values()[i], c[0]);
        }
    }
}
