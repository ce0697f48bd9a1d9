//! Shared fixtures for the criterion benches.

use pmchem::{GridSpec, ScalarField};

/// A smooth positive pair `(u, v)` on a periodic box of `cells` per axis.
pub fn smooth_pair(dim: usize, cells: usize) -> (ScalarField, ScalarField) {
    let grid = GridSpec::periodic(dim, 4.0, cells).expect("valid grid");
    let q = std::f64::consts::PI / 4.0;
    let u = ScalarField::from_fn(grid, |x| 1.0 + 0.5 * x.iter().map(|c| (q * c).cos()).product::<f64>()).unwrap();
    let v = ScalarField::from_fn(grid, |x| 0.6 + 0.3 * (2.0 * q * x[0]).sin()).unwrap();
    (u, v)
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixtures_are_positive() {
        for dim in 1..=3 {
            let (u, v) = super::smooth_pair(dim, 8);
            assert!(u.min() > 0.0 && v.min() > 0.0);
        }
    }
}
