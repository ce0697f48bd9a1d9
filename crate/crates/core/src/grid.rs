//! Uniform cell-centered grids on `[-L, L]^N`, scalar fields, midpoint
//! quadrature and the finite-volume stencils shared by every other module.
//!
//! Cells are stored row-major with axis 0 slowest. Face-centered data is kept
//! per axis with one entry per cell, the flux through the cell's right face.
//! With zero-flux boundaries the faces on the box boundary carry no flux.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial point; coordinates beyond the grid dimension are zero.
pub type Point = [f64; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Periodic,
    ZeroFlux,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpecRaw", into = "GridSpecRaw")]
pub struct GridSpec {
    dim: usize,
    half_width: f64,
    cells: usize,
    spacing: f64,
    boundary: Boundary,
}

#[derive(Serialize, Deserialize)]
struct GridSpecRaw {
    dim: usize,
    half_width: f64,
    cells: usize,
    boundary: Boundary,
}

impl TryFrom<GridSpecRaw> for GridSpec {
    type Error = Error;

    fn try_from(raw: GridSpecRaw) -> Result<Self> {
        GridSpec::new(raw.dim, raw.half_width, raw.cells, raw.boundary)
    }
}

impl From<GridSpec> for GridSpecRaw {
    fn from(g: GridSpec) -> Self {
        GridSpecRaw {
            dim: g.dim,
            half_width: g.half_width,
            cells: g.cells,
            boundary: g.boundary,
        }
    }
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, cells: usize, boundary: Boundary) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::invalid(format!("grid dimension {dim} not in 1..=3")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::invalid(format!("half width {half_width} must be positive")));
        }
        if cells < 8 || !cells.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "cells per axis must be even and >= 8, got {cells}"
            )));
        }
        let spacing = 2.0 * half_width / cells as f64;
        if spacing * cells as f64 != 2.0 * half_width {
            return Err(Error::invalid(format!(
                "spacing 2L/n is inexact for L = {half_width}, n = {cells}"
            )));
        }
        Ok(GridSpec {
            dim,
            half_width,
            cells,
            spacing,
            boundary,
        })
    }

    pub fn periodic(dim: usize, half_width: f64, cells: usize) -> Result<Self> {
        Self::new(dim, half_width, cells, Boundary::Periodic)
    }

    pub fn zero_flux(dim: usize, half_width: f64, cells: usize) -> Result<Self> {
        Self::new(dim, half_width, cells, Boundary::ZeroFlux)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    /// Total number of cells, `n^N`.
    pub fn len(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn domain_volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }

    /// Index distance between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.cells.pow((self.dim - 1 - axis) as u32)
    }

    /// Same grid with a different resolution.
    pub fn with_cells(&self, cells: usize) -> Result<Self> {
        Self::new(self.dim, self.half_width, cells, self.boundary)
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = idx % self.cells;
            idx /= self.cells;
        }
        out
    }

    pub fn cell_center(&self, idx: usize) -> Point {
        let mi = self.multi_index(idx);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.coord(mi[axis]);
        }
        x
    }

    /// `x - y`, using the minimum image on periodic grids.
    pub fn displacement(&self, x: &Point, y: &Point) -> Point {
        let mut d = [0.0; 3];
        let period = 2.0 * self.half_width;
        for axis in 0..self.dim {
            let mut di = x[axis] - y[axis];
            if self.is_periodic() {
                di -= period * (di / period).round();
            }
            d[axis] = di;
        }
        d
    }

    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        let d = self.displacement(x, y);
        d.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Calls `f(base, stride)` once per grid line along `axis`; the cells of
    /// the line are `base + k * stride` for `k in 0..n`.
    pub fn for_each_line(&self, axis: usize, mut f: impl FnMut(usize, usize)) {
        let stride = self.stride(axis);
        let outer = self.cells.pow(axis as u32);
        for o in 0..outer {
            let start = o * self.cells * stride;
            for i in 0..stride {
                f(start + i, stride);
            }
        }
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Dense cell data on a grid; every value is finite.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "field has {} values, grid has {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value {} at cell {i}", values[i])));
        }
        Ok(ScalarField { grid, values })
    }

    /// Skips the finiteness scan; callers guarantee the invariant.
    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f` at cell centers.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&Point) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.cell_center(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        ScalarField::new(self.grid, values)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Face-centered values, one array per axis indexed by the cell to the left
/// of the face.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceFluxField {
    grid: GridSpec,
    axes: Vec<Vec<f64>>,
}

impl FaceFluxField {
    pub fn new(grid: GridSpec, axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.len() != grid.dim() || axes.iter().any(|a| a.len() != grid.len()) {
            return Err(Error::invalid("face arrays must be one per axis, one value per cell"));
        }
        let mut out = FaceFluxField { grid, axes };
        out.zero_boundary_faces();
        Ok(out)
    }

    pub fn zeros(grid: GridSpec) -> Self {
        FaceFluxField {
            grid,
            axes: vec![vec![0.0; grid.len()]; grid.dim()],
        }
    }

    pub fn constant(grid: GridSpec, per_axis: &[f64]) -> Result<Self> {
        let axes = per_axis.iter().map(|&c| vec![c; grid.len()]).collect();
        Self::new(grid, axes)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn axis(&self, axis: usize) -> &[f64] {
        &self.axes[axis]
    }

    /// `∑_faces f·g·h^N`, the discrete `∫ F·G`.
    pub fn dot(&self, other: &FaceFluxField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self
            .axes
            .iter()
            .zip(&other.axes)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    fn zero_boundary_faces(&mut self) {
        if self.grid.is_periodic() {
            return;
        }
        let n = self.grid.cells();
        for axis in 0..self.grid.dim() {
            let arr = &mut self.axes[axis];
            self.grid.for_each_line(axis, |base, stride| {
                arr[base + (n - 1) * stride] = 0.0;
            });
        }
    }
}

/// Ball `B_r(x₀)`, realized as the cells whose centers lie within `radius`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: &[f64], radius: f64) -> Self {
        let mut c = [0.0; 3];
        c[..center.len()].copy_from_slice(center);
        Ball { center: c, radius }
    }

    pub fn cells(&self, grid: &GridSpec) -> Vec<usize> {
        (0..grid.len())
            .filter(|&i| grid.distance(&grid.cell_center(i), &self.center) < self.radius)
            .collect()
    }
}

/// Midpoint quadrature `∑ f·w·h^N`.
pub fn integrate(field: &ScalarField, weight: Option<&ScalarField>) -> Result<f64> {
    let s: f64 = match weight {
        None => field.values.iter().sum(),
        Some(w) => {
            field.grid.check_same(&w.grid)?;
            field.values.iter().zip(&w.values).map(|(a, b)| a * b).sum()
        }
    };
    Ok(s * field.grid.cell_volume())
}

/// Forward differences `(f[i+1] - f[i]) / h` on every face.
pub fn face_gradient(field: &ScalarField) -> FaceFluxField {
    let grid = field.grid;
    let n = grid.cells();
    let h = grid.spacing();
    let u = &field.values;
    let mut axes = Vec::with_capacity(grid.dim());
    for axis in 0..grid.dim() {
        let mut g = vec![0.0; grid.len()];
        grid.for_each_line(axis, |base, stride| {
            for k in 0..n - 1 {
                let i = base + k * stride;
                g[i] = (u[i + stride] - u[i]) / h;
            }
            let last = base + (n - 1) * stride;
            g[last] = if grid.is_periodic() {
                (u[base] - u[last]) / h
            } else {
                0.0
            };
        });
        axes.push(g);
    }
    FaceFluxField { grid, axes }
}

/// Discrete divergence `∑_axes (F[i+½] - F[i-½]) / h`.
pub fn divergence(flux: &FaceFluxField) -> ScalarField {
    let grid = flux.grid;
    let n = grid.cells();
    let h = grid.spacing();
    let mut out = vec![0.0; grid.len()];
    for axis in 0..grid.dim() {
        let f = &flux.axes[axis];
        grid.for_each_line(axis, |base, stride| {
            let last = base + (n - 1) * stride;
            let right_boundary = if grid.is_periodic() { f[last] } else { 0.0 };
            let mut left = if grid.is_periodic() { f[last] } else { 0.0 };
            for k in 0..n {
                let i = base + k * stride;
                let right = if k == n - 1 { right_boundary } else { f[i] };
                out[i] += (right - left) / h;
                left = right;
            }
        });
    }
    ScalarField::from_raw(grid, out)
}

/// Standard `2N+1`-point Laplacian, identically `divergence(face_gradient(f))`.
pub fn laplacian(field: &ScalarField) -> ScalarField {
    divergence(&face_gradient(field))
}

/// Centered cell gradient, one field per axis. Zero-flux boundaries use a
/// mirrored ghost cell.
pub fn gradient(field: &ScalarField) -> Vec<ScalarField> {
    let grid = field.grid;
    let n = grid.cells();
    let h = grid.spacing();
    let u = &field.values;
    (0..grid.dim())
        .map(|axis| {
            let mut g = vec![0.0; grid.len()];
            grid.for_each_line(axis, |base, stride| {
                let at = |k: isize| -> f64 {
                    let k = if grid.is_periodic() {
                        k.rem_euclid(n as isize)
                    } else {
                        k.clamp(0, n as isize - 1)
                    };
                    u[base + k as usize * stride]
                };
                for k in 0..n {
                    let ki = k as isize;
                    g[base + k * stride] = (at(ki + 1) - at(ki - 1)) / (2.0 * h);
                }
            });
            ScalarField::from_raw(grid, g)
        })
        .collect()
}

/// Pointwise Euclidean norm of the centered gradient.
pub fn gradient_magnitude(field: &ScalarField) -> ScalarField {
    let comps = gradient(field);
    let mut out = vec![0.0; field.len()];
    for c in &comps {
        for (o, g) in out.iter_mut().zip(c.values()) {
            *o += g * g;
        }
    }
    ScalarField::from_raw(field.grid, out.into_iter().map(f64::sqrt).collect())
}

/// Largest absolute forward difference over all faces, `max |∇f|` in the
/// sense used for upwind CFL limits.
pub fn max_face_gradient(field: &ScalarField) -> f64 {
    let fg = face_gradient(field);
    fg.axes.iter().flat_map(|a| a.iter()).fold(0.0, |m, v| m.max(v.abs()))
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::invalid(format!("L^p exponent must be >= 1, got {p}")));
    }
    Ok(())
}

fn lp_over(values: &[f64], cells: impl Iterator<Item = usize>, p: f64, vol: f64) -> f64 {
    if p.is_infinite() {
        return cells.fold(0.0, |m, i| m.max(values[i].abs()));
    }
    let s: f64 = cells.map(|i| values[i].abs().powf(p)).sum();
    (s * vol).powf(1.0 / p)
}

/// `(∫_region |f|^p)^{1/p}`; `p = ∞` gives the max norm.
pub fn lp_norm(field: &ScalarField, p: f64, region: Option<&Ball>) -> Result<f64> {
    check_exponent(p)?;
    let vol = field.grid.cell_volume();
    match region {
        None => Ok(lp_over(&field.values, 0..field.len(), p, vol)),
        Some(ball) => {
            let cells = ball.cells(&field.grid);
            if cells.is_empty() {
                return Err(Error::invalid("ball contains no cell centers"));
            }
            Ok(lp_over(&field.values, cells.into_iter(), p, vol))
        }
    }
}

/// Precomputed ball memberships for repeated local norms over a fixed set
/// of centers.
#[derive(Clone, Debug)]
pub struct BallCover {
    grid: GridSpec,
    radius: f64,
    members: Vec<Vec<usize>>,
}

impl BallCover {
    pub fn new(grid: &GridSpec, radius: f64, centers: &[Point]) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::invalid("ball cover needs at least one center"));
        }
        let members: Vec<Vec<usize>> = centers
            .iter()
            .map(|c| Ball { center: *c, radius }.cells(grid))
            .collect();
        if members.iter().any(|m| m.is_empty()) {
            return Err(Error::invalid(format!("radius {radius} leaves an empty ball")));
        }
        Ok(BallCover {
            grid: *grid,
            radius,
            members,
        })
    }

    /// Centers on a cell-aligned lattice with the given spacing.
    pub fn lattice(grid: &GridSpec, radius: f64, spacing: f64) -> Result<Self> {
        let step = ((spacing / grid.spacing()).floor() as usize).max(1);
        let n = grid.cells();
        let per_axis: Vec<f64> = (0..n).step_by(step).map(|i| grid.coord(i)).collect();
        let mut centers = Vec::new();
        let counts = [
            per_axis.len(),
            if grid.dim() > 1 { per_axis.len() } else { 1 },
            if grid.dim() > 2 { per_axis.len() } else { 1 },
        ];
        for a in 0..counts[0] {
            for b in 0..counts[1] {
                for c in 0..counts[2] {
                    let mut x = [0.0; 3];
                    x[0] = per_axis[a];
                    if grid.dim() > 1 {
                        x[1] = per_axis[b];
                    }
                    if grid.dim() > 2 {
                        x[2] = per_axis[c];
                    }
                    centers.push(x);
                }
            }
        }
        Self::new(grid, radius, &centers)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `sup_{x₀} ‖f‖_{L^p(B_r(x₀))}`.
    pub fn sup_lp(&self, field: &ScalarField, p: f64) -> Result<f64> {
        check_exponent(p)?;
        self.grid.check_same(field.grid())?;
        let vol = self.grid.cell_volume();
        Ok(self
            .members
            .iter()
            .map(|m| lp_over(&field.values, m.iter().copied(), p, vol))
            .fold(0.0, f64::max))
    }

    /// `sup_{x₀} (⨍_{B_r(x₀)} |f|^p)^{1/p}`, the ball-averaged variant.
    pub fn sup_mean_lp(&self, field: &ScalarField, p: f64) -> Result<f64> {
        check_exponent(p)?;
        self.grid.check_same(field.grid())?;
        let vol = self.grid.cell_volume();
        Ok(self
            .members
            .iter()
            .map(|m| lp_over(&field.values, m.iter().copied(), p, vol) / (m.len() as f64 * vol).powf(1.0 / p))
            .fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g1(n: usize) -> GridSpec {
        GridSpec::periodic(1, 1.0, n).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::periodic(0, 1.0, 16).is_err());
        assert!(GridSpec::periodic(4, 1.0, 16).is_err());
        assert!(GridSpec::periodic(1, 1.0, 6).is_err());
        assert!(GridSpec::periodic(1, 1.0, 17).is_err());
        assert!(GridSpec::periodic(1, -1.0, 16).is_err());
    }

    #[test]
    fn spacing_times_cells_is_box_width() {
        let g = GridSpec::periodic(2, 10.0, 4096).unwrap();
        assert_eq!(g.spacing() * 4096.0, 20.0);
        assert_eq!(g.len(), 4096 * 4096);
    }

    #[test]
    fn constant_integrates_to_volume() {
        let f = ScalarField::constant(g1(16), 2.0);
        assert_eq!(integrate(&f, None).unwrap(), 4.0);
        let w = ScalarField::zeros(g1(16));
        assert_eq!(integrate(&f, Some(&w)).unwrap(), 0.0);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let f = ScalarField::constant(g1(16), 2.0);
        let w = ScalarField::constant(g1(32), 1.0);
        assert!(matches!(integrate(&f, Some(&w)), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn non_finite_values_rejected() {
        assert!(ScalarField::new(g1(8), vec![f64::NAN; 8]).is_err());
        assert!(ScalarField::new(g1(8), vec![0.0; 7]).is_err());
    }

    #[test]
    fn gaussian_has_unit_mass() {
        // G(1, x) on [-20, 20], refined until the quadrature settles.
        let mut prev = 0.0;
        for n in [256, 512, 1024] {
            let g = GridSpec::periodic(1, 20.0, n).unwrap();
            let f = ScalarField::from_fn(g, |x| (4.0 * PI).powf(-0.5) * (-x[0] * x[0] / 4.0).exp()).unwrap();
            let m = integrate(&f, None).unwrap();
            assert!((m - 1.0).abs() < 1e-6, "n = {n}: mass {m}");
            prev = m;
        }
        assert!((prev - 1.0).abs() < 1e-12);
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        for g in [
            GridSpec::periodic(2, 1.0, 8).unwrap(),
            GridSpec::zero_flux(3, 1.0, 8).unwrap(),
        ] {
            let lap = laplacian(&ScalarField::constant(g, 3.5));
            assert!(lap.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn gradient_of_linear_profile() {
        let g = GridSpec::zero_flux(2, 1.0, 16).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0]).unwrap();
        let grad = gradient(&f);
        for i in 0..g.len() {
            let mi = g.multi_index(i);
            if mi[0] > 0 && mi[0] < 15 {
                assert!((grad[0].values()[i] - 1.0).abs() < 1e-12);
                assert!(grad[1].values()[i].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn laplacian_of_sine_is_second_order() {
        let l = 1.0;
        let mut errs = Vec::new();
        let ns = [16, 32, 64, 128];
        for &n in &ns {
            let g = GridSpec::periodic(1, l, n).unwrap();
            let k = PI / l;
            let f = ScalarField::from_fn(g, |x| (k * x[0]).sin()).unwrap();
            let lap = laplacian(&f);
            let err = lap
                .values()
                .iter()
                .enumerate()
                .map(|(i, v)| (v + k * k * (k * g.coord(i)).sin()).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.9, "order {order}");
        }
    }

    #[test]
    fn divergence_of_constant_flux_is_zero() {
        let g = GridSpec::periodic(3, 1.0, 8).unwrap();
        let f = FaceFluxField::constant(g, &[1.0, -2.0, 0.5]).unwrap();
        assert!(divergence(&f).values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn laplacian_matches_divergence_of_face_gradient() {
        let g = GridSpec::zero_flux(2, 1.0, 16).unwrap();
        let f = ScalarField::from_fn(g, |x| (3.0 * x[0]).sin() * x[1].exp()).unwrap();
        assert_eq!(laplacian(&f), divergence(&face_gradient(&f)));
    }

    #[test]
    fn zero_flux_preserves_sum() {
        let g = GridSpec::zero_flux(2, 1.0, 16).unwrap();
        let f = ScalarField::from_fn(g, |x| (3.0 * x[0]).sin() * x[1].exp()).unwrap();
        let s: f64 = laplacian(&f).values().iter().sum();
        assert!(s.abs() < 1e-9);
    }

    #[test]
    fn lp_norm_examples() {
        let g = GridSpec::periodic(1, 2.0, 400).unwrap();
        let f = ScalarField::constant(g, 3.0);
        let ball = Ball::new(&[0.0], 1.0);
        for p in [1.0, 2.0, 3.5] {
            let v = lp_norm(&f, p, Some(&ball)).unwrap();
            assert!((v - 3.0 * 2f64.powf(1.0 / p)).abs() < 1e-10, "p = {p}: {v}");
        }
        let mut vals = vec![0.0; 400];
        vals[17] = 7.0;
        vals[3] = -2.0;
        let spike = ScalarField::new(g, vals).unwrap();
        assert_eq!(lp_norm(&spike, f64::INFINITY, None).unwrap(), 7.0);
        assert!(lp_norm(&spike, 0.5, None).is_err());
        let empty = Ball::new(&[0.0], 1e-6);
        assert!(lp_norm(&f, 2.0, Some(&empty)).is_err());
    }

    #[test]
    fn gaussian_l2_norm_is_second_order() {
        // ‖e^{-x²}‖₂² = √(π/2) on ℝ; the box tail is below 1e-30.
        let exact = (PI / 2.0).sqrt().sqrt();
        let mut errs = Vec::new();
        for n in [16, 32, 64] {
            let g = GridSpec::periodic(1, 8.0, n).unwrap();
            let f = ScalarField::from_fn(g, |x| (-x[0] * x[0]).exp()).unwrap();
            errs.push((lp_norm(&f, 2.0, None).unwrap() - exact).abs());
        }
        // midpoint rule on a Gaussian is spectrally accurate, so O(h²) is the floor
        assert!(errs[2] <= errs[0] / 4.0 || errs[2] < 1e-12, "{errs:?}");
    }

    #[test]
    fn periodic_ball_wraps() {
        let g = GridSpec::periodic(1, 1.0, 16).unwrap();
        let cells = Ball::new(&[1.0], 0.2).cells(&g);
        assert!(cells.contains(&0) && cells.contains(&15));
    }

    #[test]
    fn ball_cover_sup_matches_direct() {
        let g = GridSpec::periodic(2, 2.0, 16).unwrap();
        let f = ScalarField::from_fn(g, |x| 1.0 + x[0] * x[1]).unwrap();
        let cover = BallCover::lattice(&g, 1.0, 1.0).unwrap();
        let direct = (0..g.len())
            .step_by(1)
            .filter(|i| {
                let mi = g.multi_index(*i);
                mi[0].is_multiple_of(4) && mi[1].is_multiple_of(4)
            })
            .map(|i| {
                lp_norm(
                    &f,
                    3.0,
                    Some(&Ball {
                        center: g.cell_center(i),
                        radius: 1.0,
                    }),
                )
                .unwrap()
            })
            .fold(0.0, f64::max);
        assert!((cover.sup_lp(&f, 3.0).unwrap() - direct).abs() < 1e-12);
    }
}
