use pmchem::cutoff::shifted_family;
use pmchem::diagnostics::{FunctionalLedger, LedgerConfig};
use pmchem::experiments::{InitialRecipe, RunConfig};
use pmchem::grid::{face_gradient, integrate, laplacian, lp_norm};
use pmchem::{build_cutoff, BallCover, GridSpec, ModelParams, RunControl, ScalarField};
use proptest::prelude::*;

fn field_on(grid: GridSpec, values: &[f64]) -> ScalarField {
    ScalarField::new(grid, values.iter().copied().cycle().take(grid.len()).collect()).unwrap()
}

fn grid_strategy() -> impl Strategy<Value = GridSpec> {
    (
        1usize..=2,
        prop::sample::select(vec![8usize, 16, 32]),
        0.5f64..5.0,
        any::<bool>(),
    )
        .prop_map(|(dim, cells, half, periodic)| {
            if periodic {
                GridSpec::periodic(dim, half, cells).unwrap()
            } else {
                GridSpec::zero_flux(dim, half, cells).unwrap()
            }
        })
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 1..64)
}

fn static_ledger(kappa: f64) -> (GridSpec, ModelParams, LedgerConfig) {
    let grid = GridSpec::periodic(1, 8.0, 32).unwrap();
    let params = ModelParams::new(2.0, 0.01, 1.0, 1.0, 1.0).unwrap();
    (grid, params, LedgerConfig::standard(kappa, 2.0, 2.0, Vec::new()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadrature_is_linear(grid in grid_strategy(), a in values(), b in values(), s in -4.0f64..4.0, t in -4.0f64..4.0) {
        let (f, g) = (field_on(grid, &a), field_on(grid, &b));
        let combo = f.zip_map(&g, |x, y| s * x + t * y).unwrap();
        let lhs = integrate(&combo, None).unwrap();
        let rhs = s * integrate(&f, None).unwrap() + t * integrate(&g, None).unwrap();
        let scale = 1.0 + lhs.abs() + rhs.abs() + grid.domain_volume() * 24.0;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn summation_by_parts(grid in grid_strategy(), a in values(), b in values()) {
        let (f, g) = (field_on(grid, &a), field_on(grid, &b));
        let lhs = integrate(&g.zip_map(&laplacian(&f), |x, y| x * y).unwrap(), None).unwrap();
        let rhs = -face_gradient(&f).dot(&face_gradient(&g)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        // and the Laplacian conserves mass
        prop_assert!(integrate(&laplacian(&f), None).unwrap().abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn ball_means_increase_with_p(grid in grid_strategy(), a in values(), p in 1.0f64..6.0, dp in 0.0f64..4.0) {
        let f = field_on(grid, &a);
        let cover = BallCover::lattice(&grid, grid.half_width() / 2.0, grid.half_width() / 2.0).unwrap();
        let lo = cover.sup_mean_lp(&f, p).unwrap();
        let hi = cover.sup_mean_lp(&f, p + dp).unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-12));
        prop_assert!(hi <= f.max_abs() * (1.0 + 1e-12));
        // the plain norm over the whole box is at most |box|^{1/p} sup|f|
        let whole = lp_norm(&f, p, None).unwrap();
        prop_assert!(whole <= grid.domain_volume().powf(1.0 / p) * f.max_abs() * (1.0 + 1e-12));
    }

    #[test]
    fn cutoff_pointwise_bounds(kappa in 0.01f64..0.95, dim in 1usize..=3, x in prop::array::uniform3(-200.0f64..200.0)) {
        let phi = build_cutoff(kappa, dim).unwrap();
        let x = &x[..dim];
        let v = phi.eval(x);
        prop_assert!(v > 0.0 && v <= 1.0);
        let g: f64 = phi.eval_gradient(x).iter().map(|c| c * c).sum::<f64>().sqrt();
        prop_assert!(g <= kappa * v * (1.0 + 1e-12));
        prop_assert!(phi.eval_hessian_norm(x) <= kappa * kappa * v * (1.0 + 1e-12));
    }

    #[test]
    fn cutoff_comparable_on_unit_shifts(kappa in 0.01f64..0.95, r in 0.0f64..300.0) {
        // moving the center by 1/κ changes φ by a bounded factor
        let phi = build_cutoff(kappa, 1).unwrap();
        let near = phi.eval(&[r]);
        let far = phi.eval(&[r + 1.0 / kappa]);
        let bound = phi.radial_report(4000).comparability;
        prop_assert!(near <= far * bound * 1.01);
    }

    #[test]
    fn ledger_is_shift_covariant(a in prop::collection::vec(0.0f64..3.0, 32), shift in 0usize..4) {
        // centers every 4 = 8 cells; shifting u by whole center spacings permutes the centers
        let (grid, params, cfg) = static_ledger(0.25);
        let u = ScalarField::new(grid, a.clone()).unwrap();
        let k = 8 * shift;
        let shifted = ScalarField::new(grid, (0..32).map(|i| a[(i + 32 - k) % 32]).collect()).unwrap();
        let v = ScalarField::zeros(grid);
        let mut l1 = FunctionalLedger::new(&grid, &params, cfg.clone()).unwrap();
        let mut l2 = FunctionalLedger::new(&grid, &params, cfg).unwrap();
        let y1 = l1.update(0.0, &u, &v).unwrap().y.clone();
        let y2 = l2.update(0.0, &shifted, &v).unwrap().y.clone();
        for (p, q) in y1.iter().zip(&y2) {
            prop_assert!((p - q).abs() <= 1e-10 * p.max(1e-300));
        }
    }

    #[test]
    fn z_is_a_discounted_average_of_x(
        frames in prop::collection::vec(prop::collection::vec(0.0f64..2.0, 32), 1..6),
        gaps in prop::collection::vec(0.01f64..2.0, 6),
    ) {
        let (grid, params, cfg) = static_ledger(0.25);
        let v = ScalarField::zeros(grid);
        let mut ledger = FunctionalLedger::new(&grid, &params, cfg).unwrap();
        let mut t = 0.0;
        let mut x_max = vec![0.0f64; ledger.centers().len()];
        for (frame, gap) in frames.iter().zip(&gaps) {
            let u = ScalarField::new(grid, frame.clone()).unwrap();
            ledger.update(t, &u, &v).unwrap();
            for (m, x) in x_max.iter_mut().zip(ledger.x_per_center(0)) {
                *m = m.max(*x);
            }
            for (z, m) in ledger.z_per_center(0).iter().zip(&x_max) {
                prop_assert!(*z <= (1.0 - (-t).exp()) * m * (1.0 + 1e-12) + 1e-300);
            }
            t += gap;
        }
    }

    #[test]
    fn z_of_a_static_state_is_closed_form(a in prop::collection::vec(0.0f64..2.0, 32), times in prop::collection::vec(0.01f64..1.0, 1..5)) {
        let (grid, params, cfg) = static_ledger(0.25);
        let u = ScalarField::new(grid, a).unwrap();
        let v = ScalarField::zeros(grid);
        let mut ledger = FunctionalLedger::new(&grid, &params, cfg).unwrap();
        ledger.update(0.0, &u, &v).unwrap();
        let mut t = 0.0;
        for dt in times {
            t += dt;
            ledger.update(t, &u, &v).unwrap();
        }
        for (z, x) in ledger.z_per_center(0).iter().zip(ledger.x_per_center(0)) {
            prop_assert!((z - (1.0 - (-t).exp()) * x).abs() <= 1e-12 * (1.0 + x));
        }
    }

    #[test]
    fn sup_over_centers_is_lattice_insensitive(a in prop::collection::vec(0.0f64..3.0, 64)) {
        // a twice finer lattice contains the coarse one and exceeds it by at most comparability²
        let grid = GridSpec::periodic(1, 8.0, 64).unwrap();
        let params = ModelParams::new(2.0, 0.01, 1.0, 1.0, 1.0).unwrap();
        let u = ScalarField::new(grid, a).unwrap();
        let kappa = 0.25;
        let phi = build_cutoff(kappa, 1).unwrap();
        let coarse_centers = shifted_family(&phi, 1.0 / kappa, &grid).unwrap();
        let fine_centers = shifted_family(&phi, 0.5 / kappa, &grid).unwrap();
        let cfg = LedgerConfig::standard(kappa, 2.0, 2.0, Vec::new());
        let coarse = FunctionalLedger::with_centers(&grid, &params, cfg.clone(), phi.clone(), coarse_centers).unwrap();
        let fine = FunctionalLedger::with_centers(&grid, &params, cfg, phi.clone(), fine_centers).unwrap();
        let sup = |v: Vec<f64>| v.into_iter().fold(0.0f64, f64::max);
        let xc = sup(coarse.x_centers_for(&u, 3.0));
        let xf = sup(fine.x_centers_for(&u, 3.0));
        let comp = phi.radial_report(4000).comparability;
        prop_assert!(xc <= xf * (1.0 + 1e-12));
        prop_assert!(xf <= comp * comp * xc * 1.01);
    }

    #[test]
    fn config_round_trips(
        seed in 0u64..=i64::MAX as u64,
        m in 1.1f64..4.0,
        eps in 0.0f64..0.5,
        chi in -2.0f64..2.0,
        a in 0.0f64..3.0,
        b in 0.0f64..3.0,
        cells in prop::sample::select(vec![16usize, 32, 64]),
        horizon in 0.1f64..10.0,
        max in 0.1f64..5.0,
    ) {
        let cfg = RunConfig {
            name: format!("case-{seed}"),
            seed,
            params: ModelParams::new(m, eps, chi, a, b).unwrap(),
            grid: GridSpec::periodic(1, 5.0, cells).unwrap(),
            u0: InitialRecipe::RandomBandLimited { max, modes: 3, offset: 0.25 },
            v0: InitialRecipe::Constant { value: max / 2.0 },
            control: RunControl { horizon, ..RunControl::default() },
            diagnostics: Default::default(),
            mollify_per_eps: seed % 2 == 0,
        };
        let text = cfg.to_toml_string().unwrap();
        prop_assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg.clone());
        let mut wide = cfg;
        wide.seed |= 1 << 63;
        prop_assert!(wide.to_toml_string().is_err());
    }
}
