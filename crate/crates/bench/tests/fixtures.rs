use pmchem::solver::{picard_step, PicardWorkspace};
use pmchem::{ModelParams, PicardConfig};
use pmchem_bench::smooth_pair;

#[test]
fn benched_step_is_well_posed() {
    let params = ModelParams::new(2.0, 0.01, 1.0, 1.0, 1.0).unwrap();
    for (dim, cells) in [(1, 512), (2, 48)] {
        let (u, v) = smooth_pair(dim, cells);
        let dt = 0.5 * params.stable_dt(&u, &v).min(0.01);
        let ws = PicardWorkspace::new(u.grid(), &params).unwrap();
        let (u1, _, report) = picard_step(&params, &u, &v, dt, &PicardConfig::default(), &ws).unwrap();
        assert!(report.contraction_factor < 1.0);
        assert!(u1.min() > 0.0);
    }
}
