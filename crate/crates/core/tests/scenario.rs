use std::fs;

use pmchem::experiments::scenario::{run_scenario_observed, FAILED_MARKER, MANIFEST};
use pmchem::experiments::{eps_sweep, report, run_scenario, RunConfig, SnapshotFile};
use pmchem::solver::{Observer, Snapshot};

fn small(preset: &str) -> RunConfig {
    let mut cfg = RunConfig::preset(preset).unwrap();
    cfg.control.horizon = 0.5;
    cfg.control.snapshot_every = 0.25;
    cfg
}

#[test]
fn run_writes_snapshots_ledgers_and_manifest() {
    let root = tempfile::tempdir().unwrap();
    let cfg = small("random-chemotaxis");
    let out = run_scenario(&cfg, root.path()).unwrap();
    assert_eq!(out.dir, root.path().join("random-chemotaxis"));
    assert_eq!(out.manifest.snapshots.len(), 3);
    for name in &out.manifest.snapshots {
        let snap = SnapshotFile::read(&out.dir.join(name)).unwrap();
        assert!(snap.field("u").is_some() && snap.field("v").is_some());
    }
    for name in &out.manifest.ledgers {
        let text = fs::read_to_string(out.dir.join(name)).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("t,u_inf,v_inf,gradv_inf,"));
        assert!(header.ends_with(",C_kappa"));
        assert_eq!(text.lines().count(), 1 + 3);
    }
    assert!(out.dir.join(MANIFEST).exists());
    assert!(!out.dir.join(FAILED_MARKER).exists());

    let check = report(&out.dir).unwrap();
    assert!(check.reproduced);
    assert_eq!(check.ledger_rows, 3);
}

#[test]
fn failures_leave_a_marker() {
    struct StopAtSecond;
    impl Observer for StopAtSecond {
        fn on_snapshot(&mut self, s: &Snapshot) -> pmchem::Result<()> {
            if s.index == 1 {
                return Err(pmchem::Error::Cfl {
                    which: "test",
                    dt: 1.0,
                    limit: 0.5,
                });
            }
            Ok(())
        }
    }
    let root = tempfile::tempdir().unwrap();
    let cfg = small("constant-equilibrium");
    assert!(run_scenario_observed(&cfg, root.path(), &mut StopAtSecond).is_err());
    let marker = root.path().join("constant-equilibrium").join(FAILED_MARKER);
    assert!(fs::read_to_string(marker).unwrap().contains("CFL"));

    // a later successful run clears it
    run_scenario(&cfg, root.path()).unwrap();
    assert!(!root.path().join("constant-equilibrium").join(FAILED_MARKER).exists());
}

#[test]
fn barenblatt_preset_tracks_the_profile() {
    let root = tempfile::tempdir().unwrap();
    let cfg = small("pme-barenblatt");
    let out = run_scenario(&cfg, root.path()).unwrap();
    let err = out.manifest.constants.barenblatt_l1_error.expect("reference is known");
    assert!(err < 0.05, "{err}");
}

#[test]
fn equilibrium_stays_put() {
    let root = tempfile::tempdir().unwrap();
    let cfg = small("constant-equilibrium");
    let out = run_scenario(&cfg, root.path()).unwrap();
    let u = &out.summary.final_u;
    // a/b = 2 is an equilibrium of the logistic term; v decays by consumption
    assert!((u.max() - 2.0).abs() < 1e-12 && (u.min() - 2.0).abs() < 1e-12);
    assert!(out.summary.final_v.max() < 0.5);
}

#[test]
fn sweep_validates_eps_lists() {
    let cfg = small("random-chemotaxis");
    assert!(eps_sweep(&cfg, &[0.1, 0.05]).is_err());
    assert!(eps_sweep(&cfg, &[0.1, 0.1, 0.05]).is_err());
    let table = eps_sweep(&cfg, &[0.1, 0.05, 0.025]).unwrap();
    assert_eq!(table.distances.len(), 2);
    assert_eq!(table.ratios.len(), 1);
}

#[test]
fn mollification_is_opt_in() {
    let mut cfg = small("random-chemotaxis");
    let plain = cfg.initial_data_for_eps(0.1).unwrap();
    assert_eq!(plain.u0, cfg.initial_data().unwrap().u0);
    cfg.mollify_per_eps = true;
    let smooth = cfg.initial_data_for_eps(0.1).unwrap();
    assert!(smooth.u0.max() < plain.u0.max());
    assert_eq!(smooth.v0, plain.v0);
}
