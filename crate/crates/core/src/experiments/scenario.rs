use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{fit_c0, moser_report, FunctionalLedger, LedgerConfig, MoserLadder};
use crate::error::{Error, Result};
use crate::grid::{integrate, BallCover, ScalarField};
use crate::solver::{run, ModelParams, Observer, RunSummary, Snapshot, StepReport};

use super::config::RunConfig;
use super::snapshot::SnapshotFile;

pub const FAILED_MARKER: &str = "FAILED";
pub const MANIFEST: &str = "manifest.json";

/// Output root from `PMCHEM_OUT`, or `./runs`.
pub fn output_root() -> PathBuf {
    std::env::var_os("PMCHEM_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Package version, with `git describe` appended when available.
pub fn version_string() -> String {
    let base = format!("v{}", env!("CARGO_PKG_VERSION"));
    let described = std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty());
    match described {
        Some(d) => format!("{base}-{d}"),
        None => base,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub t_final: f64,
    pub accepted: usize,
    pub rejected: usize,
    pub max_iterations: usize,
    pub max_contraction: f64,
    pub total_clipped_mass: f64,
    pub min_pre_clip: f64,
    pub sup_u_inf: f64,
    pub sup_grad_v_inf: f64,
}

impl From<&RunSummary> for StepStats {
    fn from(s: &RunSummary) -> Self {
        StepStats {
            t_final: s.t_final,
            accepted: s.accepted,
            rejected: s.rejected,
            max_iterations: s.max_iterations,
            max_contraction: s.max_contraction,
            total_clipped_mass: s.total_clipped_mass,
            min_pre_clip: s.min_pre_clip,
            sup_u_inf: s.sup_u_inf,
            sup_grad_v_inf: s.sup_grad_v_inf,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaConstants {
    pub kappa: f64,
    pub c0: f64,
    pub c0_degenerate: bool,
    pub moser_rungs: Vec<f64>,
    pub moser_w: Vec<f64>,
    pub moser_reference: f64,
    pub moser_relative_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedConstants {
    pub per_kappa: Vec<KappaConstants>,
    pub barenblatt_l1_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub steps: StepStats,
    pub snapshots: Vec<String>,
    pub ledgers: Vec<String>,
    pub constants: FittedConstants,
}

pub fn snapshot_name(index: usize) -> String {
    format!("snapshot_{index:05}.bin")
}

pub fn ledger_name(position: usize, kappa: f64) -> String {
    if position == 0 {
        "ledger.csv".into()
    } else {
        format!("ledger_kappa{kappa}.csv")
    }
}

pub fn ladder_for(config: &RunConfig) -> Result<MoserLadder> {
    MoserLadder::reaching(config.grid.dim(), config.params.m(), config.diagnostics.moser_r_min)
}

/// One fresh ledger per configured `κ`.
pub fn ledgers_for(config: &RunConfig) -> Result<Vec<FunctionalLedger>> {
    let ladder = ladder_for(config)?;
    config
        .diagnostics
        .kappa
        .iter()
        .map(|&kappa| {
            let cfg = LedgerConfig {
                kappa,
                rs: config.ledger_rs(),
                p: config.diagnostics.p,
                rungs: ladder.rungs.clone(),
                center_spacing: None,
                per_step: false,
            };
            FunctionalLedger::new(&config.grid, &config.params, cfg)
        })
        .collect()
}

/// Constants derived from filled ledgers and the final density.
pub fn fit_constants(
    config: &RunConfig,
    ledgers: &[FunctionalLedger],
    final_u: &ScalarField,
) -> Result<FittedConstants> {
    let ladder = ladder_for(config)?;
    let per_kappa = ledgers
        .iter()
        .map(|l| {
            let sc = fit_c0(l)?;
            let mr = moser_report(l, &ladder)?;
            Ok(KappaConstants {
                kappa: l.config().kappa,
                c0: sc.c0,
                c0_degenerate: sc.degenerate,
                moser_rungs: ladder.rungs.clone(),
                moser_w: mr.w,
                moser_reference: mr.reference,
                moser_relative_error: mr.top_relative_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let barenblatt_l1_error = match config.barenblatt_reference() {
        Some((b, t)) => {
            let exact = b.field(&config.grid, t)?;
            Some(integrate(&final_u.zip_map(&exact, |a, e| (a - e).abs())?, None)?)
        }
        None => None,
    };
    Ok(FittedConstants {
        per_kappa,
        barenblatt_l1_error,
    })
}

struct RunObservers<'a> {
    dir: Option<&'a Path>,
    params: ModelParams,
    snapshot_files: Vec<String>,
    ledgers: Vec<FunctionalLedger>,
    extra: &'a mut dyn Observer,
}

impl Observer for RunObservers<'_> {
    fn on_snapshot(&mut self, s: &Snapshot) -> Result<()> {
        if let Some(dir) = self.dir {
            let name = snapshot_name(s.index);
            SnapshotFile::new(&self.params, s.t, vec![("u", s.u.clone()), ("v", s.v.clone())])?
                .write(&dir.join(&name))?;
            self.snapshot_files.push(name);
        }
        for l in &mut self.ledgers {
            l.on_snapshot(s)?;
        }
        self.extra.on_snapshot(s)
    }

    fn on_step(&mut self, r: &StepReport, u: &ScalarField, v: &ScalarField) -> Result<()> {
        self.extra.on_step(r, u, v)
    }
}

fn write_ledgers(dir: &Path, ledgers: &[FunctionalLedger]) -> Result<Vec<String>> {
    ledgers
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let name = ledger_name(i, l.config().kappa);
            l.write_csv(fs::File::create(dir.join(&name))?)?;
            Ok(name)
        })
        .collect()
}

/// Everything a finished run produced.
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub summary: RunSummary,
    pub ledgers: Vec<FunctionalLedger>,
}

/// Runs one configuration into `root/<name>`: snapshot files, one ledger CSV
/// per `κ`, and `manifest.json`. On a solver error the partial outputs stay
/// and a `FAILED` file holds the message.
pub fn run_scenario(config: &RunConfig, root: &Path) -> Result<RunOutcome> {
    run_scenario_observed(config, root, &mut crate::solver::NoObserver)
}

pub fn run_scenario_observed(config: &RunConfig, root: &Path, extra: &mut dyn Observer) -> Result<RunOutcome> {
    config.validate()?;
    let dir = root.join(&config.name);
    fs::create_dir_all(&dir)?;
    let marker = dir.join(FAILED_MARKER);
    if marker.exists() {
        fs::remove_file(&marker)?;
    }
    let data = config.initial_data()?;
    let mut obs = RunObservers {
        dir: Some(&dir),
        params: config.params,
        snapshot_files: Vec::new(),
        ledgers: ledgers_for(config)?,
        extra,
    };
    let result = run(&config.params, &data, &config.control, &mut obs);
    let ledger_files = write_ledgers(&dir, &obs.ledgers)?;
    let summary = match result {
        Ok(s) => s,
        Err(e) => {
            fs::write(&marker, format!("{e}\n"))?;
            return Err(e);
        }
    };
    let constants = fit_constants(config, &obs.ledgers, &summary.final_u)?;
    let manifest = Manifest {
        name: config.name.clone(),
        version: version_string(),
        seed: config.seed,
        config: config.clone(),
        steps: StepStats::from(&summary),
        snapshots: obs.snapshot_files,
        ledgers: ledger_files,
        constants,
    };
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)?)?;
    let ledgers = obs.ledgers;
    Ok(RunOutcome {
        dir,
        manifest,
        summary,
        ledgers,
    })
}

/// Runs in memory and returns every snapshot.
pub fn run_in_memory(config: &RunConfig, eps: Option<f64>) -> Result<(RunSummary, Vec<Snapshot>)> {
    let params = match eps {
        Some(e) => config.params.with_eps(e)?,
        None => config.params,
    };
    let data = match eps {
        Some(e) => config.initial_data_for_eps(e)?,
        None => config.initial_data()?,
    };
    let mut rec = crate::solver::TrajectoryRecorder::default();
    let summary = run(&params, &data, &config.control, &mut rec)?;
    Ok((summary, rec.snapshots))
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepTable {
    pub eps: Vec<f64>,
    /// `d_k = sup_t sup_{x₀} ‖u_{ε_k} - u_{ε_{k+1}}‖_{L²(B₁(x₀))}`
    pub distances: Vec<f64>,
    pub ratios: Vec<f64>,
    pub sup_u: Vec<f64>,
    pub cauchy: bool,
}

impl SweepTable {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["eps_k", "eps_k1", "distance", "ratio"])?;
        for k in 0..self.distances.len() {
            let ratio = if k == 0 {
                String::new()
            } else {
                self.ratios[k - 1].to_string()
            };
            w.write_record([
                self.eps[k].to_string(),
                self.eps[k + 1].to_string(),
                self.distances[k].to_string(),
                ratio,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs one member per `ε` in parallel and tabulates successive distances.
pub fn eps_sweep(config: &RunConfig, eps: &[f64]) -> Result<SweepTable> {
    if eps.len() < 3 {
        return Err(Error::invalid("an ε-sweep needs at least three values"));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid("ε values must be strictly decreasing"));
    }
    config.params.with_eps(eps[0])?;
    let runs = eps
        .par_iter()
        .map(|&e| run_in_memory(config, Some(e)))
        .collect::<Result<Vec<_>>>()?;
    let cover = BallCover::lattice(&config.grid, 1.0, 1.0)?;
    let distances = runs
        .windows(2)
        .map(|pair| {
            let (a, b) = (&pair[0].1, &pair[1].1);
            a.iter().zip(b).try_fold(0.0f64, |best, (sa, sb)| {
                let d = sa.u.zip_map(&sb.u, |x, y| x - y)?;
                Ok(best.max(cover.sup_lp(&d, 2.0)?))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let ratios: Vec<f64> = distances.windows(2).map(|w| w[1] / w[0]).collect();
    Ok(SweepTable {
        eps: eps.to_vec(),
        cauchy: ratios.iter().all(|r| *r < 1.0),
        sup_u: runs.iter().map(|(s, _)| s.sup_u_inf).collect(),
        distances,
        ratios,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportCheck {
    pub manifest: FittedConstants,
    pub recomputed: FittedConstants,
    pub reproduced: bool,
    pub ledger_rows: usize,
}

/// Rebuilds the ledgers from the snapshot files of a run directory and
/// recomputes every fitted constant in its manifest.
pub fn report(dir: &Path) -> Result<ReportCheck> {
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST))?)?;
    let config = &manifest.config;
    let mut ledgers = ledgers_for(config)?;
    let mut last_u = None;
    for name in &manifest.snapshots {
        let snap = SnapshotFile::read(&dir.join(name))?;
        let (u, v) = match (snap.field("u"), snap.field("v")) {
            (Some(u), Some(v)) => (u.clone(), v.clone()),
            _ => {
                return Err(Error::Snapshot {
                    path: dir.join(name),
                    reason: "missing u or v".into(),
                })
            }
        };
        for l in &mut ledgers {
            l.update(snap.header.time, &u, &v)?;
        }
        last_u = Some(u);
    }
    let last_u = last_u.ok_or_else(|| Error::invalid("run directory has no snapshots"))?;
    let recomputed = fit_constants(config, &ledgers, &last_u)?;
    Ok(ReportCheck {
        reproduced: recomputed == manifest.constants,
        ledger_rows: ledgers.first().map(|l| l.rows().len()).unwrap_or(0),
        manifest: manifest.constants,
        recomputed,
    })
}
