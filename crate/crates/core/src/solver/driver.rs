use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;

use super::picard::{picard_step, PicardWorkspace};
use super::{InitialData, ModelParams, PicardConfig, StepReport};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunControl {
    pub horizon: f64,
    pub dt0: f64,
    pub dt_max: f64,
    /// Grow `dt` by 1.2 after 10 accepted steps (up to `dt_max` and the
    /// stability limit). Rejected steps halve `dt` either way.
    pub adaptive: bool,
    pub snapshot_every: f64,
    pub min_dt: f64,
    pub picard: PicardConfig,
}

impl Default for RunControl {
    fn default() -> Self {
        RunControl {
            horizon: 1.0,
            dt0: 1e-3,
            dt_max: 0.05,
            adaptive: true,
            snapshot_every: 0.1,
            min_dt: 1e-12,
            picard: PicardConfig::default(),
        }
    }
}

impl RunControl {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.horizon, self.dt0, self.dt_max, self.snapshot_every, self.min_dt];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid(
                "horizon, dt0, dt_max, snapshot_every, min_dt must be positive",
            ));
        }
        self.picard.validate()
    }

    /// Snapshot times `0, τ, 2τ, …` capped by the horizon.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let count = (self.horizon / self.snapshot_every * (1.0 + 1e-12)).floor() as usize;
        let mut out: Vec<f64> = (0..=count).map(|k| k as f64 * self.snapshot_every).collect();
        if self.horizon - out[out.len() - 1] > 1e-9 * self.snapshot_every {
            out.push(self.horizon);
        } else {
            let last = out.len() - 1;
            out[last] = self.horizon;
        }
        out
    }
}

/// Immutable state at a snapshot time.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub index: usize,
    pub t: f64,
    pub u: ScalarField,
    pub v: ScalarField,
}

pub trait Observer {
    fn on_snapshot(&mut self, snapshot: &Snapshot) -> Result<()>;

    /// Called after every accepted step with the new state.
    fn on_step(&mut self, _report: &StepReport, _u: &ScalarField, _v: &ScalarField) -> Result<()> {
        Ok(())
    }
}

pub struct NoObserver;

impl Observer for NoObserver {
    fn on_snapshot(&mut self, _: &Snapshot) -> Result<()> {
        Ok(())
    }
}

/// Keeps every snapshot and step report in memory.
#[derive(Default)]
pub struct TrajectoryRecorder {
    pub snapshots: Vec<Snapshot>,
    pub steps: Vec<StepReport>,
}

impl Observer for TrajectoryRecorder {
    fn on_snapshot(&mut self, snapshot: &Snapshot) -> Result<()> {
        self.snapshots.push(snapshot.clone());
        Ok(())
    }

    fn on_step(&mut self, report: &StepReport, _u: &ScalarField, _v: &ScalarField) -> Result<()> {
        self.steps.push(report.clone());
        Ok(())
    }
}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn on_snapshot(&mut self, s: &Snapshot) -> Result<()> {
        self.0.on_snapshot(s)?;
        self.1.on_snapshot(s)
    }

    fn on_step(&mut self, r: &StepReport, u: &ScalarField, v: &ScalarField) -> Result<()> {
        self.0.on_step(r, u, v)?;
        self.1.on_step(r, u, v)
    }
}

impl<T: Observer + ?Sized> Observer for &mut T {
    fn on_snapshot(&mut self, s: &Snapshot) -> Result<()> {
        (**self).on_snapshot(s)
    }

    fn on_step(&mut self, r: &StepReport, u: &ScalarField, v: &ScalarField) -> Result<()> {
        (**self).on_step(r, u, v)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub t_final: f64,
    pub accepted: usize,
    pub rejected: usize,
    pub max_iterations: usize,
    pub max_contraction: f64,
    pub total_clipped_mass: f64,
    pub min_pre_clip: f64,
    pub sup_u_inf: f64,
    pub sup_grad_v_inf: f64,
    pub final_dt: f64,
    #[serde(skip)]
    pub final_u: ScalarField,
    #[serde(skip)]
    pub final_v: ScalarField,
}

fn is_retryable(e: &Error) -> bool {
    matches!(
        e,
        Error::Cfl { .. } | Error::PicardMaxIters { .. } | Error::LinearSolve { .. }
    )
}

/// Advances `(u, v)` to `ctrl.horizon`, landing exactly on every snapshot
/// time. Recoverable step failures halve `dt`; anything else is returned
/// immediately.
pub fn run(
    params: &ModelParams,
    data: &InitialData,
    ctrl: &RunControl,
    observer: &mut dyn Observer,
) -> Result<RunSummary> {
    ctrl.validate()?;
    let grid = *data.u0.grid();
    let ws = PicardWorkspace::new(&grid, params)?;
    let mut u = data.u0.clone();
    let mut v = data.v0.clone();
    let mut t = 0.0;
    let mut dt = ctrl.dt0.min(ctrl.dt_max);
    let mut since_growth = 0usize;
    let mut summary = RunSummary {
        t_final: 0.0,
        accepted: 0,
        rejected: 0,
        max_iterations: 0,
        max_contraction: 0.0,
        total_clipped_mass: 0.0,
        min_pre_clip: u.min(),
        sup_u_inf: u.max_abs(),
        sup_grad_v_inf: crate::grid::max_face_gradient(&v),
        final_dt: dt,
        final_u: u.clone(),
        final_v: v.clone(),
    };
    let times = ctrl.snapshot_times();
    observer.on_snapshot(&Snapshot {
        index: 0,
        t: 0.0,
        u: u.clone(),
        v: v.clone(),
    })?;
    for (index, &target) in times.iter().enumerate().skip(1) {
        while t < target {
            let remaining = target - t;
            let mut step = dt;
            if ctrl.adaptive {
                step = step.min(params.stable_dt(&u, &v));
            }
            let lands = step >= remaining * (1.0 - 1e-9);
            if lands {
                step = remaining;
            }
            match picard_step(params, &u, &v, step, &ctrl.picard, &ws) {
                Ok((u_next, v_next, mut report)) => {
                    t = if lands { target } else { t + step };
                    report.t = t;
                    u = u_next;
                    v = v_next;
                    summary.accepted += 1;
                    summary.max_iterations = summary.max_iterations.max(report.iterations);
                    summary.max_contraction = summary.max_contraction.max(report.contraction_factor);
                    summary.total_clipped_mass += report.clipped_mass;
                    summary.min_pre_clip = summary.min_pre_clip.min(report.min_pre_clip);
                    summary.sup_u_inf = summary.sup_u_inf.max(report.u_inf);
                    summary.sup_grad_v_inf = summary.sup_grad_v_inf.max(report.grad_v_inf);
                    observer.on_step(&report, &u, &v)?;
                    since_growth += 1;
                    if ctrl.adaptive && since_growth >= 10 {
                        dt = (dt * 1.2).min(ctrl.dt_max);
                        since_growth = 0;
                    }
                }
                Err(e) if is_retryable(&e) => {
                    summary.rejected += 1;
                    since_growth = 0;
                    dt = step / 2.0;
                    if dt < ctrl.min_dt {
                        return Err(Error::StepUnderflow { t, dt });
                    }
                }
                Err(e) => return Err(e),
            }
        }
        observer.on_snapshot(&Snapshot {
            index,
            t,
            u: u.clone(),
            v: v.clone(),
        })?;
    }
    summary.t_final = t;
    summary.final_dt = dt;
    summary.final_u = u;
    summary.final_v = v;
    Ok(summary)
}
