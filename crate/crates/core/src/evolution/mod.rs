//! Mean-amplitude and variance time stepping with the post-selection step controller.

mod cavity;

pub use cavity::{cavity_grid, cavity_solve, velocities, CavityOptions, CavitySolution};

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::{fmt_f64, FieldState};
use crate::rhs::{check_len, sigma, Rhs};
use crate::C64;

/// Floor on `Re Tr(Aρ)` used by [`step_controller`].
pub const CONTROLLER_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Euler1,
    Trotter2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Controller {
    Off,
    PaBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    /// Post-selection failure budget per step.
    pub epsilon: f64,
    pub controller: Controller,
    pub save_times: Vec<f64>,
}

impl RunConfig {
    pub fn new(scheme: Scheme, dt: f64, t_end: f64) -> Self {
        Self {
            scheme,
            dt,
            t_end,
            epsilon: 0.1,
            controller: Controller::Off,
            save_times: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidParameter(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if let Some(t) = self.save_times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::InvalidParameter(format!("invalid save time {t}")));
        }
        Ok(())
    }
}

/// Diagnostics of one accepted step, evaluated at the state it started from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Time at the start of the step.
    pub t: f64,
    pub sigma_real: f64,
    pub tr_a_rho: C64,
    /// `1 - 2 dt Re Tr(Aρ)` before clipping.
    pub p_a_raw: f64,
    pub p_a: f64,
    pub dt_used: f64,
    /// `None` when the controller imposes no bound.
    pub dt_max_allowed: Option<f64>,
    pub variance_clamps: usize,
}

/// `z + dt F`, time advanced, variances untouched.
pub fn euler_step(state: &FieldState, f: &[C64], dt: f64) -> Result<FieldState> {
    if f.len() != state.z.len() {
        return Err(Error::LengthMismatch {
            expected: state.z.len(),
            found: f.len(),
        });
    }
    check_dt(dt)?;
    let z = state.z.iter().zip(f).map(|(z, f)| z + dt * f).collect();
    finish(state, z, dt)
}

/// `z + dt F + dt²/2 J_F F`.
pub fn trotter2_step<R: Rhs + ?Sized>(state: &FieldState, rhs: &R, dt: f64) -> Result<FieldState> {
    check_len(rhs, state.z.len())?;
    check_dt(dt)?;
    let f = rhs.eval(&state.z);
    let jf = rhs.jacobian_apply(&state.z, &f);
    let h = 0.5 * dt * dt;
    let z = (0..f.len()).map(|k| state.z[k] + dt * f[k] + h * jf[k]).collect();
    finish(state, z, dt)
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    Ok(())
}

fn finish(state: &FieldState, z: Vec<C64>, dt: f64) -> Result<FieldState> {
    let t = state.t + dt;
    if let Some(index) = z.iter().position(|z: &C64| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Divergence { index, t });
    }
    Ok(FieldState {
        grid: state.grid.clone(),
        z,
        var: state.var.clone(),
        t,
    })
}

/// `max(0, (1 - 2 dt Re Σ) var)` per point, with the number of points clamped to zero.
pub fn variance_step(var: &[f64], sigma_real: f64, dt: f64) -> (Vec<f64>, usize) {
    let factor = 1.0 - 2.0 * dt * sigma_real;
    let mut clamps = 0;
    let out = var
        .iter()
        .map(|&v| {
            let next = factor * v;
            if next < 0.0 {
                clamps += 1;
                0.0
            } else {
                next
            }
        })
        .collect();
    (out, clamps)
}

/// Largest step keeping the post-selection failure below `epsilon`; `None` means unconstrained.
pub fn step_controller(tr_a_rho: C64, epsilon: f64) -> Option<f64> {
    if tr_a_rho.re <= 0.0 {
        return None;
    }
    Some(epsilon / (2.0 * tr_a_rho.re.max(CONTROLLER_FLOOR)))
}

/// Output of [`run`]: saved snapshots, per-step reports and, on divergence, the cause.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<FieldState>,
    pub reports: Vec<StepReport>,
    /// Last state that passed the finiteness check.
    pub last: FieldState,
    pub divergence: Option<Error>,
}

impl Trajectory {
    /// Product of the (clipped) success probabilities of all steps.
    pub fn cumulative_p_a(&self) -> f64 {
        self.reports.iter().map(|r| r.p_a).product()
    }

    pub fn clamp_events(&self) -> usize {
        self.reports.iter().map(|r| r.variance_clamps).sum()
    }

    pub fn snapshot_at(&self, t: f64) -> Result<&FieldState> {
        self.snapshots
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-9 * t.abs().max(1.0))
            .ok_or(Error::MissingSnapshot(t))
    }

    /// Run summary: `t,dt,re_sigma,re_trArho,p_a,cum_p_a`, one row per step.
    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,dt,re_sigma,re_trArho,p_a,cum_p_a")?;
        let mut cum = 1.0;
        for r in &self.reports {
            cum *= r.p_a;
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_f64(r.t),
                fmt_f64(r.dt_used),
                fmt_f64(r.sigma_real),
                fmt_f64(r.tr_a_rho.re),
                fmt_f64(r.p_a),
                fmt_f64(cum)
            )?;
        }
        Ok(())
    }
}

/// Integrate from `initial` to `max(t_end, last save time)`.
///
/// Steps are shortened to land exactly on save times. Divergence stops the
/// run and is reported in [`Trajectory::divergence`] alongside the last valid state.
pub fn run<R: Rhs + ?Sized>(initial: &FieldState, rhs: &R, config: &RunConfig) -> Result<Trajectory> {
    config.validate()?;
    check_len(rhs, initial.z.len())?;
    let mut saves: Vec<f64> = config.save_times.clone();
    saves.sort_by(f64::total_cmp);
    saves.dedup();
    let t_final = saves.last().copied().unwrap_or(0.0).max(config.t_end);
    let mut state = initial.clone();
    let mut traj = Trajectory {
        snapshots: Vec::new(),
        reports: Vec::new(),
        last: state.clone(),
        divergence: None,
    };
    let mut next_save = 0;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * config.dt.max(b.abs());
    loop {
        while next_save < saves.len() && (close(state.t, saves[next_save]) || saves[next_save] < state.t) {
            let mut snap = state.clone();
            if close(snap.t, saves[next_save]) {
                snap.t = saves[next_save];
            }
            traj.snapshots.push(snap);
            next_save += 1;
        }
        if close(state.t, t_final) || state.t >= t_final {
            break;
        }
        let target = saves.get(next_save).copied().unwrap_or(t_final).min(t_final);
        let f = rhs.eval(&state.z);
        let tr = sigma(&state.z, &f, None)?.total;
        let dt_max = match config.controller {
            Controller::Off => None,
            Controller::PaBound => step_controller(tr, config.epsilon),
        };
        let mut dt = config.dt.min(dt_max.unwrap_or(f64::INFINITY));
        let remaining = target - state.t;
        if remaining <= dt * (1.0 + 1e-9) {
            dt = remaining;
        }
        let next = match config.scheme {
            Scheme::Euler1 => euler_step(&state, &f, dt),
            Scheme::Trotter2 => {
                let jf = rhs.jacobian_apply(&state.z, &f);
                let h = 0.5 * dt * dt;
                let z = (0..f.len()).map(|k| state.z[k] + dt * f[k] + h * jf[k]).collect();
                finish(&state, z, dt)
            }
        };
        let mut next = match next {
            Ok(s) => s,
            Err(e) => {
                log::warn!("run diverged: {e}");
                traj.divergence = Some(e);
                traj.last = state;
                return Ok(traj);
            }
        };
        if close(next.t, target) {
            next.t = target;
        }
        let (var, clamps) = variance_step(&state.var, tr.re, dt);
        if let Some(index) = var.iter().position(|v| !v.is_finite()) {
            let e = Error::Divergence { index, t: next.t };
            log::warn!("run diverged: {e}");
            traj.divergence = Some(e);
            traj.last = state;
            return Ok(traj);
        }
        if clamps > 0 {
            log::debug!("variance clamped at {clamps} points, t = {}", state.t);
        }
        next.var = var;
        let p_a_raw = 1.0 - 2.0 * dt * tr.re;
        traj.reports.push(StepReport {
            t: state.t,
            sigma_real: tr.re,
            tr_a_rho: tr,
            p_a_raw,
            p_a: p_a_raw.clamp(0.0, 1.0),
            dt_used: dt,
            dt_max_allowed: dt_max,
            variance_clamps: clamps,
        });
        state = next;
    }
    traj.last = state;
    Ok(traj)
}
