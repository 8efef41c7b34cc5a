//! Photon-loss drift, the exponential counterterm and zero-loss Richardson extrapolation.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::evolution::{run, RunConfig, Trajectory};
use crate::fock::linalg::expm_apply;
use crate::grid::{fmt_f64, FieldState, GridSpec};
use crate::rhs::{Rhs, RhsParts};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    pub gamma: f64,
    pub gamma_bar: f64,
    pub richardson_gammas: Vec<f64>,
    pub order: usize,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma", self.gamma), ("gamma_bar", self.gamma_bar)] {
            require_rate(name, v)?;
        }
        for &g in &self.richardson_gammas {
            require_rate("richardson gamma", g)?;
        }
        if self.richardson_gammas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("richardson gammas must be strictly increasing".into()));
        }
        if !self.richardson_gammas.is_empty() && self.richardson_gammas.len() < self.order + 1 {
            return Err(Error::InsufficientPoints {
                needed: self.order + 1,
                found: self.richardson_gammas.len(),
            });
        }
        Ok(())
    }
}

fn require_rate(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::InvalidParameter(format!("{name} must be a finite rate >= 0, got {v}")));
    }
    Ok(())
}

/// `F'(z) = F(z) - (γ/2) z`.
#[derive(Debug, Clone)]
pub struct NoisyRhs<R> {
    inner: R,
    gamma: f64,
}

pub fn noisy_rhs<R: Rhs>(rhs: R, gamma: f64) -> Result<NoisyRhs<R>> {
    require_rate("gamma", gamma)?;
    Ok(NoisyRhs { inner: rhs, gamma })
}

impl<R> NoisyRhs<R> {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn inner(&self) -> &R {
        &self.inner
    }
}

impl<R: Rhs> Rhs for NoisyRhs<R> {
    fn grid(&self) -> &GridSpec {
        self.inner.grid()
    }

    fn len(&self) -> usize {
        self.inner.len()
    }

    fn eval(&self, z: &[C64]) -> Vec<C64> {
        let mut f = self.inner.eval(z);
        if self.gamma != 0.0 {
            for (f, z) in f.iter_mut().zip(z) {
                *f -= 0.5 * self.gamma * z;
            }
        }
        f
    }

    fn jacobian_apply(&self, z: &[C64], w: &[C64]) -> Vec<C64> {
        let mut j = self.inner.jacobian_apply(z, w);
        if self.gamma != 0.0 {
            for (j, w) in j.iter_mut().zip(w) {
                *j -= 0.5 * self.gamma * w;
            }
        }
        j
    }

    fn parts(&self, z: &[C64]) -> RhsParts {
        let mut p = self.inner.parts(z);
        if self.gamma != 0.0 {
            for (o, z) in p.other.iter_mut().zip(z) {
                *o -= 0.5 * self.gamma * z;
            }
        }
        p
    }
}

/// `z(t) e^{γ̄ t / 2}`.
pub fn counterterm_state(state: &FieldState, gamma_bar: f64) -> FieldState {
    let mut out = state.clone();
    if gamma_bar != 0.0 {
        let s = (0.5 * gamma_bar * state.t).exp();
        for z in &mut out.z {
            *z *= s;
        }
    }
    out
}

/// Apply [`counterterm_state`] to every snapshot and to the final state.
pub fn counterterm(traj: &Trajectory, gamma_bar: f64) -> Result<Trajectory> {
    require_rate("gamma_bar", gamma_bar)?;
    let mut out = traj.clone();
    out.snapshots = traj.snapshots.iter().map(|s| counterterm_state(s, gamma_bar)).collect();
    out.last = counterterm_state(&traj.last, gamma_bar);
    Ok(out)
}

/// Lagrange weights that evaluate the interpolant through `gammas` at zero.
pub fn lagrange_weights_at_zero(gammas: &[f64]) -> Result<Vec<f64>> {
    for (i, &a) in gammas.iter().enumerate() {
        if gammas[..i].contains(&a) {
            return Err(Error::DuplicateRate(a));
        }
    }
    Ok((0..gammas.len())
        .map(|i| {
            (0..gammas.len())
                .filter(|&j| j != i)
                .map(|j| -gammas[j] / (gammas[i] - gammas[j]))
                .product()
        })
        .collect())
}

/// Degree-`order` polynomial extrapolation to `γ = 0`, pointwise.
///
/// Uses the `order + 1` smallest rates when more are supplied.
pub fn richardson_extrapolate(values: &[(f64, Vec<C64>)], order: usize) -> Result<Vec<C64>> {
    if values.len() < order + 1 {
        return Err(Error::InsufficientPoints {
            needed: order + 1,
            found: values.len(),
        });
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].0.total_cmp(&values[b].0));
    let all: Vec<f64> = idx.iter().map(|&i| values[i].0).collect();
    lagrange_weights_at_zero(&all)?;
    let used = &idx[..order + 1];
    let gammas: Vec<f64> = used.iter().map(|&i| values[i].0).collect();
    let w = lagrange_weights_at_zero(&gammas)?;
    let n = values[used[0]].1.len();
    if let Some(&bad) = used.iter().find(|&&i| values[i].1.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            found: values[bad].1.len(),
        });
    }
    Ok((0..n)
        .map(|k| used.iter().zip(&w).map(|(&i, &wi)| values[i].1[k] * wi).sum())
        .collect())
}

pub fn l2_distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// Exact flow `e^{Jt} z₀` of a linear right-hand side, `J` its Jacobian.
///
/// Fails when `F` is not linear (`F(0) ≠ 0`, as with inhomogeneous Dirichlet ghosts,
/// or `F(z₀) ≠ J z₀`).
pub fn exact_linear_flow<R: Rhs + ?Sized>(rhs: &R, initial: &FieldState, times: &[f64]) -> Result<Vec<FieldState>> {
    let n = rhs.len();
    if initial.z.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: initial.z.len(),
        });
    }
    let zero = vec![C64::new(0.0, 0.0); n];
    let mut jac = DMatrix::<C64>::zeros(n, n);
    let mut e = zero.clone();
    for col in 0..n {
        e[col] = C64::new(1.0, 0.0);
        jac.set_column(col, &DVector::from_vec(rhs.jacobian_apply(&zero, &e)));
        e[col] = C64::new(0.0, 0.0);
    }
    let z0 = DVector::from_vec(initial.z.clone());
    let scale = z0.norm().max(1.0);
    let offset = DVector::from_vec(rhs.eval(&zero)).norm();
    let mismatch = (DVector::from_vec(rhs.eval(&initial.z)) - &jac * &z0).norm();
    if offset > 1e-12 * scale || mismatch > 1e-10 * scale * (1.0 + jac.norm()) {
        return Err(Error::InvalidParameter("right-hand side is not linear".into()));
    }
    Ok(times
        .iter()
        .map(|&t| {
            let z = expm_apply(&jac, &z0, t - initial.t);
            FieldState {
                grid: initial.grid.clone(),
                z: z.iter().copied().collect(),
                var: initial.var.clone(),
                t,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub gamma_bar: f64,
    pub t: f64,
    pub l2_error_raw: f64,
    pub l2_error_counterterm: f64,
    pub l2_error_richardson: f64,
}

/// Run the noiseless reference, every noisy rate and the Richardson set, and tabulate
/// L² errors against the reference at each save time. `gamma_bar = calibration · γ`.
pub fn noise_sweep<R: Rhs>(
    initial: &FieldState,
    rhs: &R,
    config: &RunConfig,
    gammas: &[f64],
    calibration: f64,
    richardson: &NoiseConfig,
) -> Result<Vec<SweepRow>> {
    require_rate("calibration", calibration)?;
    richardson.validate()?;
    let solve = |gamma: f64| -> Result<Trajectory> {
        let traj = run(initial, &noisy_rhs(rhs, gamma)?, config)?;
        match traj.divergence {
            Some(e) => Err(e),
            None => Ok(traj),
        }
    };
    let clean = solve(0.0)?;
    let extra: Vec<Trajectory> = richardson
        .richardson_gammas
        .iter()
        .map(|&g| solve(g))
        .collect::<Result<_>>()?;
    let mut rich = Vec::with_capacity(clean.snapshots.len());
    for (i, snap) in clean.snapshots.iter().enumerate() {
        if extra.is_empty() {
            rich.push(f64::NAN);
            continue;
        }
        let values: Vec<(f64, Vec<C64>)> = richardson
            .richardson_gammas
            .iter()
            .zip(&extra)
            .map(|(&g, tr)| (g, tr.snapshots[i].z.clone()))
            .collect();
        rich.push(l2_distance(&richardson_extrapolate(&values, richardson.order)?, &snap.z));
    }
    let mut rows = Vec::new();
    for &gamma in gammas {
        let gamma_bar = calibration * gamma;
        let noisy = solve(gamma)?;
        let corrected = counterterm(&noisy, gamma_bar)?;
        for (i, snap) in clean.snapshots.iter().enumerate() {
            rows.push(SweepRow {
                gamma,
                gamma_bar,
                t: snap.t,
                l2_error_raw: l2_distance(&noisy.snapshots[i].z, &snap.z),
                l2_error_counterterm: l2_distance(&corrected.snapshots[i].z, &snap.z),
                l2_error_richardson: rich[i],
            });
        }
    }
    Ok(rows)
}

pub const SWEEP_CSV_HEADER: &str = "gamma,gamma_bar,t,l2_error_raw,l2_error_counterterm,l2_error_richardson";

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(r.gamma),
            fmt_f64(r.gamma_bar),
            fmt_f64(r.t),
            fmt_f64(r.l2_error_raw),
            fmt_f64(r.l2_error_counterterm),
            fmt_f64(r.l2_error_richardson)
        )?;
    }
    Ok(())
}
