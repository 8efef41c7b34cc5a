//! Lid-driven cavity: outer vorticity stepping with an inner pseudo-time
//! streamfunction relaxation.

use super::{euler_step, trotter2_step, Scheme};
use crate::error::{Error, Result};
use crate::grid::{Boundary, Centering, FieldState, GridSpec};
use crate::rhs::{apply_wall_vorticity, relax_sweep, streamfunction_rhs, CavityVorticityRhs, Rhs};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct CavityOptions {
    pub scheme: Scheme,
    pub max_outer: usize,
    /// Cap on relaxation sweeps per outer step; the outer loop continues when it is hit.
    pub max_inner: usize,
    /// Inner stop: `‖∇²ψ + ω‖_F ≤ inner_tol · ‖ω‖_F`.
    pub inner_tol: f64,
}

impl Default for CavityOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::Trotter2,
            max_outer: 200_000,
            max_inner: 2_000,
            inner_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CavitySolution {
    pub omega: FieldState,
    pub psi: FieldState,
    /// `∂ψ/∂y` at every node; wall values use one-sided second-order differences.
    pub u: Vec<f64>,
    /// `-∂ψ/∂x` at every node.
    pub v: Vec<f64>,
    pub outer_steps: usize,
    /// `‖ω_{n+1} - ω_n‖_F` of the last outer step.
    pub final_delta: f64,
    /// `‖∇²ψ + ω‖_F / ‖ω‖_F` over interior nodes at termination.
    pub poisson_residual: f64,
    pub inner_sweeps: usize,
    pub inner_cap_hits: usize,
}

fn frob(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Node-centred `n × n` unit square with cavity walls.
pub fn cavity_grid(n: usize, lid_velocity: f64) -> Result<GridSpec> {
    let h = 1.0 / (n.max(2) - 1) as f64;
    Ok(GridSpec::plane(n, n, h, h, Boundary::CavityWalls { lid_velocity })?.with_centering(Centering::Node))
}

/// March `ω` to a steady state on a node-centred CavityWalls grid.
pub fn cavity_solve(
    grid: &GridSpec,
    re: f64,
    dt_omega: f64,
    dtau_psi: f64,
    tol_frobenius: f64,
    opts: &CavityOptions,
) -> Result<CavitySolution> {
    if grid.dims() != 2 || !matches!(grid.boundary(), Boundary::CavityWalls { .. }) {
        return Err(Error::InvalidGrid("cavity_solve needs a 2D CavityWalls grid".into()));
    }
    for (name, v) in [("dt_omega", dt_omega), ("dtau_psi", dtau_psi), ("tol", tol_frobenius)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    let (hx, hy) = (grid.spacing()[0], grid.spacing()[1]);
    let limit = 0.5 / (1.0 / (hx * hx) + 1.0 / (hy * hy));
    if dtau_psi > limit {
        return Err(Error::InvalidParameter(format!(
            "dtau_psi {dtau_psi} exceeds the explicit relaxation limit {limit}"
        )));
    }
    let mut omega = FieldState::zeros(grid.clone());
    let mut psi = FieldState::zeros(grid.clone());
    let mut rhs = CavityVorticityRhs::new(grid.clone(), psi.z.clone(), re)?;
    apply_wall_vorticity(grid, &mut omega.z, &psi.z);
    let mut scratch = vec![C64::new(0.0, 0.0); grid.len()];
    let mut inner_sweeps = 0;
    let mut inner_cap_hits = 0;
    let mut delta = f64::INFINITY;
    for step in 1..=opts.max_outer {
        rhs.set_psi(&psi.z);
        let mut next = match opts.scheme {
            Scheme::Euler1 => euler_step(&omega, &rhs.eval(&omega.z), dt_omega)?,
            Scheme::Trotter2 => trotter2_step(&omega, &rhs, dt_omega)?,
        };
        apply_wall_vorticity(grid, &mut next.z, &psi.z);
        let stop = opts.inner_tol * frob(&next.z);
        let mut sweeps = 0;
        loop {
            if sweeps == opts.max_inner {
                inner_cap_hits += 1;
                break;
            }
            let (_, moved) = relax_sweep(grid, &mut psi.z, &next.z, dtau_psi, stop, &mut scratch);
            if !moved {
                break;
            }
            sweeps += 1;
        }
        inner_sweeps += sweeps;
        apply_wall_vorticity(grid, &mut next.z, &psi.z);
        if let Some(index) = next.z.iter().chain(&psi.z).position(|z| !z.re.is_finite()) {
            return Err(Error::Divergence {
                index: index % grid.len(),
                t: next.t,
            });
        }
        delta = omega
            .z
            .iter()
            .zip(&next.z)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        psi.t = next.t;
        omega = next;
        if step % 1000 == 0 {
            log::info!("cavity step {step}: t = {:.3}, |dω| = {delta:.3e}, inner sweeps {inner_sweeps}", omega.t);
        }
        if delta <= tol_frobenius {
            let r = streamfunction_rhs(&psi, &omega)?;
            let wn = frob(&omega.z);
            let poisson_residual = if wn > 0.0 { frob(&r) / wn } else { frob(&r) };
            let (u, v) = velocities(grid, &psi.z);
            return Ok(CavitySolution {
                omega,
                psi,
                u,
                v,
                outer_steps: step,
                final_delta: delta,
                poisson_residual,
                inner_sweeps,
                inner_cap_hits,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_outer,
        residual: delta,
    })
}

/// `(u, v) = (∂ψ/∂y, -∂ψ/∂x)`: central differences inside, one-sided second order on walls.
pub fn velocities(grid: &GridSpec, psi: &[C64]) -> (Vec<f64>, Vec<f64>) {
    let (nx, ny) = (grid.extents()[0], grid.extents()[1]);
    let (hx, hy) = (grid.spacing()[0], grid.spacing()[1]);
    let p = |i: usize, j: usize| psi[i * ny + j].re;
    let d = |f: &dyn Fn(usize) -> f64, k: usize, n: usize, h: f64| {
        if k == 0 {
            (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
        } else if k == n - 1 {
            (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h)
        } else {
            (f(k + 1) - f(k - 1)) / (2.0 * h)
        }
    };
    let mut u = vec![0.0; nx * ny];
    let mut v = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            u[i * ny + j] = d(&|jj| p(i, jj), j, ny, hy);
            v[i * ny + j] = -d(&|ii| p(ii, j), i, nx, hx);
        }
    }
    (u, v)
}
