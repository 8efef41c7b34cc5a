//! Streamfunction-vorticity stencils for the lid-driven cavity.
//!
//! The cavity grid is node-centred and includes the walls: node `(i, j)`
//! with `i` along `x` and `j` along `y`; the moving lid is the row
//! `j = ny - 1`. Wall nodes carry no dynamics (`F = 0` there); their
//! vorticity is imposed by [`apply_wall_vorticity`].

use super::{require_dims, require_positive, Rhs};
use crate::error::{Error, Result};
use crate::grid::{Boundary, FieldState, GridSpec};
use crate::C64;

fn check_cavity_grid(grid: &GridSpec) -> Result<()> {
    require_dims(grid, 2)?;
    if !matches!(grid.boundary(), Boundary::CavityWalls { .. }) {
        return Err(Error::InvalidGrid("cavity stencils need CavityWalls boundaries".into()));
    }
    Ok(())
}

/// Vorticity tendency `-ψ_y ω_x + ψ_x ω_y + ∇²ω / Re` with `ψ` frozen.
fn vorticity_tendency(grid: &GridSpec, omega: &[C64], psi: &[C64], re: f64) -> Vec<C64> {
    let (nx, ny) = (grid.extents()[0], grid.extents()[1]);
    let (dx, dy) = (grid.spacing()[0], grid.spacing()[1]);
    let (ax, ay) = (0.5 / dx, 0.5 / dy);
    let (lx, ly) = (1.0 / (re * dx * dx), 1.0 / (re * dy * dy));
    let mut out = vec![C64::new(0.0, 0.0); nx * ny];
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let k = i * ny + j;
            let (e, w, n, s) = (k + ny, k - ny, k + 1, k - 1);
            let psi_x = (psi[e] - psi[w]) * ax;
            let psi_y = (psi[n] - psi[s]) * ay;
            let om_x = (omega[e] - omega[w]) * ax;
            let om_y = (omega[n] - omega[s]) * ay;
            let lap = (omega[e] - 2.0 * omega[k] + omega[w]) * lx + (omega[n] - 2.0 * omega[k] + omega[s]) * ly;
            out[k] = -psi_y * om_x + psi_x * om_y + lap;
        }
    }
    out
}

fn poisson_tendency(grid: &GridSpec, psi: &[C64], omega: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); grid.len()];
    poisson_tendency_into(grid, psi, omega, &mut out);
    out
}

/// Writes `∇²ψ + ω` into the interior of `out` and returns its squared norm.
fn poisson_tendency_into(grid: &GridSpec, psi: &[C64], omega: &[C64], out: &mut [C64]) -> f64 {
    let (nx, ny) = (grid.extents()[0], grid.extents()[1]);
    let (dx, dy) = (grid.spacing()[0], grid.spacing()[1]);
    let (lx, ly) = (1.0 / (dx * dx), 1.0 / (dy * dy));
    let mut sq = 0.0;
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let k = i * ny + j;
            let r = (psi[k + ny] - 2.0 * psi[k] + psi[k - ny]) * lx
                + (psi[k + 1] - 2.0 * psi[k] + psi[k - 1]) * ly
                + omega[k];
            sq += r.norm_sqr();
            out[k] = r;
        }
    }
    sq
}

/// One explicit pseudo-time sweep `ψ ← ψ + Δτ (∇²ψ + ω)` unless the residual
/// `‖∇²ψ + ω‖_F` is already at most `stop`. Returns that residual norm and whether ψ moved.
/// `scratch` must hold one entry per node and zeros on the walls.
pub(crate) fn relax_sweep(
    grid: &GridSpec,
    psi: &mut [C64],
    omega: &[C64],
    dtau: f64,
    stop: f64,
    scratch: &mut [C64],
) -> (f64, bool) {
    let norm = poisson_tendency_into(grid, psi, omega, scratch).sqrt();
    if norm <= stop {
        return (norm, false);
    }
    for (p, r) in psi.iter_mut().zip(scratch.iter()) {
        *p += dtau * r;
    }
    (norm, true)
}

/// `F_ω` at every node, using the wall vorticity already stored in `omega`.
pub fn cavity_rhs(omega: &FieldState, psi: &FieldState, re: f64) -> Result<Vec<C64>> {
    if omega.grid != psi.grid {
        return Err(Error::GridMismatch);
    }
    check_cavity_grid(&omega.grid)?;
    require_positive("Re", re)?;
    Ok(vorticity_tendency(&omega.grid, &omega.z, &psi.z, re))
}

/// Pseudo-time tendency `∇²ψ + ω` at interior nodes (zero on the walls).
pub fn streamfunction_rhs(psi: &FieldState, omega: &FieldState) -> Result<Vec<C64>> {
    if omega.grid != psi.grid {
        return Err(Error::GridMismatch);
    }
    check_cavity_grid(&psi.grid)?;
    Ok(poisson_tendency(&psi.grid, &psi.z, &omega.z))
}

/// Thom closure: `ω_wall = -2 (ψ_adj - ψ_wall) / h^2`, minus `2 U / h` on the lid.
pub fn apply_wall_vorticity(grid: &GridSpec, omega: &mut [C64], psi: &[C64]) {
    let Boundary::CavityWalls { lid_velocity } = *grid.boundary() else {
        return;
    };
    let (nx, ny) = (grid.extents()[0], grid.extents()[1]);
    let (dx, dy) = (grid.spacing()[0], grid.spacing()[1]);
    let idx = |i: usize, j: usize| i * ny + j;
    for i in 1..nx - 1 {
        let (b, t) = (idx(i, 0), idx(i, ny - 1));
        omega[b] = -2.0 * (psi[idx(i, 1)] - psi[b]) / (dy * dy);
        omega[t] = -2.0 * (psi[idx(i, ny - 2)] - psi[t]) / (dy * dy) - 2.0 * lid_velocity / dy;
    }
    for j in 1..ny - 1 {
        let (l, r) = (idx(0, j), idx(nx - 1, j));
        omega[l] = -2.0 * (psi[idx(1, j)] - psi[l]) / (dx * dx);
        omega[r] = -2.0 * (psi[idx(nx - 2, j)] - psi[r]) / (dx * dx);
    }
    for (i, j) in [(0, 0), (0, ny - 1), (nx - 1, 0), (nx - 1, ny - 1)] {
        omega[idx(i, j)] = C64::new(0.0, 0.0);
    }
}

/// Vorticity right-hand side with the streamfunction held fixed; linear in `ω`.
#[derive(Debug, Clone)]
pub struct CavityVorticityRhs {
    grid: GridSpec,
    psi: Vec<C64>,
    re: f64,
}

impl CavityVorticityRhs {
    pub fn new(grid: GridSpec, psi: Vec<C64>, re: f64) -> Result<Self> {
        check_cavity_grid(&grid)?;
        require_positive("Re", re)?;
        if psi.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: psi.len(),
            });
        }
        Ok(Self { grid, psi, re })
    }

    pub fn set_psi(&mut self, psi: &[C64]) {
        self.psi.copy_from_slice(psi);
    }
}

impl Rhs for CavityVorticityRhs {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn eval(&self, z: &[C64]) -> Vec<C64> {
        vorticity_tendency(&self.grid, z, &self.psi, self.re)
    }

    fn jacobian_apply(&self, _z: &[C64], w: &[C64]) -> Vec<C64> {
        vorticity_tendency(&self.grid, w, &self.psi, self.re)
    }
}

/// Pseudo-time streamfunction relaxation `∂ψ/∂τ = ∇²ψ + ω` with `ω` held fixed.
#[derive(Debug, Clone)]
pub struct StreamfunctionRhs {
    grid: GridSpec,
    omega: Vec<C64>,
}

impl StreamfunctionRhs {
    pub fn new(grid: GridSpec, omega: Vec<C64>) -> Result<Self> {
        check_cavity_grid(&grid)?;
        if omega.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: omega.len(),
            });
        }
        Ok(Self { grid, omega })
    }
}

impl Rhs for StreamfunctionRhs {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn eval(&self, z: &[C64]) -> Vec<C64> {
        poisson_tendency(&self.grid, z, &self.omega)
    }

    fn jacobian_apply(&self, _z: &[C64], w: &[C64]) -> Vec<C64> {
        let zero = vec![C64::new(0.0, 0.0); w.len()];
        poisson_tendency(&self.grid, w, &zero)
    }
}
