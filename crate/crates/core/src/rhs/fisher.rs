use super::{require_dims, require_positive, tangent_at, Rhs, RhsParts};
use crate::error::{Error, Result};
use crate::grid::{Boundary, GridSpec, VelocityField};
use crate::C64;

/// 2D advection-diffusion-reaction (Fisher-KPP) stencil.
///
/// Advection is in flux form with the velocity sampled at the neighbor:
/// `-(u_x c)_{i+1} + (u_x c)_{i-1}` over `2 dx`, likewise along `y`.
/// Diffusion is the 5-point Laplacian over `Pe`; reaction is `Da (z - z^2)`.
#[derive(Debug, Clone)]
pub struct FisherRhs {
    grid: GridSpec,
    pe: f64,
    da: f64,
    velocity: VelocityField,
    // Advection weights for the (+x, -x, +y, -y) neighbors of every point.
    adv: Vec<[f64; 4]>,
}

const NEIGHBORS: [(usize, isize); 4] = [(0, 1), (0, -1), (1, 1), (1, -1)];

impl FisherRhs {
    pub fn new(grid: GridSpec, pe: f64, da: f64, velocity: VelocityField) -> Result<Self> {
        require_dims(&grid, 2)?;
        require_positive("Pe", pe)?;
        if !da.is_finite() {
            return Err(Error::InvalidParameter(format!("Da must be finite, got {da}")));
        }
        velocity.check(&grid)?;
        let [nx, ny] = [grid.extents()[0] as isize, grid.extents()[1] as isize];
        let periodic = matches!(grid.boundary(), Boundary::Periodic);
        let adv = (0..grid.len())
            .map(|k| {
                let [i, j] = grid.unflat(k);
                let mut w = [0.0; 4];
                for (slot, &(axis, o)) in NEIGHBORS.iter().enumerate() {
                    let (mut ni, mut nj) = (i as isize, j as isize);
                    if axis == 0 {
                        ni += o;
                    } else {
                        nj += o;
                    }
                    if periodic {
                        ni = ni.rem_euclid(nx);
                        nj = nj.rem_euclid(ny);
                    }
                    let (ux, uy) = velocity.at(&grid, ni, nj);
                    let (u, h) = if axis == 0 {
                        (ux, grid.spacing()[0])
                    } else {
                        (uy, grid.spacing()[1])
                    };
                    w[slot] = -(o as f64) * u / (2.0 * h);
                }
                w
            })
            .collect();
        Ok(Self {
            grid,
            pe,
            da,
            velocity,
            adv,
        })
    }

    pub fn peclet(&self) -> f64 {
        self.pe
    }

    pub fn damkohler(&self) -> f64 {
        self.da
    }

    pub fn velocity(&self) -> &VelocityField {
        &self.velocity
    }

    /// Advection weight on neighbor slot `(+x, -x, +y, -y)` of point `k`.
    pub fn advection_weights(&self, k: usize) -> [f64; 4] {
        self.adv[k]
    }

    fn linear_parts(&self, v: &[C64], k: usize, ghost_value: bool) -> (C64, C64) {
        let (dx, dy) = (self.grid.spacing()[0], self.grid.spacing()[1]);
        let at = |axis, o| {
            if ghost_value {
                self.grid.value_at(v, k, axis, o)
            } else {
                tangent_at(&self.grid, v, k, axis, o)
            }
        };
        let (xp, xm, yp, ym) = (at(0, 1), at(0, -1), at(1, 1), at(1, -1));
        let w = self.adv[k];
        let adv = xp * w[0] + xm * w[1] + yp * w[2] + ym * w[3];
        let diff = ((xp - 2.0 * v[k] + xm) / (dx * dx) + (yp - 2.0 * v[k] + ym) / (dy * dy)) / self.pe;
        (adv, diff)
    }
}

impl Rhs for FisherRhs {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn eval(&self, z: &[C64]) -> Vec<C64> {
        self.parts(z).total()
    }

    fn parts(&self, z: &[C64]) -> RhsParts {
        let mut p = RhsParts::zeros(z.len());
        for k in 0..z.len() {
            let (adv, diff) = self.linear_parts(z, k, true);
            p.conv_or_adv[k] = adv;
            p.diff[k] = diff;
            p.reac[k] = self.da * (z[k] - z[k] * z[k]);
        }
        p
    }

    fn jacobian_apply(&self, z: &[C64], w: &[C64]) -> Vec<C64> {
        (0..z.len())
            .map(|k| {
                let (adv, diff) = self.linear_parts(w, k, false);
                adv + diff + self.da * (1.0 - 2.0 * z[k]) * w[k]
            })
            .collect()
    }
}
