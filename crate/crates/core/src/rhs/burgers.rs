use super::{require_dims, require_positive, tangent_at, Rhs, RhsParts};
use crate::error::Result;
use crate::grid::GridSpec;
use crate::C64;

/// Central-difference viscous Burgers stencil
/// `F_k = (z_{k+1} - 2 z_k + z_{k-1}) / (Re dx^2) - z_k (z_{k+1} - z_{k-1}) / (2 dx)`.
#[derive(Debug, Clone)]
pub struct BurgersRhs {
    grid: GridSpec,
    re: f64,
}

impl BurgersRhs {
    pub fn new(grid: GridSpec, re: f64) -> Result<Self> {
        require_dims(&grid, 1)?;
        require_positive("Re", re)?;
        Ok(Self { grid, re })
    }

    pub fn reynolds(&self) -> f64 {
        self.re
    }

    fn diff_coeff(&self) -> f64 {
        let dx = self.grid.spacing()[0];
        1.0 / (self.re * dx * dx)
    }

    fn conv_coeff(&self) -> f64 {
        0.5 / self.grid.spacing()[0]
    }
}

impl Rhs for BurgersRhs {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn eval(&self, z: &[C64]) -> Vec<C64> {
        self.parts(z).total()
    }

    fn parts(&self, z: &[C64]) -> RhsParts {
        let (nu, c) = (self.diff_coeff(), self.conv_coeff());
        let mut p = RhsParts::zeros(z.len());
        for k in 0..z.len() {
            let zp = self.grid.value_at(z, k, 0, 1);
            let zm = self.grid.value_at(z, k, 0, -1);
            p.diff[k] = (zp - 2.0 * z[k] + zm) * nu;
            p.conv_or_adv[k] = -z[k] * (zp - zm) * c;
        }
        p
    }

    fn jacobian_apply(&self, z: &[C64], w: &[C64]) -> Vec<C64> {
        let (nu, c) = (self.diff_coeff(), self.conv_coeff());
        (0..z.len())
            .map(|k| {
                let zp = self.grid.value_at(z, k, 0, 1);
                let zm = self.grid.value_at(z, k, 0, -1);
                let wp = tangent_at(&self.grid, w, k, 0, 1);
                let wm = tangent_at(&self.grid, w, k, 0, -1);
                (wp - 2.0 * w[k] + wm) * nu - (w[k] * (zp - zm) + z[k] * (wp - wm)) * c
            })
            .collect()
    }
}
