//! Polynomial stencil right-hand sides `F(z)`, the overlap scalar
//! `Σ(z) = Σ_k conj(z_k) F_k(z)`, and Jacobian-vector products.

mod burgers;
mod cavity;
mod fisher;
mod linear;
pub mod spec;

pub use burgers::BurgersRhs;
pub use cavity::{apply_wall_vorticity, cavity_rhs, streamfunction_rhs, CavityVorticityRhs, StreamfunctionRhs};
pub(crate) use cavity::relax_sweep;
pub use fisher::FisherRhs;
pub use linear::LinearStencilRhs;
pub use spec::{
    full_stencil_spec, manhattan_ball, nearest_neighbor_taps, rhs_to_spec, BuiltinRhs, Factor, Monomial, RhsParams,
    RhsSpec, SpecRhs,
};

use crate::error::{Error, Result};
use crate::grid::{FieldState, GridSpec};
use crate::C64;

/// A semi-discrete right-hand side `dz/dt = F(z)` on a fixed grid.
///
/// `F` must be holomorphic in `z` (polynomial, no conjugates) so the
/// Jacobian is the complex derivative.
pub trait Rhs: Sync {
    fn grid(&self) -> &GridSpec;

    /// Number of complex unknowns; `grid().len()` unless several fields share the grid.
    fn len(&self) -> usize {
        self.grid().len()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn eval(&self, z: &[C64]) -> Vec<C64>;

    /// `Σ_j (∂F_k/∂z_j)(z) w_j`.
    fn jacobian_apply(&self, z: &[C64], w: &[C64]) -> Vec<C64>;

    /// Labeled split of `F(z)`; unlabeled right-hand sides report everything as `other`.
    fn parts(&self, z: &[C64]) -> RhsParts {
        RhsParts::unlabeled(self.eval(z))
    }
}

impl<R: Rhs + ?Sized> Rhs for &R {
    fn grid(&self) -> &GridSpec {
        (**self).grid()
    }
    fn len(&self) -> usize {
        (**self).len()
    }
    fn eval(&self, z: &[C64]) -> Vec<C64> {
        (**self).eval(z)
    }
    fn jacobian_apply(&self, z: &[C64], w: &[C64]) -> Vec<C64> {
        (**self).jacobian_apply(z, w)
    }
    fn parts(&self, z: &[C64]) -> RhsParts {
        (**self).parts(z)
    }
}

impl<R: Rhs + ?Sized> Rhs for Box<R> {
    fn grid(&self) -> &GridSpec {
        (**self).grid()
    }
    fn len(&self) -> usize {
        (**self).len()
    }
    fn eval(&self, z: &[C64]) -> Vec<C64> {
        (**self).eval(z)
    }
    fn jacobian_apply(&self, z: &[C64], w: &[C64]) -> Vec<C64> {
        (**self).jacobian_apply(z, w)
    }
    fn parts(&self, z: &[C64]) -> RhsParts {
        (**self).parts(z)
    }
}

/// Per-point contributions to `F`. Absent pieces are zero vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsParts {
    pub diff: Vec<C64>,
    pub conv_or_adv: Vec<C64>,
    pub reac: Vec<C64>,
    pub other: Vec<C64>,
}

impl RhsParts {
    pub fn zeros(n: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Self {
            diff: z.clone(),
            conv_or_adv: z.clone(),
            reac: z.clone(),
            other: z,
        }
    }

    pub fn unlabeled(f: Vec<C64>) -> Self {
        let mut p = Self::zeros(f.len());
        p.other = f;
        p
    }

    pub fn total(&self) -> Vec<C64> {
        (0..self.diff.len())
            .map(|k| self.diff[k] + self.conv_or_adv[k] + self.reac[k] + self.other[k])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaBreakdown {
    pub total: C64,
    pub diff: C64,
    pub conv_or_adv: C64,
    pub reac: C64,
    pub other: C64,
}

fn overlap(z: &[C64], f: &[C64]) -> C64 {
    z.iter().zip(f).map(|(z, f)| z.conj() * f).sum()
}

/// `Σ(z) = Σ_k conj(z_k) F_k`, optionally split along labeled parts.
pub fn sigma(z: &[C64], f: &[C64], parts: Option<&RhsParts>) -> Result<SigmaBreakdown> {
    if z.len() != f.len() {
        return Err(Error::LengthMismatch {
            expected: z.len(),
            found: f.len(),
        });
    }
    let total = overlap(z, f);
    let zero = C64::new(0.0, 0.0);
    let Some(p) = parts else {
        return Ok(SigmaBreakdown {
            total,
            diff: zero,
            conv_or_adv: zero,
            reac: zero,
            other: total,
        });
    };
    for v in [&p.diff, &p.conv_or_adv, &p.reac, &p.other] {
        if v.len() != z.len() {
            return Err(Error::LengthMismatch {
                expected: z.len(),
                found: v.len(),
            });
        }
    }
    Ok(SigmaBreakdown {
        total,
        diff: overlap(z, &p.diff),
        conv_or_adv: overlap(z, &p.conv_or_adv),
        reac: overlap(z, &p.reac),
        other: overlap(z, &p.other),
    })
}

/// `Σ(z)` of `rhs` at `state`, with its labeled breakdown.
pub fn sigma_of<R: Rhs + ?Sized>(rhs: &R, state: &FieldState) -> Result<SigmaBreakdown> {
    check_len(rhs, state.z.len())?;
    let parts = rhs.parts(&state.z);
    let f = parts.total();
    sigma(&state.z, &f, Some(&parts))
}

/// Length-checked Jacobian-vector product.
pub fn jacobian_apply<R: Rhs + ?Sized>(rhs: &R, state: &FieldState, w: &[C64]) -> Result<Vec<C64>> {
    check_len(rhs, state.z.len())?;
    check_len(rhs, w.len())?;
    Ok(rhs.jacobian_apply(&state.z, w))
}

pub(crate) fn check_len<R: Rhs + ?Sized>(rhs: &R, n: usize) -> Result<()> {
    if rhs.len() != n {
        return Err(Error::LengthMismatch {
            expected: rhs.len(),
            found: n,
        });
    }
    Ok(())
}

/// Neighbor value for the linearized operator: ghost points are constants, so they contribute zero.
pub(crate) fn tangent_at(grid: &GridSpec, w: &[C64], index: usize, axis: usize, offset: isize) -> C64 {
    match grid.step(index, axis, offset) {
        crate::grid::Neighbor::Index(k) => w[k],
        crate::grid::Neighbor::Boundary(_) => C64::new(0.0, 0.0),
    }
}

pub(crate) fn require_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

pub(crate) fn require_dims(grid: &GridSpec, dims: usize) -> Result<()> {
    if grid.dims() != dims {
        return Err(Error::WrongDimension {
            expected: dims,
            found: grid.dims(),
        });
    }
    Ok(())
}
