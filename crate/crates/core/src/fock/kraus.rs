use nalgebra::DMatrix;

use super::linalg::{check_psd, eigh, expm, gemm, psd_sqrt, Op};
use crate::error::{Error, Result};
use crate::C64;

/// Eigenvalues of `I - K_a†K_a` in `[-PSD_CLIP, 0)` count as roundoff.
pub const PSD_CLIP: f64 = 1e-12;
pub const COMPLETENESS_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct KrausSet {
    /// `ops[0]` is the post-selected branch `K_a`; padding operators are zero.
    pub ops: Vec<DMatrix<C64>>,
    /// Scalar `λ` added to the generator before exponentiation.
    pub shift: f64,
    pub dt: f64,
    /// Number of trailing zero operators added to reach a power of two.
    pub padded: usize,
}

impl KrausSet {
    pub fn rank(&self) -> usize {
        self.ops.len()
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn post_selected(&self) -> &DMatrix<C64> {
        &self.ops[0]
    }

    /// `‖Σ_b K_b†K_b - I‖_F`, an upper bound on the spectral-norm residual.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.dim();
        let mut s = -DMatrix::<C64>::identity(d, d);
        for k in &self.ops {
            s += gemm(k, Op::H, k, Op::N);
        }
        s.norm()
    }

    pub fn check_completeness(&self) -> Result<()> {
        let r = self.completeness_residual();
        if r > COMPLETENESS_TOL {
            return Err(Error::Completeness(r));
        }
        Ok(())
    }

    /// Append zero operators up to the next power of two.
    pub fn pad_to_power_of_two(&mut self) {
        let target = self.ops.len().next_power_of_two().max(2);
        let d = self.dim();
        while self.ops.len() < target {
            self.ops.push(DMatrix::zeros(d, d));
            self.padded += 1;
        }
    }
}

/// `λ = max(0, -λ_min(Herm A))`, making `A + λI` accretive.
pub fn psd_shift(a: &DMatrix<C64>) -> f64 {
    let lmin = eigh(a).values.first().copied().unwrap_or(0.0);
    (-lmin).max(0.0)
}

fn post_selected_branch(a: &DMatrix<C64>, dt: f64) -> Result<(DMatrix<C64>, f64)> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !a.is_square() {
        return Err(Error::InvalidParameter("generator must be square".into()));
    }
    let shift = psd_shift(a);
    let n = a.nrows();
    let shifted = a + DMatrix::<C64>::identity(n, n) * C64::new(shift, 0.0);
    Ok((expm(&(shifted * C64::new(-dt, 0.0))), shift))
}

fn residual(ka: &DMatrix<C64>) -> DMatrix<C64> {
    let n = ka.nrows();
    DMatrix::<C64>::identity(n, n) - gemm(ka, Op::H, ka, Op::N)
}

/// `K_a = e^{-(A + λ) dt}` and `K_ā = sqrt(I - K_a†K_a)`.
pub fn kraus_pair(a: &DMatrix<C64>, dt: f64) -> Result<KrausSet> {
    let (ka, shift) = post_selected_branch(a, dt)?;
    let kbar = psd_sqrt(&residual(&ka), PSD_CLIP)?;
    let set = KrausSet {
        ops: vec![ka, kbar],
        shift,
        dt,
        padded: 0,
    };
    set.check_completeness()?;
    Ok(set)
}

/// Rank-`rank` set: `K_a` plus `rank - 1` branches splitting `I - K_a†K_a`, padded to a power of two.
///
/// The residual is diagonalized and its eigenvectors (ascending eigenvalue
/// order) are dealt out in contiguous, evenly sized groups; branch `b` is
/// `sqrt(I - K_a†K_a) Π_b` for the spectral projector `Π_b` of group `b`.
pub fn kraus_set(a: &DMatrix<C64>, dt: f64, rank: usize) -> Result<KrausSet> {
    if rank < 2 {
        return Err(Error::InvalidParameter(format!("Kraus rank must be >= 2, got {rank}")));
    }
    if rank == 2 {
        let mut set = kraus_pair(a, dt)?;
        set.pad_to_power_of_two();
        return Ok(set);
    }
    let (ka, shift) = post_selected_branch(a, dt)?;
    let spec = eigh(&residual(&ka));
    check_psd(&spec, PSD_CLIP)?;
    let n = ka.nrows();
    let branches = rank - 1;
    let mut ops = vec![ka];
    for b in 0..branches {
        let lo = b * n / branches;
        let hi = (b + 1) * n / branches;
        ops.push(spec.apply_subset(|l| l.max(0.0).sqrt(), lo..hi));
    }
    let mut set = KrausSet {
        ops,
        shift,
        dt,
        padded: 0,
    };
    set.pad_to_power_of_two();
    set.check_completeness()?;
    Ok(set)
}
