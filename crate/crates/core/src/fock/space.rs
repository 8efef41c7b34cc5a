use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::C64;

pub const DEFAULT_DIM_CAP: usize = 4096;

/// `n_modes` bosonic modes, each truncated to `levels` number states.
///
/// Basis states are ordered like a Kronecker product with mode 0 most
/// significant: `|n_0 n_1 ... ⟩ ↦ Σ_j n_j · levels^(n_modes - 1 - j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    pub n_modes: usize,
    pub levels: usize,
    pub dim: usize,
}

pub fn build_fock(n_modes: usize, levels: usize) -> Result<FockSpace> {
    build_fock_with_cap(n_modes, levels, DEFAULT_DIM_CAP)
}

pub fn build_fock_with_cap(n_modes: usize, levels: usize, cap: usize) -> Result<FockSpace> {
    if n_modes == 0 || levels == 0 {
        return Err(Error::InvalidParameter("need at least one mode and one level".into()));
    }
    let dim = (0..n_modes).try_fold(1usize, |acc, _| acc.checked_mul(levels));
    match dim {
        Some(dim) if dim <= cap => Ok(FockSpace { n_modes, levels, dim }),
        Some(dim) => Err(Error::DimensionCap { dim, cap }),
        None => Err(Error::DimensionCap { dim: usize::MAX, cap }),
    }
}

impl FockSpace {
    /// Single-mode annihilator `⟨n-1|a|n⟩ = sqrt(n)`.
    pub fn annihilation(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.levels, self.levels, |i, j| {
            if j == i + 1 {
                C64::new((j as f64).sqrt(), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// `a_j` on the full space as `I ⊗ .. ⊗ a ⊗ .. ⊗ I`.
    pub fn mode_operator(&self, j: usize) -> Result<DMatrix<C64>> {
        if j >= self.n_modes {
            return Err(Error::SiteOutOfRange(j));
        }
        let eye = DMatrix::<C64>::identity(self.levels, self.levels);
        let a = self.annihilation();
        let mut m = DMatrix::<C64>::identity(1, 1);
        for k in 0..self.n_modes {
            m = m.kronecker(if k == j { &a } else { &eye });
        }
        Ok(m)
    }

    pub fn stride(&self, mode: usize) -> usize {
        self.levels.pow((self.n_modes - 1 - mode) as u32)
    }

    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        (index / self.stride(mode)) % self.levels
    }

    pub fn index_of(&self, occupations: &[usize]) -> usize {
        occupations
            .iter()
            .enumerate()
            .map(|(m, &n)| n * self.stride(m))
            .sum()
    }

    /// Normalized truncation of the product coherent state `|z_0⟩ ⊗ |z_1⟩ ⊗ ...`.
    pub fn coherent_state(&self, z: &[C64]) -> Result<DVector<C64>> {
        if z.len() != self.n_modes {
            return Err(Error::LengthMismatch {
                expected: self.n_modes,
                found: z.len(),
            });
        }
        // Single-mode amplitudes z^n / sqrt(n!).
        let single: Vec<Vec<C64>> = z
            .iter()
            .map(|&zj| {
                let mut amp = Vec::with_capacity(self.levels);
                let mut c = C64::new(1.0, 0.0);
                for n in 0..self.levels {
                    if n > 0 {
                        c = c * zj / (n as f64).sqrt();
                    }
                    amp.push(c);
                }
                amp
            })
            .collect();
        let mut psi = DVector::from_fn(self.dim, |idx, _| {
            (0..self.n_modes)
                .map(|m| single[m][self.occupation(idx, m)])
                .product::<C64>()
        });
        let norm = psi.norm();
        psi /= C64::new(norm, 0.0);
        Ok(psi)
    }

    /// `⟨a_j⟩` and `⟨a_j† a_j⟩` of a normalized pure state.
    pub fn mode_moments(&self, psi: &DVector<C64>) -> (Vec<C64>, Vec<f64>) {
        let mut mean = vec![C64::new(0.0, 0.0); self.n_modes];
        let mut number = vec![0.0; self.n_modes];
        for idx in 0..self.dim {
            let p = psi[idx];
            if p == C64::new(0.0, 0.0) {
                continue;
            }
            for m in 0..self.n_modes {
                let n = self.occupation(idx, m);
                number[m] += n as f64 * p.norm_sqr();
                if n > 0 {
                    let lower = idx - self.stride(m);
                    mean[m] += psi[lower].conj() * p * (n as f64).sqrt();
                }
            }
        }
        (mean, number)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_level_annihilator() {
        let s = build_fock(1, 3).unwrap();
        let a = s.annihilation();
        assert_eq!(a[(0, 1)].re, 1.0);
        assert_eq!(a[(1, 2)].re, 2f64.sqrt());
        let nonzero = a.iter().filter(|v| v.norm() != 0.0).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn figure_scale_dimension() {
        assert_eq!(build_fock(4, 4).unwrap().dim, 256);
        assert!(matches!(build_fock(7, 4), Err(Error::DimensionCap { dim: 16384, cap: 4096 })));
    }

    #[test]
    fn commutator_is_identity_below_cutoff() {
        let s = build_fock(2, 4).unwrap();
        for j in 0..2 {
            let a = s.mode_operator(j).unwrap();
            let c = &a * a.adjoint() - a.adjoint() * &a;
            for idx in 0..s.dim {
                if s.occupation(idx, j) == s.levels - 1 {
                    continue;
                }
                for col in 0..s.dim {
                    let want = if idx == col { 1.0 } else { 0.0 };
                    assert!((c[(idx, col)] - C64::new(want, 0.0)).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn coherent_moments() {
        let s = build_fock(2, 12).unwrap();
        let z = [C64::new(0.3, 0.1), C64::new(-0.2, 0.0)];
        let psi = s.coherent_state(&z).unwrap();
        let (mean, number) = s.mode_moments(&psi);
        for m in 0..2 {
            assert!((mean[m] - z[m]).norm() < 1e-9);
            assert!((number[m] - z[m].norm_sqr()).abs() < 1e-9);
        }
    }
}
