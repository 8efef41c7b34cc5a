use nalgebra::DMatrix;

use super::FockSpace;
use crate::error::{Error, Result};
use crate::rhs::RhsSpec;
use crate::C64;

/// Dense `A = Σ c · a_out† Π a_factors` on a truncated Fock space.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    pub matrix: DMatrix<C64>,
    pub space: FockSpace,
    /// Fock mode of every spec mode.
    pub site_map: Vec<usize>,
    pub monomials: usize,
}

/// A normal-ordered term `coeff · a_out† Π a_factors` on Fock modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub out: usize,
    pub coeff: C64,
    pub factors: Vec<usize>,
}

/// Assemble the generator of `spec`; `site_map[k]` is the Fock mode of spec mode `k`
/// (identity when `None`).
pub fn assemble_generator(space: &FockSpace, spec: &RhsSpec, site_map: Option<&[usize]>) -> Result<GeneratorMatrix> {
    let n = spec.n_modes();
    let map: Vec<usize> = match site_map {
        Some(m) => {
            if m.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: m.len(),
                });
            }
            m.to_vec()
        }
        None => (0..n).collect(),
    };
    if let Some(&bad) = map.iter().find(|&&m| m >= space.n_modes) {
        return Err(Error::SiteOutOfRange(bad));
    }
    let mut terms = Vec::new();
    for (row, monos) in spec.resolved().into_iter().enumerate() {
        for (coeff, modes) in monos {
            terms.push(Term {
                out: map[row],
                coeff,
                factors: modes.iter().map(|&k| map[k]).collect(),
            });
        }
    }
    let matrix = assemble_terms(space, &terms)?;
    Ok(GeneratorMatrix {
        matrix,
        space: *space,
        site_map: map,
        monomials: terms.len(),
    })
}

/// Build the matrix by acting with every term on every basis state.
pub fn assemble_terms(space: &FockSpace, terms: &[Term]) -> Result<DMatrix<C64>> {
    for t in terms {
        if let Some(&bad) = std::iter::once(&t.out).chain(&t.factors).find(|&&m| m >= space.n_modes) {
            return Err(Error::SiteOutOfRange(bad));
        }
    }
    let mut a = DMatrix::<C64>::zeros(space.dim, space.dim);
    let mut occ = vec![0usize; space.n_modes];
    for col in 0..space.dim {
        for t in terms {
            for (m, o) in occ.iter_mut().enumerate() {
                *o = space.occupation(col, m);
            }
            let mut amp = 1.0;
            let mut alive = true;
            for &f in &t.factors {
                if occ[f] == 0 {
                    alive = false;
                    break;
                }
                amp *= (occ[f] as f64).sqrt();
                occ[f] -= 1;
            }
            if !alive || occ[t.out] + 1 >= space.levels {
                continue;
            }
            occ[t.out] += 1;
            amp *= (occ[t.out] as f64).sqrt();
            let row = space.index_of(&occ);
            a[(row, col)] += t.coeff * amp;
        }
    }
    Ok(a)
}
