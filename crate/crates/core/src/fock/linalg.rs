//! Dense complex helpers: matrix exponential, Hermitian spectral functions, unitary completion.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::C64;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Whether a [`gemm`] operand is used as is or as its conjugate transpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    N,
    H,
}

/// `op(a) · op(b)` through a packed complex GEMM kernel.
pub fn gemm(a: &DMatrix<C64>, op_a: Op, b: &DMatrix<C64>, op_b: Op) -> DMatrix<C64> {
    use matrixmultiply::CGemmOption::Standard;
    // The kernel has no conjugating mode: adjoints use a conjugated copy read with swapped strides.
    let conj_a = (op_a == Op::H).then(|| a.map(|z| z.conj()));
    let conj_b = (op_b == Op::H).then(|| b.map(|z| z.conj()));
    let a = conj_a.as_ref().unwrap_or(a);
    let b = conj_b.as_ref().unwrap_or(b);
    // (rows, cols, row stride, col stride) of the operand as used.
    let view = |m: &DMatrix<C64>, op: Op| match op {
        Op::N => (m.nrows(), m.ncols(), 1isize, m.nrows() as isize),
        Op::H => (m.ncols(), m.nrows(), m.nrows() as isize, 1isize),
    };
    let (m, k, rsa, csa) = view(a, op_a);
    let (k2, n, rsb, csb) = view(b, op_b);
    assert_eq!(k, k2, "gemm inner dimensions differ");
    let mut out = DMatrix::<C64>::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return out;
    }
    // SAFETY: Complex<f64> is repr(C) with layout [re, im], matching the kernel's
    // element type; pointers and strides describe the column-major storage of
    // `a`, `b` and `out`, whose extents match (m, k), (k, n) and (m, n).
    unsafe {
        matrixmultiply::zgemm(
            Standard,
            Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr().cast(),
            rsa,
            csa,
            b.as_ptr().cast(),
            rsb,
            csb,
            [0.0, 0.0],
            out.as_mut_ptr().cast(),
            1,
            m as isize,
        );
    }
    out
}

pub fn mul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    gemm(a, Op::N, b, Op::N)
}

pub fn norm1(m: &DMatrix<C64>) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^M` by degree-13 Padé approximation with scaling and squaring.
pub fn expm(m: &DMatrix<C64>) -> DMatrix<C64> {
    let n = m.nrows();
    let eye = DMatrix::<C64>::identity(n, n);
    let nrm = norm1(m);
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = m * c(0.5f64.powi(s));
    let a2 = mul(&a, &a);
    let a4 = mul(&a2, &a2);
    let a6 = mul(&a4, &a2);
    let b = PADE13;
    let u_inner = mul(&a6, &(&a6 * c(b[13]) + &a4 * c(b[11]) + &a2 * c(b[9])))
        + &a6 * c(b[7])
        + &a4 * c(b[5])
        + &a2 * c(b[3])
        + &eye * c(b[1]);
    let u = mul(&a, &u_inner);
    let v = mul(&a6, &(&a6 * c(b[12]) + &a4 * c(b[10]) + &a2 * c(b[8])))
        + &a6 * c(b[6])
        + &a4 * c(b[4])
        + &a2 * c(b[2])
        + &eye * c(b[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Padé denominator is nonsingular for scaled input");
    for _ in 0..s {
        r = mul(&r, &r);
    }
    r
}

/// `e^{tM} v` by a scaled Taylor series; cheaper than [`expm`] for a single vector.
pub fn expm_apply(m: &DMatrix<C64>, v: &DVector<C64>, t: f64) -> DVector<C64> {
    let steps = (norm1(m) * t.abs()).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut out = v.clone();
    for _ in 0..steps {
        let mut term = out.clone();
        let mut acc = out.clone();
        for k in 1..200 {
            term = (m * term) * c(h / k as f64);
            acc += &term;
            if term.norm() <= 1e-18 * acc.norm() {
                break;
            }
        }
        out = acc;
    }
    out
}

pub fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * c(0.5)
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Spectral {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

pub fn eigh(h: &DMatrix<C64>) -> Spectral {
    let e = SymmetricEigen::new(hermitian_part(h));
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let values = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(h.nrows(), order.len(), |r, k| e.eigenvectors[(r, order[k])]);
    Spectral { values, vectors }
}

impl Spectral {
    /// `V f(Λ) V†`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
        self.apply_subset(f, 0..self.values.len())
    }

    /// `Σ_{k ∈ subset} f(λ_k) v_k v_k†`.
    pub fn apply_subset(&self, f: impl Fn(f64) -> f64, subset: impl IntoIterator<Item = usize>) -> DMatrix<C64> {
        let n = self.vectors.nrows();
        let idx: Vec<usize> = subset.into_iter().collect();
        let mut scaled = DMatrix::<C64>::zeros(n, idx.len());
        let mut basis = DMatrix::<C64>::zeros(n, idx.len());
        for (col, &k) in idx.iter().enumerate() {
            let w = f(self.values[k]);
            basis.set_column(col, &self.vectors.column(k));
            scaled.set_column(col, &(self.vectors.column(k) * c(w)));
        }
        gemm(&scaled, Op::N, &basis, Op::H)
    }
}

/// Square root of a Hermitian PSD matrix; eigenvalues in `[-clip, 0)` are set to zero.
pub fn psd_sqrt(h: &DMatrix<C64>, clip: f64) -> Result<DMatrix<C64>> {
    let s = eigh(h);
    check_psd(&s, clip)?;
    Ok(s.apply(|l| l.max(0.0).sqrt()))
}

pub(crate) fn check_psd(s: &Spectral, clip: f64) -> Result<()> {
    match s.values.first() {
        Some(&l) if l < -clip => Err(Error::Indefinite(l)),
        _ => Ok(()),
    }
}

/// Spectral norm.
pub fn op_norm(m: &DMatrix<C64>) -> f64 {
    let g = gemm(m, Op::H, m, Op::N);
    eigh(&g).values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// `‖U†U - I‖_F`, an upper bound on the spectral-norm residual.
pub fn unitarity_residual(u: &DMatrix<C64>) -> f64 {
    let n = u.ncols();
    (gemm(u, Op::H, u, Op::N) - DMatrix::<C64>::identity(n, n)).norm()
}

/// Closest isometry `V (V†V)^{-1/2}`; `v` must have full column rank.
///
/// Near-isometries take Newton–Schulz steps `V (3I - V†V) / 2`; otherwise the
/// inverse square root comes from an eigendecomposition.
pub fn polar_isometry(v: &DMatrix<C64>) -> DMatrix<C64> {
    let k = v.ncols();
    let eye = DMatrix::<C64>::identity(k, k);
    let mut out = v.clone();
    for _ in 0..8 {
        let gram = gemm(&out, Op::H, &out, Op::N);
        let dev = (&gram - &eye).norm();
        if dev > 0.1 {
            let s = eigh(&gram);
            return mul(&out, &s.apply(|l| 1.0 / l.sqrt()));
        }
        if dev < 1e-15 {
            break;
        }
        out = mul(&out, &(&eye * c(1.5) - gram * c(0.5)));
    }
    out
}

/// Extend an `m × k` isometry to an `m × m` unitary whose first `k` columns are `v`.
///
/// The complement comes from a full Householder QR of `v`, so the result is
/// a deterministic function of the input.
pub fn complete_unitary(v: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let (m, k) = v.shape();
    let qr = v.clone().qr();
    let mut qh = DMatrix::<C64>::identity(m, m);
    qr.q_tr_mul(&mut qh);
    let mut u = qh.adjoint();
    // Fix the phase of each complement column so its largest entry is real positive.
    for col in k..m {
        let (_, pivot) = u
            .column(col)
            .iter()
            .enumerate()
            .fold((0.0, C64::new(1.0, 0.0)), |(best, p), (_, z)| {
                if z.norm() > best + 1e-12 {
                    (z.norm(), *z)
                } else {
                    (best, p)
                }
            });
        let phase = pivot.conj() / pivot.norm();
        let scaled = u.column(col) * phase;
        u.set_column(col, &scaled);
    }
    for col in 0..k {
        u.set_column(col, &v.column(col));
    }
    let res = unitarity_residual(&u);
    if res > 1e-9 {
        return Err(Error::NonUnitary(res));
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(n: usize, seed: u64) -> DMatrix<C64> {
        // Small deterministic LCG; enough for shape tests.
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        DMatrix::from_fn(n, n, |_, _| C64::new(next(), next()))
    }

    #[test]
    fn gemm_matches_naive_products() {
        let a = random_matrix(7, 1).columns(0, 5).into_owned();
        let b = random_matrix(7, 2);
        assert!((gemm(&a, Op::H, &b, Op::N) - a.adjoint() * &b).norm() < 1e-13);
        assert!((gemm(&b, Op::N, &a, Op::N) - &b * &a).norm() < 1e-13);
        assert!((gemm(&b, Op::N, &b, Op::H) - &b * b.adjoint()).norm() < 1e-13);
        assert!((gemm(&a, Op::H, &a, Op::N) - a.adjoint() * &a).norm() < 1e-13);
    }

    #[test]
    fn expm_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![c(-0.1), c(2.0), C64::new(0.0, 1.0)]));
        let e = expm(&m);
        assert!((e[(0, 0)] - c((-0.1f64).exp())).norm() < 1e-15);
        assert!((e[(1, 1)] - c(2f64.exp())).norm() < 1e-13);
        assert!((e[(2, 2)] - C64::new(1f64.cos(), 1f64.sin())).norm() < 1e-15);
    }

    #[test]
    fn expm_nilpotent_and_large_norm() {
        let mut n = DMatrix::<C64>::zeros(3, 3);
        n[(0, 1)] = c(1.0);
        n[(1, 2)] = c(1.0);
        let e = expm(&n);
        assert!((e[(0, 2)] - c(0.5)).norm() < 1e-15);
        // Scaling path: a norm-heavy skew-Hermitian M must give a unitary.
        let h = random_matrix(6, 3);
        let m = (&h - h.adjoint()) * c(20.0);
        assert!(norm1(&m) > 4.0 * THETA13);
        assert!(unitarity_residual(&expm(&m)) < 1e-11);
    }

    #[test]
    fn expm_apply_matches_expm() {
        let m = random_matrix(8, 5);
        let v = DVector::from_fn(8, |i, _| C64::new(i as f64, 1.0));
        let a = expm_apply(&m, &v, 0.7);
        let b = expm(&(&m * c(0.7))) * &v;
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn sqrt_and_clip() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![c(4.0), c(-1e-13), c(9.0)]));
        let r = psd_sqrt(&h, 1e-12).unwrap();
        assert!((r[(0, 0)] - c(2.0)).norm() < 1e-14);
        assert_eq!(r[(1, 1)].norm(), 0.0);
        let bad = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(-1e-6)]));
        assert!(matches!(psd_sqrt(&bad, 1e-12), Err(Error::Indefinite(_))));
    }

    #[test]
    fn completion_keeps_columns_and_is_unitary() {
        let m = random_matrix(6, 9);
        let v = polar_isometry(&m.columns(0, 3).into_owned());
        let u = complete_unitary(&v).unwrap();
        assert!(unitarity_residual(&u) < 1e-12);
        assert_eq!(u.columns(0, 3), v.columns(0, 3));
        let again = complete_unitary(&v).unwrap();
        assert_eq!(u, again);
    }
}
