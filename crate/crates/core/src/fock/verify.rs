use nalgebra::DMatrix;
use rand::Rng;

use super::kraus::KrausSet;
use super::linalg::{eigh, gemm, mul, Op};
use super::tree::ChannelTree;
use crate::C64;

pub const TRACE_TOL: f64 = 1e-9;
pub const PROBABILITY_TOL: f64 = 1e-10;
pub const UNITARITY_TOL: f64 = 1e-10;
pub const ZERO_PATH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Default)]
pub struct ChannelReport {
    pub unitarity_residual: f64,
    pub completeness_residual: f64,
    pub zero_path_error: f64,
    /// `|Σ_b Tr(K_b ρ K_b†) - Tr ρ|` per probe, Kraus set and tree leaves.
    pub trace_errors: Vec<f64>,
    pub tree_trace_errors: Vec<f64>,
    pub min_probability: f64,
    /// `|p_a(tree) - Tr(K_a†K_a ρ)|` per probe.
    pub p_a_errors: Vec<f64>,
    /// Normalized Hilbert–Schmidt overlap of post-selected states, tree vs direct.
    pub fidelities: Vec<f64>,
    pub failures: Vec<String>,
}

impl ChannelReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn summary(&self) -> String {
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        let min_fid = self.fidelities.iter().copied().fold(1.0, f64::min);
        format!(
            "unitarity {:e}, completeness {:e}, zero path {:e}, trace {:e}, tree trace {:e}, p_a {:e}, min probability {:e}, min fidelity {}",
            self.unitarity_residual,
            self.completeness_residual,
            self.zero_path_error,
            max(&self.trace_errors),
            max(&self.tree_trace_errors),
            max(&self.p_a_errors),
            self.min_probability,
            min_fid
        )
    }
}

fn trace(m: &DMatrix<C64>) -> C64 {
    m.diagonal().sum()
}

fn conjugate(k: &DMatrix<C64>, rho: &DMatrix<C64>) -> DMatrix<C64> {
    gemm(&mul(k, rho), Op::N, k, Op::H)
}

fn overlap(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let ab = a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum::<f64>();
    let aa = a.norm_squared();
    let bb = b.norm_squared();
    ab / (aa * bb).sqrt()
}

/// Check a compiled tree against its Kraus set on the given density-matrix probes.
pub fn verify_channel(tree: &ChannelTree, kraus: &KrausSet, probes: &[DMatrix<C64>]) -> ChannelReport {
    let mut r = ChannelReport {
        unitarity_residual: tree.max_unitarity_residual(),
        completeness_residual: kraus.completeness_residual(),
        min_probability: f64::INFINITY,
        ..Default::default()
    };
    if r.unitarity_residual > UNITARITY_TOL {
        r.failures.push(format!("node unitarity residual {:e}", r.unitarity_residual));
    }
    if r.completeness_residual > super::kraus::COMPLETENESS_TOL {
        r.failures.push(format!("Kraus completeness residual {:e}", r.completeness_residual));
    }
    let zero = tree.zero_path();
    r.zero_path_error = (&zero - kraus.post_selected()).norm();
    if r.zero_path_error > ZERO_PATH_TOL {
        r.failures.push(format!("zero path differs from K_a by {:e}", r.zero_path_error));
    }
    let leaves: Vec<DMatrix<C64>> = tree
        .leaves
        .keys()
        .map(|p| tree.path_operator(p).expect("leaf path"))
        .collect();
    for (i, rho) in probes.iter().enumerate() {
        let tr = trace(rho).re;
        let direct: f64 = kraus.ops.iter().map(|k| trace(&conjugate(k, rho)).re).sum();
        let err = (direct - tr).abs();
        r.trace_errors.push(err);
        if err > TRACE_TOL {
            r.failures.push(format!("probe {i}: Kraus sum changes the trace by {err:e}"));
        }
        let mut total = 0.0;
        for (leaf, op) in leaves.iter().enumerate() {
            let p = trace(&conjugate(op, rho)).re;
            if p < -PROBABILITY_TOL {
                r.failures.push(format!("probe {i}: leaf {leaf} has probability {p:e}"));
            }
            r.min_probability = r.min_probability.min(p);
            total += p;
        }
        let err = (total - tr).abs();
        r.tree_trace_errors.push(err);
        if err > TRACE_TOL {
            r.failures.push(format!("probe {i}: tree outcome probabilities sum to {total}"));
        }
        let ka = kraus.post_selected();
        let want = conjugate(ka, rho);
        let got = conjugate(&zero, rho);
        let err = (trace(&got).re - trace(&want).re).abs();
        r.p_a_errors.push(err);
        if err > PROBABILITY_TOL {
            r.failures.push(format!("probe {i}: tree p_a off by {err:e}"));
        }
        if trace(&want).re > PROBABILITY_TOL {
            let f = overlap(&got, &want);
            r.fidelities.push(f);
            if f < 1.0 - TRACE_TOL {
                r.failures.push(format!("probe {i}: post-selected state fidelity {f}"));
            }
        }
    }
    if probes.is_empty() {
        r.min_probability = 0.0;
    }
    r
}

pub fn maximally_mixed(dim: usize) -> DMatrix<C64> {
    DMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0)
}

pub fn pure_density(psi: &nalgebra::DVector<C64>) -> DMatrix<C64> {
    let n = psi.norm_squared();
    psi * psi.adjoint() / C64::new(n, 0.0)
}

/// Random unit-trace density matrix `G G† / Tr(G G†)` of rank `rank`.
pub fn random_density<R: Rng>(dim: usize, rank: usize, rng: &mut R) -> DMatrix<C64> {
    let g = DMatrix::from_fn(dim, rank.max(1), |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let rho = &g * g.adjoint();
    let tr = trace(&rho);
    rho / tr
}

/// `true` when `rho` is Hermitian, unit trace and PSD to `tol`.
pub fn is_density(rho: &DMatrix<C64>, tol: f64) -> bool {
    let herm = (rho - rho.adjoint()).norm() <= tol;
    let unit = (trace(rho) - C64::new(1.0, 0.0)).norm() <= tol;
    herm && unit && eigh(rho).values.first().is_none_or(|&l| l >= -tol)
}
