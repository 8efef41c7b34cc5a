//! Measurement-adaptive binary-tree compilation of a Kraus set.
//!
//! Node `p` (an outcome bitstring of length `< depth`) holds a unitary on
//! `ancilla ⊗ system` with the ancilla as the most significant index, so
//! `⟨b|U_p|0⟩` is the `d × d` block at rows `b·d..(b+1)·d`, columns `0..d`.
//! With `G_p = Σ_{c below p} K_c†K_c` and `P_p = sqrt(G_p)`, the blocks are
//! `P_{pb} P_p⁺` on inner levels and `K_{pb} P_p⁺` on the last level, plus
//! `I - Π_p` on the zero branch so the left column is an isometry.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use super::kraus::KrausSet;
use super::linalg::{complete_unitary, eigh, gemm, mul, polar_isometry, unitarity_residual, Op};
use crate::error::{Error, Result};
use crate::grid::fmt_f64;
use crate::C64;

/// Eigenvalues of `G_p` at or below this are treated as zero in `P_p⁺`.
const SUPPORT_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct ChannelTree {
    pub depth: usize,
    pub dim: usize,
    /// Node unitaries keyed by outcome prefix; the root is `""`.
    pub nodes: BTreeMap<String, DMatrix<C64>>,
    /// Leaf bitstring to Kraus index; `None` marks padded, unreachable leaves.
    pub leaves: BTreeMap<String, Option<usize>>,
}

fn bits(value: usize, len: usize) -> String {
    (0..len)
        .map(|i| if (value >> (len - 1 - i)) & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn compile_tree(kraus: &KrausSet) -> Result<ChannelTree> {
    let n = kraus.rank();
    if n < 2 {
        return Err(Error::InvalidParameter("a channel tree needs at least two Kraus operators".into()));
    }
    let mut kraus = kraus.clone();
    kraus.pad_to_power_of_two();
    let n_total = kraus.rank();
    let depth = n_total.trailing_zeros() as usize;
    let d = kraus.dim();
    let eye = DMatrix::<C64>::identity(d, d);

    // Gram sums per prefix, built from the leaves up.
    let mut gram: BTreeMap<String, DMatrix<C64>> = BTreeMap::new();
    for (c, k) in kraus.ops.iter().enumerate() {
        gram.insert(bits(c, depth), gemm(k, Op::H, k, Op::N));
    }
    for level in (0..depth).rev() {
        for p in 0..(1usize << level) {
            let key = bits(p, level);
            let g = &gram[&format!("{key}0")] + &gram[&format!("{key}1")];
            gram.insert(key, g);
        }
    }
    // sqrt, pseudo-inverse sqrt and support projector of every inner prefix.
    let mut factors = BTreeMap::new();
    for (key, g) in gram.iter().filter(|(k, _)| k.len() < depth) {
        let s = eigh(g);
        let sqrt = s.apply(|l| l.max(0.0).sqrt());
        let pinv = s.apply(|l| if l > SUPPORT_CUTOFF { 1.0 / l.sqrt() } else { 0.0 });
        let proj = s.apply(|l| if l > SUPPORT_CUTOFF { 1.0 } else { 0.0 });
        factors.insert(key.clone(), (sqrt, pinv, proj));
    }

    let mut nodes = BTreeMap::new();
    for level in 0..depth {
        for p in 0..(1usize << level) {
            let key = bits(p, level);
            let (_, pinv, proj) = &factors[&key];
            let mut v = DMatrix::<C64>::zeros(2 * d, d);
            for b in 0..2 {
                let child = format!("{key}{b}");
                let mut block = if level + 1 == depth {
                    mul(&kraus.ops[(p << 1) | b], pinv)
                } else {
                    mul(&factors[&child].0, pinv)
                };
                if b == 0 {
                    block += &eye - proj;
                }
                v.view_mut((b * d, 0), (d, d)).copy_from(&block);
            }
            let v = polar_isometry(&v);
            nodes.insert(key, complete_unitary(&v)?);
        }
    }
    let live = n_total - kraus.padded;
    let leaves = (0..n_total)
        .map(|c| (bits(c, depth), (c < live).then_some(c)))
        .collect();
    Ok(ChannelTree {
        depth,
        dim: d,
        nodes,
        leaves,
    })
}

impl ChannelTree {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// `⟨b|U_prefix|0⟩`.
    pub fn block(&self, prefix: &str, b: usize) -> Result<DMatrix<C64>> {
        let u = self
            .nodes
            .get(prefix)
            .ok_or_else(|| Error::InvalidParameter(format!("no tree node `{prefix}`")))?;
        Ok(u.view((b * self.dim, 0), (self.dim, self.dim)).into_owned())
    }

    /// Operator applied to the system along the outcome path `path`.
    pub fn path_operator(&self, path: &str) -> Result<DMatrix<C64>> {
        if path.len() > self.depth || path.chars().any(|c| c != '0' && c != '1') {
            return Err(Error::InvalidParameter(format!("invalid outcome path `{path}`")));
        }
        let mut m = DMatrix::<C64>::identity(self.dim, self.dim);
        for l in 0..path.len() {
            let b = usize::from(path.as_bytes()[l] == b'1');
            m = mul(&self.block(&path[..l], b)?, &m);
        }
        Ok(m)
    }

    pub fn zero_path(&self) -> DMatrix<C64> {
        self.path_operator(&"0".repeat(self.depth)).expect("zero path is always valid")
    }

    pub fn max_unitarity_residual(&self) -> f64 {
        self.nodes.values().map(unitarity_residual).fold(0.0, f64::max)
    }

    /// Largest `‖leaf operator - K_c‖_F` over live leaves.
    pub fn max_leaf_error(&self, kraus: &KrausSet) -> f64 {
        self.leaves
            .iter()
            .filter_map(|(path, c)| c.map(|c| (path, c)))
            .map(|(path, c)| (self.path_operator(path).expect("leaf path") - &kraus.ops[c]).norm())
            .fold(0.0, f64::max)
    }

    /// Write `node_<bits>.bin` (row-major little-endian f64 pairs re, im),
    /// `node_<bits>_abs.csv` magnitude grids, and `manifest.csv`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        self.export_with(dir, true)
    }

    /// [`export`](Self::export), optionally without the magnitude grids.
    pub fn export_with(&self, dir: &Path, magnitudes: bool) -> Result<()> {
        fs::create_dir_all(dir)?;
        let name = |key: &str| if key.is_empty() { "root".to_string() } else { key.to_string() };
        let mut manifest = fs::File::create(dir.join("manifest.csv"))?;
        writeln!(manifest, "kind,bitstring,file,rows,cols,kraus_index")?;
        for (key, u) in &self.nodes {
            let file = format!("node_{}.bin", name(key));
            let mut bytes = Vec::with_capacity(u.len() * 16);
            for r in 0..u.nrows() {
                for c in 0..u.ncols() {
                    bytes.extend_from_slice(&u[(r, c)].re.to_le_bytes());
                    bytes.extend_from_slice(&u[(r, c)].im.to_le_bytes());
                }
            }
            fs::write(dir.join(&file), bytes)?;
            if magnitudes {
                let mut csv = std::io::BufWriter::new(fs::File::create(dir.join(format!("node_{}_abs.csv", name(key))))?);
                for r in 0..u.nrows() {
                    let row: Vec<String> = (0..u.ncols()).map(|c| fmt_f64(u[(r, c)].norm())).collect();
                    writeln!(csv, "{}", row.join(","))?;
                }
            }
            writeln!(manifest, "node,{key},{file},{},{},", u.nrows(), u.ncols())?;
        }
        for (path, c) in &self.leaves {
            let idx = c.map(|c| c.to_string()).unwrap_or_else(|| "unreachable".into());
            writeln!(manifest, "leaf,{path},,,,{idx}")?;
        }
        Ok(())
    }
}

/// Read a node file written by [`ChannelTree::export`].
pub fn read_node(path: &Path, rows: usize, cols: usize) -> Result<DMatrix<C64>> {
    let bytes = fs::read(path)?;
    if bytes.len() != rows * cols * 16 {
        return Err(Error::Parse(format!(
            "{}: expected {} bytes, found {}",
            path.display(),
            rows * cols * 16,
            bytes.len()
        )));
    }
    let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8-byte slice"));
    Ok(DMatrix::from_fn(rows, cols, |r, c| {
        let o = (r * cols + c) * 16;
        C64::new(f(o), f(o + 8))
    }))
}
