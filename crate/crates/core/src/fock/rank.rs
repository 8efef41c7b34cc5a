use std::io::Write;

use crate::rhs::{manhattan_ball, RhsSpec};

/// Kraus-rank bookkeeping for a lattice right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankReport {
    pub l: usize,
    pub dims: usize,
    pub degree: usize,
    pub deriv_order: usize,
    pub radius: usize,
    /// Neighbours in the radius-`R` Manhattan ball, centre excluded.
    pub stencil_size: usize,
    pub s_eff: usize,
    pub edges: usize,
    pub rank_linear: usize,
    pub rank_poly: usize,
    /// `rank_linear` for degree 1, `rank_poly` otherwise.
    pub rank: usize,
    pub depth: usize,
    pub monomials_per_site: usize,
}

/// `C(n, k)` without overflow for the small arguments used here.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

pub fn ceil_log2(n: usize) -> usize {
    n.max(1).next_power_of_two().trailing_zeros() as usize
}

pub fn rank_analytics(l: usize, dims: usize, deriv_order: usize, degree: usize, self_coupling: bool) -> RankReport {
    let radius = deriv_order.div_ceil(2).max(1);
    let stencil_size = manhattan_ball(dims, radius, false).len();
    let s_eff = stencil_size + usize::from(self_coupling);
    let monomials_per_site = binomial(s_eff + degree - 1, degree);
    let edges = l * stencil_size;
    let rank_linear = 2 * edges;
    let rank_poly = 2 * l * monomials_per_site;
    let rank = if degree == 1 { rank_linear } else { rank_poly };
    RankReport {
        l,
        dims,
        degree,
        deriv_order,
        radius,
        stencil_size,
        s_eff,
        edges,
        rank_linear,
        rank_poly,
        rank,
        depth: ceil_log2(rank),
        monomials_per_site,
    }
}

impl RankReport {
    pub fn for_spec(spec: &RhsSpec, self_coupling: bool) -> Self {
        rank_analytics(spec.grid.len(), spec.dims(), spec.deriv_order, spec.degree, self_coupling)
    }
}

pub const RANK_CSV_HEADER: &str = "L,d,r,K,R,S,S_eff,edges,rank_linear,rank_poly,rank,depth,monomials_per_site";

pub fn write_rank_csv<W: Write>(rows: &[RankReport], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{RANK_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.l,
            r.dims,
            r.degree,
            r.deriv_order,
            r.radius,
            r.stencil_size,
            r.s_eff,
            r.edges,
            r.rank_linear,
            r.rank_poly,
            r.rank,
            r.depth,
            r.monomials_per_site
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_neighbour_line() {
        for l in [8, 64, 1000] {
            let r = rank_analytics(l, 1, 2, 1, false);
            assert_eq!((r.edges, r.rank), (2 * l, 4 * l));
            assert_eq!(r.depth, ceil_log2(4 * l));
        }
    }

    #[test]
    fn self_coupled_quadratic() {
        let r = rank_analytics(10, 1, 2, 2, true);
        assert_eq!((r.s_eff, r.monomials_per_site), (3, 6));
        assert_eq!(r.rank, 120);
    }

    #[test]
    fn log2_ceiling() {
        assert_eq!([1, 2, 3, 4, 5, 16, 17].map(ceil_log2), [0, 1, 2, 2, 3, 4, 5]);
    }
}
