use super::{check_len, Rhs};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Neighbor};
use crate::C64;

/// Translation-invariant linear stencil `F_k = Σ_t c_t z_{k + o_t}`.
#[derive(Debug, Clone)]
pub struct LinearStencilRhs {
    grid: GridSpec,
    taps: Vec<([i32; 2], C64)>,
}

impl LinearStencilRhs {
    pub fn new(grid: GridSpec, taps: Vec<([i32; 2], C64)>) -> Result<Self> {
        for (o, c) in &taps {
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidParameter("stencil coefficient is not finite".into()));
            }
            for axis in 0..2 {
                let reach = o[axis].unsigned_abs() as usize;
                let limit = if axis < grid.dims() { grid.extents()[axis] } else { 1 };
                if reach >= limit {
                    return Err(Error::InvalidParameter(format!(
                        "tap offset {o:?} does not fit the grid"
                    )));
                }
            }
        }
        Ok(Self { grid, taps })
    }

    /// Scaled 5-point (or 3-point) Laplacian `coeff ∇²`.
    pub fn laplacian(grid: GridSpec, coeff: f64) -> Result<Self> {
        let mut taps = Vec::new();
        let mut centre = 0.0;
        for axis in 0..grid.dims() {
            let w = coeff / (grid.spacing()[axis] * grid.spacing()[axis]);
            for s in [-1, 1] {
                let mut o = [0; 2];
                o[axis] = s;
                taps.push((o, C64::new(w, 0.0)));
            }
            centre -= 2.0 * w;
        }
        taps.push(([0, 0], C64::new(centre, 0.0)));
        Self::new(grid, taps)
    }

    pub fn taps(&self) -> &[([i32; 2], C64)] {
        &self.taps
    }

    fn apply(&self, v: &[C64], ghosts: bool) -> Vec<C64> {
        (0..v.len())
            .map(|k| {
                self.taps
                    .iter()
                    .map(|(o, c)| match self.grid.step_multi(k, *o) {
                        Neighbor::Index(n) => c * v[n],
                        Neighbor::Boundary(b) if ghosts => c * b,
                        Neighbor::Boundary(_) => C64::new(0.0, 0.0),
                    })
                    .sum()
            })
            .collect()
    }

    /// Dense matrix of the operator (ghost contributions excluded).
    pub fn matrix(&self) -> Vec<Vec<C64>> {
        let n = self.grid.len();
        let mut m = vec![vec![C64::new(0.0, 0.0); n]; n];
        let mut e = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            e[j] = C64::new(1.0, 0.0);
            for (i, v) in self.apply(&e, false).into_iter().enumerate() {
                m[i][j] = v;
            }
            e[j] = C64::new(0.0, 0.0);
        }
        m
    }

    pub fn eval_checked(&self, z: &[C64]) -> Result<Vec<C64>> {
        check_len(self, z.len())?;
        Ok(self.eval(z))
    }
}

impl Rhs for LinearStencilRhs {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn eval(&self, z: &[C64]) -> Vec<C64> {
        self.apply(z, true)
    }

    fn jacobian_apply(&self, _z: &[C64], w: &[C64]) -> Vec<C64> {
        self.apply(w, false)
    }
}
