//! Structured 1D/2D grids and the coherent-amplitude field state.
//!
//! Points are stored row-major with axis order `(x, y)`: the flat index of
//! `(i, j)` is `i * ny + j`, so `y` varies fastest.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::C64;

/// Largest per-axis offset accepted by [`GridSpec::neighbor`].
pub const MAX_NEIGHBOR_OFFSET: usize = 2;

/// Floor applied to `sqrt(x^2 + y^2)` in the rotational velocity field.
pub const ROTATIONAL_RADIUS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    Periodic,
    /// Ghost values just outside the low and high ends of every axis.
    Dirichlet { low: C64, high: C64 },
    /// Lid-driven cavity walls; the streamfunction vanishes outside the box.
    CavityWalls { lid_velocity: f64 },
}

/// Where sample points sit within each grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Centering {
    /// `x_i = origin + (i + 1/2) dx`
    Cell,
    /// `x_i = origin + i dx`
    Node,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    extents: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    centering: Centering,
    boundary: Boundary,
}

/// Result of stepping off a grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Neighbor {
    Index(usize),
    Boundary(C64),
}

impl GridSpec {
    pub fn new(extents: Vec<usize>, spacing: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if extents.is_empty() || extents.len() > 2 {
            return Err(Error::InvalidGrid(format!(
                "grids must be 1D or 2D, got {} axes",
                extents.len()
            )));
        }
        if spacing.len() != extents.len() {
            return Err(Error::InvalidGrid(format!(
                "{} spacings for {} axes",
                spacing.len(),
                extents.len()
            )));
        }
        if let Some(n) = extents.iter().find(|&&n| n < 3) {
            return Err(Error::InvalidGrid(format!("extent {n} < 3")));
        }
        if let Some(h) = spacing.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(Error::InvalidGrid(format!("spacing {h} is not positive")));
        }
        let origin = vec![0.0; extents.len()];
        Ok(Self {
            extents,
            spacing,
            origin,
            centering: Centering::Cell,
            boundary,
        })
    }

    pub fn line(n: usize, dx: f64, boundary: Boundary) -> Result<Self> {
        Self::new(vec![n], vec![dx], boundary)
    }

    pub fn plane(nx: usize, ny: usize, dx: f64, dy: f64, boundary: Boundary) -> Result<Self> {
        Self::new(vec![nx, ny], vec![dx, dy], boundary)
    }

    pub fn with_origin(mut self, origin: &[f64]) -> Result<Self> {
        if origin.len() != self.extents.len() || origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin does not match grid axes".into()));
        }
        self.origin = origin.to_vec();
        Ok(self)
    }

    pub fn with_centering(mut self, centering: Centering) -> Self {
        self.centering = centering;
        self
    }

    pub fn dims(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn centering(&self) -> Centering {
        self.centering
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    /// Total number of points `L`.
    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn stride(&self, axis: usize) -> usize {
        self.extents[axis + 1..].iter().product()
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter()
            .enumerate()
            .map(|(axis, &i)| i * self.stride(axis))
            .sum()
    }

    pub fn unflat(&self, index: usize) -> [usize; 2] {
        match self.dims() {
            1 => [index, 0],
            _ => [index / self.extents[1], index % self.extents[1]],
        }
    }

    /// Coordinate of a (possibly out-of-range) signed index along `axis`.
    pub fn coordinate(&self, axis: usize, i: isize) -> f64 {
        let shift = match self.centering {
            Centering::Cell => 0.5,
            Centering::Node => 0.0,
        };
        self.origin[axis] + (i as f64 + shift) * self.spacing[axis]
    }

    /// Step `offset` points along `axis` from `index`.
    pub fn neighbor(&self, index: usize, axis: usize, offset: isize) -> Result<Neighbor> {
        if offset.unsigned_abs() > MAX_NEIGHBOR_OFFSET {
            return Err(Error::OffsetTooLarge {
                offset,
                max: MAX_NEIGHBOR_OFFSET,
            });
        }
        if axis >= self.dims() {
            return Err(Error::InvalidGrid(format!("axis {axis} out of range")));
        }
        Ok(self.step(index, axis, offset))
    }

    /// Unchecked variant of [`neighbor`](Self::neighbor) used by the stencil kernels.
    pub(crate) fn step(&self, index: usize, axis: usize, offset: isize) -> Neighbor {
        let n = self.extents[axis] as isize;
        let stride = self.stride(axis);
        let pos = ((index / stride) % self.extents[axis]) as isize;
        let target = pos + offset;
        if (0..n).contains(&target) {
            return Neighbor::Index((index as isize + offset * stride as isize) as usize);
        }
        match &self.boundary {
            Boundary::Periodic => {
                let wrapped = target.rem_euclid(n);
                Neighbor::Index((index as isize + (wrapped - pos) * stride as isize) as usize)
            }
            Boundary::Dirichlet { low, high } => {
                Neighbor::Boundary(if target < 0 { *low } else { *high })
            }
            Boundary::CavityWalls { .. } => Neighbor::Boundary(C64::new(0.0, 0.0)),
        }
    }

    /// Multi-axis step; any ghost hit along the way yields its boundary value.
    pub(crate) fn step_multi(&self, index: usize, offset: [i32; 2]) -> Neighbor {
        let mut current = index;
        for (axis, &o) in offset.iter().enumerate().take(self.dims()) {
            if o == 0 {
                continue;
            }
            match self.step(current, axis, o as isize) {
                Neighbor::Index(k) => current = k,
                b @ Neighbor::Boundary(_) => return b,
            }
        }
        Neighbor::Index(current)
    }

    pub(crate) fn value_at(&self, z: &[C64], index: usize, axis: usize, offset: isize) -> C64 {
        match self.step(index, axis, offset) {
            Neighbor::Index(k) => z[k],
            Neighbor::Boundary(v) => v,
        }
    }
}

/// Coherent amplitudes and per-point variances at a simulation time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: GridSpec,
    pub z: Vec<C64>,
    pub var: Vec<f64>,
    pub t: f64,
}

/// Build a validated field at `t = 0`.
pub fn make_field(grid: GridSpec, init_profile: Vec<C64>, init_var: Vec<f64>) -> Result<FieldState> {
    let l = grid.len();
    if init_profile.len() != l || init_var.len() != l {
        return Err(Error::LengthMismatch {
            expected: l,
            found: if init_profile.len() != l {
                init_profile.len()
            } else {
                init_var.len()
            },
        });
    }
    if let Some(k) = init_profile
        .iter()
        .position(|z| !(z.re.is_finite() && z.im.is_finite()))
    {
        return Err(Error::NonFinite { index: k });
    }
    if let Some(k) = init_var.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: k });
    }
    if let Some(k) = init_var.iter().position(|&v| v < 0.0) {
        return Err(Error::NegativeVariance { index: k });
    }
    Ok(FieldState {
        grid,
        z: init_profile,
        var: init_var,
        t: 0.0,
    })
}

impl FieldState {
    pub fn zeros(grid: GridSpec) -> Self {
        let l = grid.len();
        Self {
            grid,
            z: vec![C64::new(0.0, 0.0); l],
            var: vec![0.0; l],
            t: 0.0,
        }
    }

    /// Real-valued profile `f(x)` or `f(x, y)` sampled on the grid coordinates.
    pub fn from_fn(grid: GridSpec, var: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let z = (0..grid.len())
            .map(|k| {
                let [i, j] = grid.unflat(k);
                let x = grid.coordinate(0, i as isize);
                let y = if grid.dims() > 1 {
                    grid.coordinate(1, j as isize)
                } else {
                    0.0
                };
                C64::new(f(x, y), 0.0)
            })
            .collect();
        let l = grid.len();
        make_field(grid, z, vec![var; l])
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.z.iter().map(|z| z.re).collect()
    }

    /// Write the snapshot as CSV: `i[,j],x[,y],re_z,im_z,var`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let two_d = self.grid.dims() == 2;
        if two_d {
            writeln!(w, "i,j,x,y,re_z,im_z,var")?;
        } else {
            writeln!(w, "i,x,re_z,im_z,var")?;
        }
        for k in 0..self.len() {
            let [i, j] = self.grid.unflat(k);
            let x = self.grid.coordinate(0, i as isize);
            if two_d {
                let y = self.grid.coordinate(1, j as isize);
                writeln!(
                    w,
                    "{i},{j},{},{},{},{},{}",
                    fmt_f64(x),
                    fmt_f64(y),
                    fmt_f64(self.z[k].re),
                    fmt_f64(self.z[k].im),
                    fmt_f64(self.var[k])
                )?;
            } else {
                writeln!(
                    w,
                    "{i},{},{},{},{}",
                    fmt_f64(x),
                    fmt_f64(self.z[k].re),
                    fmt_f64(self.z[k].im),
                    fmt_f64(self.var[k])
                )?;
            }
        }
        Ok(())
    }

    /// Read amplitudes and variances back from [`write_csv`](Self::write_csv) output.
    pub fn read_csv<R: BufRead>(grid: GridSpec, r: R) -> Result<Self> {
        let two_d = grid.dims() == 2;
        let skip = if two_d { 4 } else { 2 };
        let mut z = Vec::with_capacity(grid.len());
        let mut var = Vec::with_capacity(grid.len());
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Io(e.to_string()))?;
            if n == 0 || line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != skip + 3 {
                return Err(Error::Parse(format!("line {}: expected {} columns", n + 1, skip + 3)));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))
            };
            z.push(C64::new(num(cols[skip])?, num(cols[skip + 1])?));
            var.push(num(cols[skip + 2])?);
        }
        make_field(grid, z, var)
    }
}

/// 17 significant digits; parses back to the identical `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Velocity used by the advection term of the Fisher-KPP stencil.
#[derive(Debug, Clone, PartialEq)]
pub enum VelocityField {
    Uniform { vx: f64, vy: f64 },
    /// One `(vx, vy)` sample per grid point.
    Sampled { vx: Vec<f64>, vy: Vec<f64> },
    /// Counter-clockwise swirl `(-y, x) / sqrt(x^2 + y^2)`.
    Rotational,
}

impl VelocityField {
    pub fn check(&self, grid: &GridSpec) -> Result<()> {
        match self {
            VelocityField::Sampled { vx, vy } => {
                if vx.len() != grid.len() || vy.len() != grid.len() {
                    return Err(Error::LengthMismatch {
                        expected: grid.len(),
                        found: vx.len().min(vy.len()),
                    });
                }
                if let Some(k) = vx.iter().chain(vy).position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { index: k % grid.len() });
                }
                Ok(())
            }
            VelocityField::Uniform { vx, vy } if !(vx.is_finite() && vy.is_finite()) => {
                Err(Error::NonFinite { index: 0 })
            }
            _ => Ok(()),
        }
    }

    /// Velocity at grid point `(i, j)`; signed indices reach ghost locations.
    pub fn at(&self, grid: &GridSpec, i: isize, j: isize) -> (f64, f64) {
        match self {
            VelocityField::Uniform { vx, vy } => (*vx, *vy),
            VelocityField::Sampled { vx, vy } => {
                let ci = i.clamp(0, grid.extents()[0] as isize - 1) as usize;
                let cj = j.clamp(0, grid.extents()[1] as isize - 1) as usize;
                let k = grid.flat(&[ci, cj]);
                (vx[k], vy[k])
            }
            VelocityField::Rotational => {
                let x = grid.coordinate(0, i);
                let y = grid.coordinate(1, j);
                let r = (x * x + y * y).sqrt().max(ROTATIONAL_RADIUS_FLOOR);
                (-y / r, x / r)
            }
        }
    }
}
