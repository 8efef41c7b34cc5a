//! Symbolic polynomial right-hand sides.
//!
//! A [`RhsSpec`] lists, for every output mode, the normal-ordered monomials
//! `c · Π z_{site + offset}` that make up `F`. Modes are numbered
//! `field * L + site`; single-field specs therefore coincide with grid indices.
//!
//! Text layout, one record per line (`#` starts a comment):
//!
//! ```text
//! dims 1
//! extents 8
//! spacing 1.0000000000000000e-1
//! origin 0.0000000000000000e0
//! centering cell
//! boundary periodic
//! fields 1
//! degree 2
//! order 2
//! radius 1
//! m 0 3 <re> <im> | 0@-1,0 0@0,0
//! ```
//!
//! A monomial line names the output field and site, the complex coefficient,
//! and the factor multiset as `field@dx,dy` offsets relative to the output site.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{check_len, BurgersRhs, FisherRhs, Rhs};
use crate::error::{Error, Result};
use crate::grid::{fmt_f64, Boundary, Centering, GridSpec, Neighbor, VelocityField};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Factor {
    pub field: u8,
    pub offset: [i32; 2],
}

impl Factor {
    pub fn new(field: u8, dx: i32, dy: i32) -> Self {
        Self {
            field,
            offset: [dx, dy],
        }
    }

    pub fn manhattan(&self) -> usize {
        (self.offset[0].unsigned_abs() + self.offset[1].unsigned_abs()) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: C64,
    pub factors: Vec<Factor>,
}

impl Monomial {
    pub fn new(coeff: C64, mut factors: Vec<Factor>) -> Self {
        factors.sort();
        Self { coeff, factors }
    }

    pub fn degree(&self) -> usize {
        self.factors.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhsSpec {
    pub grid: GridSpec,
    pub n_fields: usize,
    pub degree: usize,
    pub deriv_order: usize,
    pub radius: usize,
    /// Monomials of output mode `field * L + site`.
    pub rows: Vec<Vec<Monomial>>,
}

impl RhsSpec {
    pub fn empty(grid: GridSpec, n_fields: usize, degree: usize, deriv_order: usize, radius: usize) -> Self {
        let rows = vec![Vec::new(); n_fields * grid.len()];
        Self {
            grid,
            n_fields,
            degree,
            deriv_order,
            radius,
            rows,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.rows.len()
    }

    pub fn dims(&self) -> usize {
        self.grid.dims()
    }

    pub fn push(&mut self, field: usize, site: usize, m: Monomial) {
        self.rows[field * self.grid.len() + site].push(m);
    }

    /// Sort factors and monomials, merge repeated factor multisets, drop exact zeros.
    pub fn canonicalize(&mut self) {
        for row in &mut self.rows {
            let mut merged: BTreeMap<Vec<Factor>, C64> = BTreeMap::new();
            for m in row.drain(..) {
                let mut f = m.factors;
                f.sort();
                *merged.entry(f).or_insert(C64::new(0.0, 0.0)) += m.coeff;
            }
            *row = merged
                .into_iter()
                .filter(|(_, c)| *c != C64::new(0.0, 0.0))
                .map(|(factors, coeff)| Monomial { coeff, factors })
                .collect();
        }
    }

    pub fn validate(&self) -> Result<()> {
        let min_radius = self.deriv_order.div_ceil(2);
        if self.radius < min_radius {
            return Err(Error::InfeasibleStencil {
                order: self.deriv_order,
                radius: self.radius,
                min: min_radius,
            });
        }
        if self.rows.len() != self.n_fields * self.grid.len() {
            return Err(Error::LengthMismatch {
                expected: self.n_fields * self.grid.len(),
                found: self.rows.len(),
            });
        }
        for m in self.rows.iter().flatten() {
            if m.degree() > self.degree {
                return Err(Error::InvalidParameter(format!(
                    "monomial of degree {} exceeds declared degree {}",
                    m.degree(),
                    self.degree
                )));
            }
            for f in &m.factors {
                if f.manhattan() > self.radius {
                    return Err(Error::InvalidParameter(format!(
                        "factor offset {:?} outside radius {}",
                        f.offset, self.radius
                    )));
                }
                if f.field as usize >= self.n_fields {
                    return Err(Error::InvalidParameter(format!("factor field {} out of range", f.field)));
                }
                if self.dims() == 1 && f.offset[1] != 0 {
                    return Err(Error::InvalidParameter("1D spec with a y offset".into()));
                }
            }
            if !(m.coeff.re.is_finite() && m.coeff.im.is_finite()) {
                return Err(Error::InvalidParameter("non-finite coefficient".into()));
            }
        }
        Ok(())
    }

    /// Monomial with ghost factors folded into its coefficient and factors
    /// mapped to absolute, sorted mode indices.
    pub fn resolve(&self, row: usize, m: &Monomial) -> (C64, Vec<usize>) {
        let l = self.grid.len();
        let site = row % l;
        let mut coeff = m.coeff;
        let mut modes = Vec::with_capacity(m.factors.len());
        for f in &m.factors {
            match self.grid.step_multi(site, f.offset) {
                Neighbor::Index(k) => modes.push(f.field as usize * l + k),
                Neighbor::Boundary(b) => coeff *= b,
            }
        }
        modes.sort_unstable();
        (coeff, modes)
    }

    /// All rows with ghost factors resolved.
    pub fn resolved(&self) -> Vec<Vec<(C64, Vec<usize>)>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(row, ms)| ms.iter().map(|m| self.resolve(row, m)).collect())
            .collect()
    }

    pub fn monomial_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn to_text(&self) -> String {
        let g = &self.grid;
        let join = |v: Vec<String>| v.join(" ");
        let mut s = String::new();
        let _ = writeln!(s, "dims {}", g.dims());
        let _ = writeln!(s, "extents {}", join(g.extents().iter().map(|e| e.to_string()).collect()));
        let _ = writeln!(s, "spacing {}", join(g.spacing().iter().map(|&h| fmt_f64(h)).collect()));
        let _ = writeln!(s, "origin {}", join(g.origin().iter().map(|&o| fmt_f64(o)).collect()));
        let _ = writeln!(
            s,
            "centering {}",
            match g.centering() {
                Centering::Cell => "cell",
                Centering::Node => "node",
            }
        );
        match g.boundary() {
            Boundary::Periodic => s.push_str("boundary periodic\n"),
            Boundary::Dirichlet { low, high } => {
                let _ = writeln!(
                    s,
                    "boundary dirichlet {} {} {} {}",
                    fmt_f64(low.re),
                    fmt_f64(low.im),
                    fmt_f64(high.re),
                    fmt_f64(high.im)
                );
            }
            Boundary::CavityWalls { lid_velocity } => {
                let _ = writeln!(s, "boundary cavity {}", fmt_f64(*lid_velocity));
            }
        }
        let _ = writeln!(s, "fields {}", self.n_fields);
        let _ = writeln!(s, "degree {}", self.degree);
        let _ = writeln!(s, "order {}", self.deriv_order);
        let _ = writeln!(s, "radius {}", self.radius);
        let l = g.len();
        for (row, ms) in self.rows.iter().enumerate() {
            for m in ms {
                let _ = write!(s, "m {} {} {} {} |", row / l, row % l, fmt_f64(m.coeff.re), fmt_f64(m.coeff.im));
                for f in &m.factors {
                    let _ = write!(s, " {}@{},{}", f.field, f.offset[0], f.offset[1]);
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut header: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        let mut monos = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let key = words.next().unwrap_or("");
            if key == "m" {
                monos.push((n + 1, line));
            } else {
                header.insert(key, words.collect());
            }
        }
        let get = |k: &str| header.get(k).ok_or_else(|| Error::Parse(format!("missing `{k}` line")));
        let nums = |k: &str| -> Result<Vec<f64>> {
            get(k)?
                .iter()
                .map(|w| w.parse::<f64>().map_err(|e| Error::Parse(format!("`{k}`: {e}"))))
                .collect()
        };
        let int = |k: &str| -> Result<usize> {
            get(k)?
                .first()
                .ok_or_else(|| Error::Parse(format!("`{k}` needs a value")))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("`{k}`: {e}")))
        };
        let extents = get("extents")?
            .iter()
            .map(|w| w.parse::<usize>().map_err(|e| Error::Parse(format!("`extents`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if extents.len() != int("dims")? {
            return Err(Error::Parse("`extents` does not match `dims`".into()));
        }
        let b = get("boundary")?;
        let boundary = match b.first().copied() {
            Some("periodic") => Boundary::Periodic,
            Some("dirichlet") => {
                let v = b[1..]
                    .iter()
                    .map(|w| w.parse().ok())
                    .collect::<Option<Vec<f64>>>()
                    .filter(|v| v.len() == 4)
                    .ok_or_else(|| Error::Parse("dirichlet boundary needs 4 numbers".into()))?;
                Boundary::Dirichlet {
                    low: C64::new(v[0], v[1]),
                    high: C64::new(v[2], v[3]),
                }
            }
            Some("cavity") => {
                let u = b
                    .get(1)
                    .and_then(|w| w.parse::<f64>().ok())
                    .ok_or_else(|| Error::Parse("cavity boundary needs a lid velocity".into()))?;
                Boundary::CavityWalls { lid_velocity: u }
            }
            other => return Err(Error::Parse(format!("unknown boundary {other:?}"))),
        };
        let centering = match get("centering")?.first().copied() {
            Some("cell") => Centering::Cell,
            Some("node") => Centering::Node,
            other => return Err(Error::Parse(format!("unknown centering {other:?}"))),
        };
        let grid = GridSpec::new(extents, nums("spacing")?, boundary)?
            .with_origin(&nums("origin")?)?
            .with_centering(centering);
        let mut spec = RhsSpec::empty(grid, int("fields")?, int("degree")?, int("order")?, int("radius")?);
        let l = spec.grid.len();
        for (n, line) in monos {
            let perr = |msg: &str| Error::Parse(format!("line {n}: {msg}"));
            let (head, tail) = line.split_once('|').ok_or_else(|| perr("missing `|`"))?;
            let w: Vec<&str> = head.split_whitespace().collect();
            if w.len() != 5 {
                return Err(perr("expected `m field site re im`"));
            }
            let field: usize = w[1].parse().map_err(|_| perr("bad field"))?;
            let site: usize = w[2].parse().map_err(|_| perr("bad site"))?;
            let re: f64 = w[3].parse().map_err(|_| perr("bad coefficient"))?;
            let im: f64 = w[4].parse().map_err(|_| perr("bad coefficient"))?;
            if field >= spec.n_fields || site >= l {
                return Err(perr("output mode out of range"));
            }
            let mut factors = Vec::new();
            for tok in tail.split_whitespace() {
                let (f, off) = tok.split_once('@').ok_or_else(|| perr("factor must be field@dx,dy"))?;
                let (dx, dy) = off.split_once(',').ok_or_else(|| perr("factor must be field@dx,dy"))?;
                factors.push(Factor::new(
                    f.parse().map_err(|_| perr("bad factor field"))?,
                    dx.parse().map_err(|_| perr("bad offset"))?,
                    dy.parse().map_err(|_| perr("bad offset"))?,
                ));
            }
            spec.push(field, site, Monomial::new(C64::new(re, im), factors));
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Parameters consumed by the builtin right-hand sides.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsParams {
    pub re: f64,
    pub pe: f64,
    pub da: f64,
    pub velocity: VelocityField,
    /// Taps of the generic linear stencil; empty means the unit nearest-neighbor coupling.
    pub taps: Vec<([i32; 2], C64)>,
}

impl Default for RhsParams {
    fn default() -> Self {
        Self {
            re: 1.0,
            pe: 1.0,
            da: 1.0,
            velocity: VelocityField::Rotational,
            taps: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinRhs {
    Burgers { re: f64 },
    Fisher { pe: f64, da: f64, velocity: VelocityField },
    /// Joint vorticity (field 0) and streamfunction (field 1) tendencies.
    CavityVorticity { re: f64 },
    GenericLinear { taps: Vec<([i32; 2], C64)> },
}

impl BuiltinRhs {
    pub fn from_id(id: &str, params: &RhsParams) -> Result<Self> {
        Ok(match id {
            "burgers" => BuiltinRhs::Burgers { re: params.re },
            "fisher" => BuiltinRhs::Fisher {
                pe: params.pe,
                da: params.da,
                velocity: params.velocity.clone(),
            },
            "cavity-vorticity" => BuiltinRhs::CavityVorticity { re: params.re },
            "generic-linear" => BuiltinRhs::GenericLinear {
                taps: params.taps.clone(),
            },
            other => return Err(Error::UnknownBuiltin(other.to_string())),
        })
    }

    pub fn to_spec(&self, grid: &GridSpec) -> Result<RhsSpec> {
        let g = grid.clone();
        let c = |x: f64| C64::new(x, 0.0);
        let mut spec = match self {
            BuiltinRhs::Burgers { re } => {
                let rhs = BurgersRhs::new(g.clone(), *re)?;
                let dx = g.spacing()[0];
                let nu = 1.0 / (rhs.reynolds() * dx * dx);
                let h = 0.5 / dx;
                let mut s = RhsSpec::empty(g.clone(), 1, 2, 2, 1);
                for k in 0..g.len() {
                    s.push(0, k, Monomial::new(c(nu), vec![Factor::new(0, -1, 0)]));
                    s.push(0, k, Monomial::new(c(-2.0 * nu), vec![Factor::new(0, 0, 0)]));
                    s.push(0, k, Monomial::new(c(nu), vec![Factor::new(0, 1, 0)]));
                    s.push(0, k, Monomial::new(c(-h), vec![Factor::new(0, 0, 0), Factor::new(0, 1, 0)]));
                    s.push(0, k, Monomial::new(c(h), vec![Factor::new(0, -1, 0), Factor::new(0, 0, 0)]));
                }
                s
            }
            BuiltinRhs::Fisher { pe, da, velocity } => {
                let rhs = FisherRhs::new(g.clone(), *pe, *da, velocity.clone())?;
                let (dx, dy) = (g.spacing()[0], g.spacing()[1]);
                let (wx, wy) = (1.0 / (pe * dx * dx), 1.0 / (pe * dy * dy));
                let mut s = RhsSpec::empty(g.clone(), 1, 2, 2, 1);
                let offs = [(1, 0), (-1, 0), (0, 1), (0, -1)];
                for k in 0..g.len() {
                    let adv = rhs.advection_weights(k);
                    for (slot, &(ox, oy)) in offs.iter().enumerate() {
                        s.push(0, k, Monomial::new(c(adv[slot]), vec![Factor::new(0, ox, oy)]));
                        let w = if ox != 0 { wx } else { wy };
                        s.push(0, k, Monomial::new(c(w), vec![Factor::new(0, ox, oy)]));
                    }
                    s.push(0, k, Monomial::new(c(-2.0 * (wx + wy)), vec![Factor::new(0, 0, 0)]));
                    s.push(0, k, Monomial::new(c(*da), vec![Factor::new(0, 0, 0)]));
                    s.push(0, k, Monomial::new(c(-da), vec![Factor::new(0, 0, 0), Factor::new(0, 0, 0)]));
                }
                s
            }
            BuiltinRhs::CavityVorticity { re } => cavity_spec(&g, *re)?,
            BuiltinRhs::GenericLinear { taps } => {
                let taps = if taps.is_empty() {
                    nearest_neighbor_taps(g.dims())
                } else {
                    taps.clone()
                };
                let radius = taps
                    .iter()
                    .map(|(o, _)| (o[0].unsigned_abs() + o[1].unsigned_abs()) as usize)
                    .max()
                    .unwrap_or(0);
                let order = (2 * radius).min(2);
                let mut s = RhsSpec::empty(g.clone(), 1, 1, order, radius.max(1));
                for k in 0..g.len() {
                    for (o, coeff) in &taps {
                        s.push(0, k, Monomial::new(*coeff, vec![Factor::new(0, o[0], o[1])]));
                    }
                }
                s
            }
        };
        spec.canonicalize();
        spec.validate()?;
        Ok(spec)
    }
}

/// Unit couplings to the `2d` nearest neighbors, no self term.
pub fn nearest_neighbor_taps(dims: usize) -> Vec<([i32; 2], C64)> {
    let mut taps = Vec::new();
    for axis in 0..dims {
        for s in [-1, 1] {
            let mut o = [0; 2];
            o[axis] = s;
            taps.push((o, C64::new(1.0, 0.0)));
        }
    }
    taps
}

fn cavity_spec(g: &GridSpec, re: f64) -> Result<RhsSpec> {
    super::require_positive("Re", re)?;
    if g.dims() != 2 || !matches!(g.boundary(), Boundary::CavityWalls { .. }) {
        return Err(Error::InvalidGrid("cavity spec needs a 2D CavityWalls grid".into()));
    }
    let (nx, ny) = (g.extents()[0], g.extents()[1]);
    let (dx, dy) = (g.spacing()[0], g.spacing()[1]);
    let c = |x: f64| C64::new(x, 0.0);
    let (om, ps) = (0u8, 1u8);
    let mut s = RhsSpec::empty(g.clone(), 2, 2, 2, 1);
    let q = 1.0 / (4.0 * dx * dy);
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let k = g.flat(&[i, j]);
            // -ψ_y ω_x
            for (sy, sx) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                let sign = -(sy * sx) as f64;
                s.push(0, k, Monomial::new(c(sign * q), vec![Factor::new(ps, 0, sy), Factor::new(om, sx, 0)]));
                // +ψ_x ω_y
                let sign = (sx * sy) as f64;
                s.push(0, k, Monomial::new(c(sign * q), vec![Factor::new(ps, sx, 0), Factor::new(om, 0, sy)]));
            }
            for field in [om, ps] {
                let scale = if field == om { 1.0 / re } else { 1.0 };
                let (wx, wy) = (scale / (dx * dx), scale / (dy * dy));
                for (o, w) in [([1, 0], wx), ([-1, 0], wx), ([0, 1], wy), ([0, -1], wy)] {
                    s.push(field as usize, k, Monomial::new(c(w), vec![Factor::new(field, o[0], o[1])]));
                }
                s.push(field as usize, k, Monomial::new(c(-2.0 * (wx + wy)), vec![Factor::new(field, 0, 0)]));
            }
            s.push(1, k, Monomial::new(c(1.0), vec![Factor::new(om, 0, 0)]));
        }
    }
    Ok(s)
}

/// Symbolic spec of a builtin right-hand side, looked up by id.
pub fn rhs_to_spec(id: &str, grid: &GridSpec, params: &RhsParams) -> Result<RhsSpec> {
    BuiltinRhs::from_id(id, params)?.to_spec(grid)
}

/// Every degree-`r` monomial over the radius-`⌈K/2⌉` Manhattan neighborhood of each site,
/// with unit coefficients. The centre site is included only with `self_coupling`.
pub fn full_stencil_spec(grid: &GridSpec, deriv_order: usize, degree: usize, self_coupling: bool) -> Result<RhsSpec> {
    let radius = deriv_order.div_ceil(2).max(1);
    let neighborhood = manhattan_ball(grid.dims(), radius, self_coupling);
    let mut spec = RhsSpec::empty(grid.clone(), 1, degree, deriv_order, radius);
    let mut combos = Vec::new();
    multisets(neighborhood.len(), degree, 0, &mut Vec::new(), &mut combos);
    for k in 0..grid.len() {
        for combo in &combos {
            let factors = combo
                .iter()
                .map(|&n| {
                    let o = neighborhood[n];
                    Factor::new(0, o[0], o[1])
                })
                .collect();
            spec.push(0, k, Monomial::new(C64::new(1.0, 0.0), factors));
        }
    }
    spec.validate()?;
    Ok(spec)
}

/// Offsets with Manhattan norm in `1..=radius` (or `0..=radius`), sorted.
pub fn manhattan_ball(dims: usize, radius: usize, include_centre: bool) -> Vec<[i32; 2]> {
    let r = radius as i32;
    let ys = if dims > 1 { -r..=r } else { 0..=0 };
    let mut out = Vec::new();
    for dx in -r..=r {
        for dy in ys.clone() {
            let m = dx.abs() + dy.abs();
            if m <= r && (m > 0 || include_centre) {
                out.push([dx, dy]);
            }
        }
    }
    out
}

fn multisets(n: usize, r: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == r {
        out.push(cur.clone());
        return;
    }
    for i in start..n {
        cur.push(i);
        multisets(n, r, i, cur, out);
        cur.pop();
    }
}

/// Numeric evaluation of a symbolic spec.
#[derive(Debug, Clone)]
pub struct SpecRhs {
    spec: RhsSpec,
    rows: Vec<Vec<(C64, Vec<usize>)>>,
}

impl SpecRhs {
    pub fn new(spec: RhsSpec) -> Result<Self> {
        spec.validate()?;
        let rows = spec.resolved();
        Ok(Self { spec, rows })
    }

    pub fn spec(&self) -> &RhsSpec {
        &self.spec
    }

    pub fn eval_checked(&self, z: &[C64]) -> Result<Vec<C64>> {
        check_len(self, z.len())?;
        Ok(self.eval(z))
    }
}

impl Rhs for SpecRhs {
    fn grid(&self) -> &GridSpec {
        &self.spec.grid
    }

    fn len(&self) -> usize {
        self.rows.len()
    }

    fn eval(&self, z: &[C64]) -> Vec<C64> {
        self.rows
            .iter()
            .map(|ms| {
                ms.iter()
                    .map(|(c, idx)| idx.iter().fold(*c, |acc, &i| acc * z[i]))
                    .sum()
            })
            .collect()
    }

    fn jacobian_apply(&self, z: &[C64], w: &[C64]) -> Vec<C64> {
        self.rows
            .iter()
            .map(|ms| {
                let mut acc = C64::new(0.0, 0.0);
                for (c, idx) in ms {
                    for (m, &im) in idx.iter().enumerate() {
                        let rest = idx
                            .iter()
                            .enumerate()
                            .filter(|&(n, _)| n != m)
                            .fold(*c, |p, (_, &i)| p * z[i]);
                        acc += rest * w[im];
                    }
                }
                acc
            })
            .collect()
    }
}
