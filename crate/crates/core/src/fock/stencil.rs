use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Moment residuals above this reject a computed stencil.
pub const MOMENT_TOL: f64 = 1e-9;

pub fn min_radius(deriv_order: usize) -> usize {
    deriv_order.div_ceil(2)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Central finite-difference weights `c_{-R..=R}` for the `K`-th derivative on a unit grid.
///
/// Imposes `c_{-m} = (-1)^K c_m`, `Σ m^j c_m = 0` for `j < K` and `Σ m^K c_m = K!`;
/// any remaining freedom (`R > ⌈K/2⌉`) annihilates the next moments of the same parity.
pub fn stencil_coefficients(deriv_order: usize, radius: usize) -> Result<Vec<f64>> {
    let k = deriv_order;
    if k == 0 {
        return Err(Error::InvalidParameter("derivative order must be >= 1".into()));
    }
    if radius < min_radius(k) {
        return Err(Error::InfeasibleStencil {
            order: k,
            radius,
            min: min_radius(k),
        });
    }
    let even = k.is_multiple_of(2);
    // Unknowns: c_0..c_R for even K, c_1..c_R for odd K (c_0 = 0).
    let first = usize::from(!even);
    let unknowns: Vec<usize> = (first..=radius).collect();
    let n = unknowns.len();
    // Moments of K's parity, starting at 0 or 1; the K-th one is the normalization.
    let moments: Vec<usize> = (0..n).map(|i| first + 2 * i).collect();
    let a = DMatrix::from_fn(n, n, |row, col| {
        let j = moments[row] as i32;
        let m = unknowns[col] as f64;
        // Contribution of the pair {+m, -m}; the centre counts once.
        if unknowns[col] == 0 {
            if j == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            2.0 * m.powi(j)
        }
    });
    let b = DVector::from_fn(n, |row, _| if moments[row] == k { factorial(k) } else { 0.0 });
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::InvalidParameter(format!("singular moment system for K={k}, R={radius}")))?;
    let sign = if even { 1.0 } else { -1.0 };
    let mut c = vec![0.0; 2 * radius + 1];
    for (col, &m) in unknowns.iter().enumerate() {
        c[radius + m] = x[col];
        if m > 0 {
            c[radius - m] = sign * x[col];
        }
    }
    let res = moment_residual(&c, k);
    if res > MOMENT_TOL {
        return Err(Error::InvalidParameter(format!("stencil moment residual {res:e} for K={k}, R={radius}")));
    }
    Ok(c)
}

/// Largest violation of the moment conditions `j = 0..=K`.
pub fn moment_residual(c: &[f64], deriv_order: usize) -> f64 {
    let r = (c.len() / 2) as i32;
    (0..=deriv_order)
        .map(|j| {
            let s: f64 = c.iter().enumerate().map(|(i, &w)| ((i as i32 - r) as f64).powi(j as i32) * w).sum();
            let want = if j == deriv_order { factorial(j) } else { 0.0 };
            (s - want).abs()
        })
        .fold(0.0, f64::max)
}
