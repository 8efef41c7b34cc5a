//! Gaussian shot-noise readout of the real amplitudes and its summary statistics.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::grid::fmt_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct ShotStats {
    pub n_shots: usize,
    pub sample_mean: Vec<f64>,
    /// Unbiased (divisor `n - 1`) per-point sample variance.
    pub sample_var: Vec<f64>,
    pub var_th: Vec<f64>,
    pub rel_bias: f64,
    pub rel_l2: f64,
    /// `sqrt(2 / (n - 1))`, the relative standard deviation of a Gaussian sample variance.
    pub envelope: f64,
}

pub fn sampling_envelope(n_shots: usize) -> f64 {
    (2.0 / (n_shots as f64 - 1.0)).sqrt()
}

/// Generator for grid point `index`: the run seed selects the key, the point selects the stream.
pub fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draw `n_shots` Gaussian shots per point and compare their variance with `var_th`.
pub fn sample_readout(mean_field: &[f64], var_th: &[f64], n_shots: usize, seed: u64) -> Result<ShotStats> {
    if n_shots < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 shots, got {n_shots}")));
    }
    if mean_field.len() != var_th.len() {
        return Err(Error::LengthMismatch {
            expected: mean_field.len(),
            found: var_th.len(),
        });
    }
    if let Some(index) = var_th.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    if let Some(index) = var_th.iter().position(|&v| v < 0.0) {
        return Err(Error::NegativeVariance { index });
    }
    let per_point: Vec<(f64, f64)> = (0..mean_field.len())
        .into_par_iter()
        .map(|k| {
            let mut rng = point_rng(seed, k);
            let sd = var_th[k].sqrt();
            // Deviations from the mean field, so a zero variance reproduces it exactly.
            let dev: Vec<f64> = (0..n_shots).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
            let mean = dev.iter().sum::<f64>() / n_shots as f64;
            let ss: f64 = dev.iter().map(|x| (x - mean) * (x - mean)).sum();
            (mean_field[k] + mean, ss / (n_shots as f64 - 1.0))
        })
        .collect();
    let (sample_mean, sample_var): (Vec<f64>, Vec<f64>) = per_point.into_iter().unzip();
    let (rel_bias, rel_l2) = relative_errors(&sample_var, var_th);
    Ok(ShotStats {
        n_shots,
        sample_mean,
        sample_var,
        var_th: var_th.to_vec(),
        rel_bias,
        rel_l2,
        envelope: sampling_envelope(n_shots),
    })
}

/// `(V̄_em - V̄_th) / V̄_th` and `‖Var_em - Var_th‖₂ / ‖Var_th‖₂`; both zero when `Var_th ≡ 0`
/// and the estimate agrees.
fn relative_errors(em: &[f64], th: &[f64]) -> (f64, f64) {
    let n = th.len().max(1) as f64;
    let (m_em, m_th) = (em.iter().sum::<f64>() / n, th.iter().sum::<f64>() / n);
    let diff: f64 = em.iter().zip(th).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let norm: f64 = th.iter().map(|b| b * b).sum::<f64>().sqrt();
    let ratio = |num: f64, den: f64| {
        if den > 0.0 {
            num / den
        } else if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    (ratio(m_em - m_th, m_th), ratio(diff, norm))
}

/// Where the theoretical readout variance comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarModel {
    /// The variances propagated alongside the amplitudes.
    Propagated,
    /// The same variance at every point and time.
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub t: f64,
    pub var_th_mean: f64,
    pub var_em_mean: f64,
    pub rel_bias: f64,
    pub rel_l2: f64,
}

/// One statistics row per requested save time; row `i` samples with seed `seed + i`.
pub fn stats_table(traj: &Trajectory, var_model: VarModel, n_shots: usize, times: &[f64], seed: u64) -> Result<Vec<TableRow>> {
    times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let snap = traj.snapshot_at(t)?;
            let var_th = match var_model {
                VarModel::Propagated => snap.var.clone(),
                VarModel::Constant(v) => vec![v; snap.len()],
            };
            let stats = sample_readout(&snap.real_part(), &var_th, n_shots, seed.wrapping_add(i as u64))?;
            let n = var_th.len() as f64;
            Ok(TableRow {
                t,
                var_th_mean: var_th.iter().sum::<f64>() / n,
                var_em_mean: stats.sample_var.iter().sum::<f64>() / n,
                rel_bias: stats.rel_bias,
                rel_l2: stats.rel_l2,
            })
        })
        .collect()
}

/// `t,var_th_mean,var_em_mean,rel_bias,rel_l2`.
pub fn write_table_csv<W: Write>(rows: &[TableRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,var_th_mean,var_em_mean,rel_bias,rel_l2")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.var_th_mean),
            fmt_f64(r.var_em_mean),
            fmt_f64(r.rel_bias),
            fmt_f64(r.rel_l2)
        )?;
    }
    Ok(())
}
