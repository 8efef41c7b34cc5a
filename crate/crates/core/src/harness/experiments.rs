use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::*;
use crate::error::{Error, Result};
use crate::evolution::{cavity_grid, cavity_solve, run, CavityOptions, Trajectory};
use crate::fock::{
    assemble_generator, build_fock_with_cap, compile_tree, maximally_mixed, min_radius, moment_residual, pure_density,
    rank_analytics, random_density, stencil_coefficients, verify_channel, write_rank_csv,
};
use crate::grid::{fmt_f64, Boundary, FieldState, GridSpec};
use crate::noise::{noise_sweep, write_sweep_csv};
use crate::readout::{stats_table, write_table_csv};
use crate::rhs::{rhs_to_spec, BurgersRhs, FisherRhs, Rhs, RhsParams};
use crate::C64;

/// Distance from a lid corner inside which boundary velocity errors are not reported.
pub const LID_CORNER_EXCLUSION: f64 = 0.1;

/// Human-readable result lines of a successful run.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub lines: Vec<String>,
}

struct Sink<'a> {
    dir: &'a Path,
    artifacts: &'a mut Vec<String>,
}

impl Sink<'_> {
    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut w = BufWriter::new(File::create(&path)?);
        f(&mut w)?;
        w.flush()?;
        self.artifacts.push(name.to_string());
        Ok(())
    }
}

/// Run the configured experiment, recording every written file (relative to `dir`) in `artifacts`.
pub fn run_experiment(cfg: &ExperimentConfig, seed: u64, dir: &Path, artifacts: &mut Vec<String>) -> Result<Outcome> {
    let mut sink = Sink { dir, artifacts };
    match cfg.experiment {
        ExperimentKind::Burgers1d => {
            let c = cfg.burgers1d();
            let (initial, rhs) = burgers_setup(&c)?;
            solve_pde(&mut sink, &initial, &rhs, &c.time, &c.readout, seed)
        }
        ExperimentKind::Fisher2d => {
            let c = cfg.fisher2d();
            let (initial, rhs) = fisher_setup(&c)?;
            solve_pde(&mut sink, &initial, &rhs, &c.time, &c.readout, seed)
        }
        ExperimentKind::Cavity => solve_cavity(&mut sink, &cfg.cavity()),
        ExperimentKind::KrausCompile => compile(&mut sink, &cfg.kraus_compile(), seed),
        ExperimentKind::RankReport => rank_report(&mut sink, &cfg.rank_report()),
        ExperimentKind::Stencil => stencil_table(&mut sink, &cfg.stencil()),
        ExperimentKind::NoiseSweep => {
            let n = cfg.noise_sweep();
            let (initial, rhs) = burgers_setup(&n.burgers)?;
            let rows = noise_sweep(
                &initial,
                &rhs,
                &n.burgers.time.run_config()?,
                &n.gammas,
                n.calibration,
                &cfg.noise_config(),
            )?;
            sink.write("noise_sweep.csv", |w| write_sweep_csv(&rows, w))?;
            let lines = rows
                .iter()
                .filter(|r| r.t == rows.last().map_or(0.0, |l| l.t))
                .map(|r| {
                    format!(
                        "gamma {}: raw {:.3e}, counterterm {:.3e}, richardson {:.3e}",
                        r.gamma, r.l2_error_raw, r.l2_error_counterterm, r.l2_error_richardson
                    )
                })
                .collect();
            Ok(Outcome { lines })
        }
    }
}

fn boundary(name: BoundaryName, values: [f64; 2]) -> Boundary {
    match name {
        BoundaryName::Periodic => Boundary::Periodic,
        BoundaryName::Dirichlet => Boundary::Dirichlet {
            low: C64::new(values[0], 0.0),
            high: C64::new(values[1], 0.0),
        },
    }
}

/// Cell-centred line on `[0, length]` with a Gaussian bump.
pub fn burgers_setup(c: &Burgers1dConfig) -> Result<(FieldState, BurgersRhs)> {
    let grid = GridSpec::line(c.n, c.length / c.n as f64, boundary(c.boundary, c.boundary_values))?;
    let initial = FieldState::from_fn(grid.clone(), c.readout.variance, |x, _| {
        c.background + c.amplitude * (-((x - c.center) / c.width).powi(2)).exp()
    })?;
    Ok((initial, BurgersRhs::new(grid, c.re)?))
}

/// Cell-centred square `[-half_width, half_width]^2` with a Gaussian blob.
pub fn fisher_setup(c: &Fisher2dConfig) -> Result<(FieldState, FisherRhs)> {
    let w = 2.0 * c.half_width;
    let grid = GridSpec::plane(c.nx, c.ny, w / c.nx as f64, w / c.ny as f64, boundary(c.boundary, [0.0, 0.0]))?
        .with_origin(&[-c.half_width, -c.half_width])?;
    let initial = FieldState::from_fn(grid.clone(), c.readout.variance, |x, y| {
        let r2 = (x - c.center[0]).powi(2) + (y - c.center[1]).powi(2);
        c.background + c.amplitude * (-r2 / (c.width * c.width)).exp()
    })?;
    let rhs = FisherRhs::new(grid, c.pe, c.da, c.velocity_field())?;
    Ok((initial, rhs))
}

fn snapshot_name(t: f64) -> String {
    format!("field_t{t:.6}.csv")
}

fn write_trajectory(sink: &mut Sink, traj: &Trajectory) -> Result<()> {
    for snap in &traj.snapshots {
        sink.write(&snapshot_name(snap.t), |w| snap.write_csv(w))?;
    }
    sink.write("summary.csv", |w| traj.write_summary_csv(w))
}

fn solve_pde<R: Rhs>(
    sink: &mut Sink,
    initial: &FieldState,
    rhs: &R,
    time: &TimeConfig,
    readout: &ReadoutConfig,
    seed: u64,
) -> Result<Outcome> {
    let traj = run(initial, rhs, &time.run_config()?)?;
    write_trajectory(sink, &traj)?;
    let saved: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
    let rows = stats_table(&traj, readout.model(), readout.shots, &saved, seed)?;
    sink.write("stats.csv", |w| write_table_csv(&rows, w))?;
    if let Some(e) = traj.divergence {
        return Err(e);
    }
    let mut lines = vec![format!(
        "{} steps to t = {}, cumulative p_a {:.6}, variance clamps {}",
        traj.reports.len(),
        traj.last.t,
        traj.cumulative_p_a(),
        traj.clamp_events()
    )];
    lines.extend(
        rows.iter()
            .map(|r| format!("t = {}: var_th {:.4e}, var_em {:.4e}, rel_bias {:.3e}", r.t, r.var_th_mean, r.var_em_mean, r.rel_bias)),
    );
    Ok(Outcome { lines })
}

fn write_node_values(grid: &GridSpec, name: &str, values: &[f64], w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "i,j,x,y,{name}")?;
    for (k, v) in values.iter().enumerate() {
        let [i, j] = grid.unflat(k);
        let (x, y) = (grid.coordinate(0, i as isize), grid.coordinate(1, j as isize));
        writeln!(w, "{i},{j},{},{},{}", fmt_f64(x), fmt_f64(y), fmt_f64(*v))?;
    }
    Ok(())
}

fn solve_cavity(sink: &mut Sink, c: &CavityConfig) -> Result<Outcome> {
    let grid = cavity_grid(c.n, c.lid_velocity)?;
    let opts = CavityOptions {
        scheme: c.scheme.into(),
        max_outer: c.max_outer,
        max_inner: c.max_inner,
        inner_tol: c.inner_tol,
    };
    let sol = cavity_solve(&grid, c.re, c.dt, c.dtau, c.tol, &opts)?;
    let n = c.n;
    let psi = sol.psi.real_part();
    sink.write("psi.csv", |w| write_node_values(&grid, "psi", &psi, w))?;
    sink.write("omega.csv", |w| write_node_values(&grid, "omega", &sol.omega.real_part(), w))?;
    sink.write("u.csv", |w| write_node_values(&grid, "u", &sol.u, w))?;
    sink.write("v.csv", |w| write_node_values(&grid, "v", &sol.v, w))?;
    let (kmin, psi_min) = psi
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |a, (k, p)| if p < a.1 { (k, p) } else { a });
    let [imin, jmin] = grid.unflat(kmin);
    // Lid is the top row j = n - 1; the other walls are no-slip. Nodes closer than
    // LID_CORNER_EXCLUSION to a lid corner sit on the velocity jump and are skipped.
    let h = grid.spacing()[0];
    let mut lid_err = 0.0f64;
    let mut wall_err = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            let (x, y) = (i as f64 * h, 1.0 - j as f64 * h);
            if x.hypot(y) < LID_CORNER_EXCLUSION || (1.0 - x).hypot(y) < LID_CORNER_EXCLUSION {
                continue;
            }
            if j == n - 1 {
                lid_err = lid_err.max((sol.u[k] - c.lid_velocity).abs()).max(sol.v[k].abs());
            } else if i == 0 || i == n - 1 || j == 0 {
                wall_err = wall_err.max(sol.u[k].abs()).max(sol.v[k].abs());
            }
        }
    }
    let (x, y) = (grid.coordinate(0, imin as isize), grid.coordinate(1, jmin as isize));
    sink.write("cavity_summary.csv", |w| {
        writeln!(w, "outer_steps,final_delta,poisson_residual,inner_sweeps,inner_cap_hits,psi_min,x_min,y_min,lid_error,wall_error")?;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            sol.outer_steps,
            fmt_f64(sol.final_delta),
            fmt_f64(sol.poisson_residual),
            sol.inner_sweeps,
            sol.inner_cap_hits,
            fmt_f64(psi_min),
            fmt_f64(x),
            fmt_f64(y),
            fmt_f64(lid_err),
            fmt_f64(wall_err)
        )
    })?;
    Ok(Outcome {
        lines: vec![
            format!("steady after {} outer steps (|dω| = {:.3e})", sol.outer_steps, sol.final_delta),
            format!("psi_min {psi_min:.5} at ({x:.4}, {y:.4})"),
            format!("poisson residual {:.3e}, lid error {lid_err:.3e}, wall error {wall_err:.3e}", sol.poisson_residual),
        ],
    })
}

/// Generator matrix of the configured source on `modes` sites of a periodic line.
pub fn compile_generator(c: &KrausCompileConfig) -> Result<DMatrix<C64>> {
    let space = build_fock_with_cap(c.modes, c.levels, c.dim_cap)?;
    let id = match c.source {
        GeneratorSource::Zero => return Ok(DMatrix::zeros(space.dim, space.dim)),
        GeneratorSource::Burgers => "burgers",
        GeneratorSource::GenericLinear => "generic-linear",
    };
    let grid = GridSpec::line(c.modes, c.spacing, Boundary::Periodic)?;
    let params = RhsParams {
        re: c.re,
        ..RhsParams::default()
    };
    let spec = rhs_to_spec(id, &grid, &params)?;
    Ok(assemble_generator(&space, &spec, None)?.matrix)
}

fn compile(sink: &mut Sink, c: &KrausCompileConfig, seed: u64) -> Result<Outcome> {
    let a = compile_generator(c)?;
    let mut kraus = crate::fock::kraus_set(&a, c.dt, c.rank)?;
    if c.fault == FaultInjection::BreakCompleteness {
        for k in kraus.ops.iter_mut().skip(1) {
            *k *= C64::new(0.5, 0.0);
        }
    }
    let tree = compile_tree(&kraus)?;
    tree.export_with(&sink.dir.join("tree"), c.magnitudes)?;
    let mut files: Vec<String> = std::fs::read_dir(sink.dir.join("tree"))?
        .filter_map(|e| e.ok())
        .map(|e| format!("tree/{}", e.file_name().to_string_lossy()))
        .collect();
    files.sort();
    sink.artifacts.extend(files);

    let dim = kraus.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes = vec![maximally_mixed(dim)];
    for p in 0..c.probes {
        probes.push(random_density(dim, 1 + p % dim.max(1), &mut rng));
    }
    let space = build_fock_with_cap(c.modes, c.levels, c.dim_cap)?;
    let z: Vec<C64> = (0..c.modes).map(|k| C64::new(0.3, 0.1 * k as f64)).collect();
    probes.push(pure_density(&space.coherent_state(&z)?));
    let report = verify_channel(&tree, &kraus, &probes);
    let leaf_error = tree.max_leaf_error(&kraus);
    sink.write("verification.txt", |w| {
        writeln!(w, "dim {dim}, rank {}, padded {}, depth {}, nodes {}", kraus.rank(), kraus.padded, tree.depth, tree.node_count())?;
        writeln!(w, "shift {}, dt {}", kraus.shift, kraus.dt)?;
        writeln!(w, "max leaf error {leaf_error:e}")?;
        writeln!(w, "{}", report.summary())?;
        for f in &report.failures {
            writeln!(w, "FAIL {f}")?;
        }
        writeln!(w, "{}", if report.passed() { "PASS" } else { "FAIL" })
    })?;
    if !report.passed() {
        return Err(Error::Verification(report.failures.join("; ")));
    }
    Ok(Outcome {
        lines: vec![
            format!("compiled rank {} (depth {}, {} nodes) on dimension {dim}", kraus.rank(), tree.depth, tree.node_count()),
            report.summary(),
        ],
    })
}

fn rank_report(sink: &mut Sink, c: &RankReportConfig) -> Result<Outcome> {
    let mut rows = Vec::new();
    for &dims in &c.dims {
        for &k in &c.deriv_orders {
            for &r in &c.degrees {
                for &l in &c.l_values {
                    rows.push(rank_analytics(l, dims, k, r, c.self_coupling));
                }
            }
        }
    }
    sink.write("rank_report.csv", |w| write_rank_csv(&rows, w))?;
    Ok(Outcome {
        lines: rows
            .iter()
            .map(|r| format!("L {} d {} K {} r {}: rank {}, depth {}", r.l, r.dims, r.deriv_order, r.degree, r.rank, r.depth))
            .collect(),
    })
}

fn stencil_table(sink: &mut Sink, c: &StencilConfig) -> Result<Outcome> {
    let mut table = Vec::new();
    for &k in &c.orders {
        let r0 = min_radius(k);
        for radius in r0..=r0 + c.extra_radius {
            table.push((k, radius, stencil_coefficients(k, radius)?));
        }
    }
    sink.write("stencil.csv", |w| {
        writeln!(w, "K,R,offset,coefficient")?;
        for (k, radius, coeffs) in &table {
            for (i, v) in coeffs.iter().enumerate() {
                writeln!(w, "{k},{radius},{},{}", i as isize - *radius as isize, fmt_f64(*v))?;
            }
        }
        Ok(())
    })?;
    sink.write("stencil_bounds.csv", |w| {
        writeln!(w, "K,R,min_radius,moment_residual")?;
        for (k, radius, coeffs) in &table {
            writeln!(w, "{k},{radius},{},{}", min_radius(*k), fmt_f64(moment_residual(coeffs, *k)))?;
        }
        Ok(())
    })?;
    Ok(Outcome {
        lines: table
            .iter()
            .map(|(k, radius, coeffs)| {
                let s: Vec<String> = coeffs.iter().map(|v| format!("{v:.6}")).collect();
                format!("K {k} R {radius}: [{}]", s.join(", "))
            })
            .collect(),
    })
}
