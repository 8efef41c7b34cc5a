use std::f64::consts::TAU;

use kvn_core::evolution::{run, RunConfig, Scheme};
use kvn_core::fock::{assemble_generator, build_fock, compile_tree, kraus_set, pure_density, verify_channel};
use kvn_core::grid::{make_field, Boundary, FieldState, GridSpec};
use kvn_core::noise::{counterterm_state, exact_linear_flow, l2_distance, noisy_rhs};
use kvn_core::rhs::{rhs_to_spec, LinearStencilRhs, RhsParams};
use kvn_core::C64;

fn sine_mode(n: usize, m: usize) -> FieldState {
    let g = GridSpec::line(n, 1.0 / n as f64, Boundary::Periodic).unwrap();
    FieldState::from_fn(g, 0.0, |x, _| (TAU * m as f64 * (x - 0.5 / n as f64)).sin()).unwrap()
}

// A Fourier mode of the periodic Laplacian decays at the discrete eigenvalue.
#[test]
fn exact_flow_matches_discrete_fourier_decay() {
    let (n, m, nu) = (24, 3, 0.02);
    let s = sine_mode(n, m);
    let dx = 1.0 / n as f64;
    let lap = LinearStencilRhs::laplacian(s.grid.clone(), nu).unwrap();
    let lambda = nu * (2.0 - 2.0 * (TAU * m as f64 / n as f64).cos()) / (dx * dx);
    let times = [0.1, 0.5, 1.0];
    for (snap, t) in exact_linear_flow(&lap, &s, &times).unwrap().iter().zip(times) {
        let decay = (-lambda * t).exp();
        for (a, b) in snap.z.iter().zip(&s.z) {
            assert!((a - b * decay).norm() <= 1e-12, "t {t}");
        }
    }
}

// Correcting with gamma_bar != gamma leaves the error |e^{(gamma_bar - gamma) t / 2} - 1| |z|.
#[test]
fn miscalibrated_counterterm_error() {
    let s = sine_mode(16, 2);
    let lap = LinearStencilRhs::laplacian(s.grid.clone(), 0.01).unwrap();
    let gamma = 0.3;
    let noisy = noisy_rhs(&lap, gamma).unwrap();
    let times = [0.5, 1.0, 2.0];
    let clean = exact_linear_flow(&lap, &s, &times).unwrap();
    let damped = exact_linear_flow(&noisy, &s, &times).unwrap();
    for factor in [0.9, 1.0, 1.1] {
        let gamma_bar = factor * gamma;
        for (z, zt) in damped.iter().zip(&clean) {
            let corrected = counterterm_state(z, gamma_bar);
            let err = l2_distance(&corrected.z, &zt.z);
            let norm = l2_distance(&zt.z, &vec![C64::new(0.0, 0.0); zt.z.len()]);
            let want = ((0.5 * (gamma_bar - gamma) * z.t).exp() - 1.0).abs() * norm;
            assert!((err - want).abs() <= 1e-10 * (1.0 + norm), "factor {factor} t {}: {err} vs {want}", z.t);
        }
    }
}

// The stepped noisy run converges to the exact damped flow at first order.
#[test]
fn noisy_run_converges_to_the_damped_flow() {
    let s = sine_mode(16, 1);
    let lap = LinearStencilRhs::laplacian(s.grid.clone(), 0.01).unwrap();
    let noisy = noisy_rhs(&lap, 0.2).unwrap();
    let exact = &exact_linear_flow(&noisy, &s, &[1.0]).unwrap()[0];
    let err = |dt: f64| {
        let mut cfg = RunConfig::new(Scheme::Euler1, dt, 1.0);
        cfg.save_times = vec![1.0];
        l2_distance(&run(&s, &noisy, &cfg).unwrap().snapshots[0].z, &exact.z)
    };
    let ratio = err(2e-3) / err(1e-3);
    assert!((1.8..2.2).contains(&ratio), "halving ratio {ratio}");
}

// A compiled Burgers channel reproduces sum_b K_b rho K_b^dagger on a coherent probe.
#[test]
fn compiled_channel_acts_like_its_kraus_set() {
    let g = GridSpec::line(3, 1.0 / 3.0, Boundary::Periodic).unwrap();
    let spec = rhs_to_spec("burgers", &g, &RhsParams { re: 5.0, ..Default::default() }).unwrap();
    let space = build_fock(3, 4).unwrap();
    let a = assemble_generator(&space, &spec, None).unwrap().matrix;
    let kraus = kraus_set(&a, 0.02, 4).unwrap();
    let tree = compile_tree(&kraus).unwrap();
    let psi = space.coherent_state(&[C64::new(0.4, 0.1), C64::new(-0.3, 0.0), C64::new(0.1, -0.2)]).unwrap();
    let report = verify_channel(&tree, &kraus, &[pure_density(&psi)]);
    assert!(report.passed(), "{}", report.summary());
}

#[test]
fn field_rejects_negative_variance() {
    let g = GridSpec::line(3, 1.0, Boundary::Periodic).unwrap();
    assert!(make_field(g, vec![C64::new(0.0, 0.0); 3], vec![0.0, -1e-3, 0.0]).is_err());
}
