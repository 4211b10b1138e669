mod common;

use std::f64::consts::PI;

use common::*;
use nalgebra::{DMatrix, DVector};
use qet::analytics::{delta, log_delta};
use qet::chain::{build_hamiltonian, calibrate, local_density_spectrum, Boundary, ChainSpec};
use qet::cooling::{apply_channel, measured_ensemble, minimize_residual, random_channel, CoolingOptions};
use qet::eigensolver::{ground_state, SolverMethod, SolverOptions};
use qet::pauli::HermitianOperator;
use qet::protocol::{run_protocol, MeasurementSetup};
use qet::state::StateVector;

fn max_diff(a: &DVector<C>, b: &DVector<C>) -> f64 {
    (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
}

#[test]
fn apply_matches_kronecker_matrices() {
    let mut r = rng(11);
    for n in 1..=6 {
        for trial in 0..10 {
            let sum = random_sum(n, 12, &mut r);
            let dense = sum_matrix(&sum);
            let psi = StateVector::random(n, 100 * n as u64 + trial);
            let got = to_vector(sum.apply(&psi).unwrap().amplitudes());
            let want = &dense * to_vector(psi.amplitudes());
            assert!(max_diff(&got, &want) < 1e-12, "n={n} trial={trial}");
        }
    }
}

#[test]
fn to_dense_matches_kronecker_matrices() {
    let mut r = rng(5);
    for n in 1..=5 {
        let sum = random_sum(n, 8, &mut r);
        let diff = max_entry_diff(&sum.to_dense(), &sum_matrix(&sum));
        assert!(diff < 1e-13, "n={n}");
    }
}

#[test]
fn chain_hamiltonian_matches_term_by_term_construction() {
    for n in 3..=6 {
        for (bc, periodic) in [(Boundary::Periodic, true), (Boundary::Open, false)] {
            let eps: Vec<f64> = (0..n).map(|k| 0.1 * k as f64 - 0.2).collect();
            let spec = ChainSpec::new(n, 1.7, bc, 0, 1)
                .unwrap()
                .with_epsilon(eps.clone())
                .unwrap();
            let got = sum_matrix(&build_hamiltonian(&spec));
            let want = ising_matrix(n, 1.7, periodic, &eps);
            assert!(max_entry_diff(&got, &want) < 1e-12, "n={n} {bc}");
        }
    }
}

#[test]
fn lanczos_matches_dense_diagonalization() {
    for n in 4..=10 {
        for (bc, periodic) in [(Boundary::Periodic, true), (Boundary::Open, false)] {
            let j = 0.8;
            let spec = ChainSpec::new(n, j, bc, 0, 1).unwrap();
            let h = build_hamiltonian(&spec);
            let opts = SolverOptions {
                method: SolverMethod::Lanczos,
                tol: 1e-10 * j,
                ..SolverOptions::default()
            };
            let r = ground_state(&h, &opts).unwrap();
            let exact = lowest_eigenvalue(&ising_matrix(n, j, periodic, &vec![0.0; n]));
            assert!((r.energy - exact).abs() < 1e-10 * j, "n={n} {bc}: {} vs {exact}", r.energy);
        }
    }
}

#[test]
fn ground_state_is_an_eigenvector_of_the_dense_matrix() {
    let spec = ChainSpec::new(8, 1.0, Boundary::Periodic, 0, 1).unwrap();
    let chain = calibrate(spec, &SolverOptions::default()).unwrap();
    let h = ising_matrix(8, 1.0, true, chain.spec.epsilon());
    let g = to_vector(chain.ground.state.amplitudes());
    let hg = &h * &g;
    // Calibrated, so the ground energy is zero.
    assert!(hg.norm() < 1e-9);
}

#[test]
fn local_spectrum_matches_dense_three_site_block() {
    let spec = ChainSpec::new(6, 1.0, Boundary::Periodic, 0, 1).unwrap();
    let s = local_density_spectrum(&spec, 2).unwrap();
    // T = -Z_1 - (X_1 X_2 + X_1 X_0) / 2 on three sites, middle site is index 1.
    use qet::pauli::Pauli;
    let t = site_product(3, &[(1, Pauli::Z)]) * c(-1.0, 0.0)
        + site_product(3, &[(1, Pauli::X), (2, Pauli::X)]) * c(-0.5, 0.0)
        + site_product(3, &[(1, Pauli::X), (0, Pauli::X)]) * c(-0.5, 0.0);
    let want = lowest_eigenvalue(&t);
    assert!((s.min() - want).abs() < 1e-12);
}

#[test]
fn log_domain_delta_matches_exact_rationals() {
    for n in 1..=40u64 {
        let exact = delta_exact(n);
        let got = delta(n).unwrap();
        assert!(((got - exact) / exact).abs() < 1e-12, "n={n}: {got} vs {exact}");
        assert!((log_delta(n).unwrap() - exact.ln()).abs() < 1e-12 * exact.ln().abs().max(1.0));
    }
    assert!((delta_exact(1) - 2.0 / (3.0 * PI)).abs() < 1e-15);
    assert!((delta_exact(2) - 16.0 / (45.0 * PI * PI)).abs() < 1e-15);
}

#[test]
fn coefficients_match_finite_differences_of_simulated_energy() {
    let spec = ChainSpec::new(8, 1.0, Boundary::Periodic, 0, 1).unwrap();
    let chain = calibrate(spec, &SolverOptions::default()).unwrap();
    for (sa, sb) in [(0, 1), (0, 3), (2, 7)] {
        let c = chain.with_sites(sa, sb).unwrap();
        for setup in ["y,x", "x,y", "1:1:0,0:1:1"] {
            let setup: MeasurementSetup = setup.parse().unwrap();
            let r = run_protocol(&c, &setup, Some(0.0)).unwrap();
            let e = |t: f64| run_protocol(&c, &setup, Some(t)).unwrap().energy_after;
            let h = 1e-4;
            let first = (e(h) - e(-h)) / (2.0 * h);
            let second = (e(h) - 2.0 * e(0.0) + e(-h)) / (h * h);
            assert!((first - r.eta).abs() < 1e-7, "{setup} ({sa},{sb}): {first} vs {}", r.eta);
            assert!((second - 2.0 * r.xi).abs() < 1e-4, "{setup} ({sa},{sb})");
        }
    }
}

/// After a `Y` measurement on A the state is a product between A and the
/// rest, so the best local channel prepares the ground state of A's
/// effective field; its energy is the lowest eigenvalue of a 2x2 matrix.
#[test]
fn cooling_reaches_the_effective_field_minimum() {
    for n in [6, 8] {
        let spec = ChainSpec::new(n, 1.0, Boundary::Periodic, 0, 1).unwrap();
        let chain = calibrate(spec, &SolverOptions::default()).unwrap();
        let setup: MeasurementSetup = "y,x".parse().unwrap();
        let (ens, _) = measured_ensemble(&chain, &setup).unwrap();
        let h = ising_matrix(n, 1.0, true, chain.spec.epsilon());
        let mut exact = 0.0;
        for br in &ens.branches {
            let psi = br.state.amplitudes();
            // Rest-of-chain factor read off the larger A component.
            let (w0, w1): (f64, f64) = (0..psi.len())
                .map(|b| if b & 1 == 0 { (psi[b].norm_sqr(), 0.0) } else { (0.0, psi[b].norm_sqr()) })
                .fold((0.0, 0.0), |a, x| (a.0 + x.0, a.1 + x.1));
            let keep = usize::from(w1 > w0);
            let mut rest: Vec<C> = (0..psi.len() / 2).map(|r| psi[2 * r + keep]).collect();
            let norm = rest.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            rest.iter_mut().for_each(|z| *z /= norm);
            let lift = |t: usize| {
                let mut v = DVector::<C>::zeros(psi.len());
                for (r, z) in rest.iter().enumerate() {
                    v[2 * r + t] = *z;
                }
                v
            };
            let (u0, u1) = (lift(0), lift(1));
            let heff = DMatrix::from_fn(2, 2, |a, b| {
                let (l, r) = ([&u0, &u1][a], [&u0, &u1][b]);
                l.dotc(&(&h * r))
            });
            exact += br.weight * lowest_eigenvalue(&heff);
        }
        let r = minimize_residual(&chain, &setup, &CoolingOptions::default()).unwrap();
        assert!((r.e_r_numeric - exact).abs() < 1e-9, "n={n}: {} vs {exact}", r.e_r_numeric);
        assert!(r.converged);
    }
}

#[test]
fn minimizer_beats_random_channels() {
    let spec = ChainSpec::new(6, 1.0, Boundary::Periodic, 0, 1).unwrap();
    let chain = calibrate(spec, &SolverOptions::default()).unwrap();
    let h: &HermitianOperator = &chain.hamiltonian;
    for setup in ["y,x", "1:0:1,x"] {
        let setup: MeasurementSetup = setup.parse().unwrap();
        let best = minimize_residual(&chain, &setup, &CoolingOptions::default()).unwrap();
        let (ens, _) = measured_ensemble(&chain, &setup).unwrap();
        for seed in 0..1000 {
            let out = apply_channel(&ens, &random_channel(seed), 0).unwrap();
            let e = out.expectation(h);
            assert!(best.e_r_numeric <= e + 1e-10, "{setup} seed {seed}: {e}");
        }
        let applied = apply_channel(&ens, &best.best_channel, 0).unwrap();
        assert!((applied.expectation(h) - best.e_r_numeric).abs() < 1e-10);
    }
}
