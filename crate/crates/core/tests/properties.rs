mod common;

use std::f64::consts::PI;
use std::sync::OnceLock;

use common::*;
use proptest::prelude::*;
use qet::analytics::{delta, eb_from_delta};
use qet::chain::{calibrate, CalibratedChain, Boundary, ChainSpec};
use qet::cooling::random_channel;
use qet::eigensolver::SolverOptions;
use qet::pauli::{HermitianOperator, Pauli, PauliString, PauliSum};
use qet::protocol::{
    energy_identity, optimal_theta, projectors, run_protocol, teleported_energy, Axis,
    MeasurementSetup,
};
use qet::state::StateVector;

fn chain8() -> &'static CalibratedChain {
    static CHAIN: OnceLock<CalibratedChain> = OnceLock::new();
    CHAIN.get_or_init(|| {
        let spec = ChainSpec::new(8, 1.0, Boundary::Periodic, 0, 1).unwrap();
        calibrate(spec, &SolverOptions::default()).unwrap()
    })
}

fn letter() -> impl Strategy<Value = Pauli> {
    prop_oneof![Just(Pauli::I), Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)]
}

fn string(n: usize) -> impl Strategy<Value = PauliString> {
    (prop::collection::vec(letter(), n), -1.0..1.0f64, -1.0..1.0f64).prop_map(move |(ls, re, im)| {
        let letters: Vec<(usize, Pauli)> = ls.into_iter().enumerate().collect();
        PauliString::new(c(re, im), &letters)
    })
}

fn sum(n: usize) -> impl Strategy<Value = PauliSum> {
    prop::collection::vec(string(n), 1..8).prop_map(move |t| PauliSum::from_terms(n, t))
}

fn axis() -> impl Strategy<Value = Axis> {
    (0.0..PI, 0.0..2.0 * PI).prop_map(|(t, p)| Axis::spherical(t, p))
}

fn close(a: &StateVector, b: &StateVector, tol: f64) -> bool {
    a.distance(b) <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn apply_is_linear(op in sum(5), s1 in 0u64..1000, s2 in 0u64..1000, a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let u = StateVector::random(5, s1);
        let v = StateVector::random(5, s2);
        let mut w = u.scaled(a);
        w.axpy(c(0.0, b), &v);
        let lhs = op.apply(&w).unwrap();
        let mut rhs = op.apply(&u).unwrap().scaled(a);
        rhs.axpy(c(0.0, b), &op.apply(&v).unwrap());
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn product_applies_as_composition(p in sum(4), q in sum(4), seed in 0u64..1000) {
        let v = StateVector::random(4, seed);
        let lhs = p.mul(&q).apply(&v).unwrap();
        let rhs = p.apply(&q.apply(&v).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn hermitian_part_has_symmetric_matrix_elements(op in sum(4), s1 in 0u64..1000, s2 in 0u64..1000) {
        let h = HermitianOperator::new(op.add(&op.adjoint())).unwrap();
        let u = StateVector::random(4, s1);
        let v = StateVector::random(4, s2);
        let uhv = u.inner(&h.apply(&v).unwrap());
        let vhu = v.inner(&h.apply(&u).unwrap());
        prop_assert!((uhv - vhu.conj()).norm() < 1e-12);
        prop_assert!(h.hermiticity_residue() < 1e-12);
    }

    #[test]
    fn adjoint_matches_dense_adjoint(op in sum(3)) {
        let d = sum_matrix(&op.adjoint());
        prop_assert!(max_entry_diff(&d, &sum_matrix(&op).adjoint()) < 1e-12);
    }

    #[test]
    fn disjoint_supports_commute(a in string(3), b in string(3)) {
        let lift = |s: &PauliString, off: usize| {
            let ls: Vec<(usize, Pauli)> = (0..3).map(|k| (k + off, s.letter(k))).collect();
            PauliSum::from_terms(6, vec![PauliString::new(s.coeff, &ls)])
        };
        let (pa, pb) = (lift(&a, 0), lift(&b, 3));
        prop_assert!(pa.commutator(&pb).canonicalize().is_empty());
    }

    #[test]
    fn projectors_resolve_identity(ax in axis(), site in 0usize..4, seed in 0u64..1000) {
        let (p0, p1) = projectors(&ax, 4, site).unwrap();
        let v = StateVector::random(4, seed);
        let a = p0.apply(&v).unwrap();
        let b = p1.apply(&v).unwrap();
        let mut total = a.clone();
        total.axpy(1.0, &b);
        prop_assert!(close(&total, &v, 1e-12));
        prop_assert!(p0.apply(&b).unwrap().norm() < 1e-12);
        prop_assert!(close(&p0.apply(&a).unwrap(), &a, 1e-12));
        let mut diff = a.clone();
        diff.axpy(-1.0, &b);
        prop_assert!(close(&diff, &ax.pauli(4, site).apply(&v).unwrap(), 1e-12));
    }

    #[test]
    fn optimal_angle_is_never_beaten(xi in -3.0..3.0f64, eta in -3.0..3.0f64, theta in -PI..PI) {
        let best = optimal_theta(xi, eta).theta;
        let e_star = energy_identity(0.0, xi, eta, best);
        prop_assert!(e_star <= energy_identity(0.0, xi, eta, theta) + 1e-12);
        prop_assert!((e_star + teleported_energy(xi, eta)).abs() < 1e-12);
        prop_assert!(teleported_energy(xi, eta) >= 0.0);
    }

    #[test]
    fn local_feedback_follows_energy_identity(ax_a in axis(), ax_b in axis(), theta in -PI..PI, b in 1usize..8) {
        let chain = chain8().with_sites(0, b).unwrap();
        let r = run_protocol(&chain, &MeasurementSetup::new(ax_a, ax_b), Some(theta)).unwrap();
        let predicted = energy_identity(r.e_a, r.xi, r.eta, theta);
        prop_assert!((r.energy_after - predicted).abs() < 1e-10);
        prop_assert!(r.e_b >= 0.0);
        prop_assert!(r.e_a >= -1e-12);
    }

    #[test]
    fn random_channels_are_trace_preserving(seed in any::<u64>()) {
        prop_assert!(random_channel(seed).completeness_error() < 1e-12);
    }

    #[test]
    fn closed_form_decays_with_separation(n in 1u64..300) {
        let (d0, d1) = (delta(n).unwrap(), delta(n + 1).unwrap());
        prop_assert!(d0 > d1 && d1 > 0.0);
        prop_assert!(eb_from_delta(1.0, d0) > eb_from_delta(1.0, d1));
    }

    #[test]
    fn calibration_scales_with_coupling(j in 0.2..5.0f64) {
        let spec = ChainSpec::new(6, j, Boundary::Periodic, 0, 1).unwrap();
        let chain = calibrate(spec, &SolverOptions::default()).unwrap();
        let base = ChainSpec::new(6, 1.0, Boundary::Periodic, 0, 1).unwrap();
        let unit = calibrate(base, &SolverOptions::default()).unwrap();
        for (e, u) in chain.spec.epsilon().iter().zip(unit.spec.epsilon()) {
            prop_assert!((e - j * u).abs() < 1e-9 * j);
        }
        prop_assert!(chain.ground.energy.abs() < 1e-9 * j);
    }
}
