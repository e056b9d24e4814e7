use proptest::prelude::*;
use qemetro::field::{single_qubit_unitary, unitary_jet};
use qemetro::fisher::{cfim_pec, cfim_stabilizer, cfim_total, qfim_probe};
use qemetro::protocol::outcome_model;
use qemetro::{EvolutionTime, FisherMatrix, MagneticField, ProbeBasis, ProbeSpec, Protocol};

fn planar_case() -> impl Strategy<Value = (usize, f64, f64, f64)> {
    (1usize..=12, 0.05f64..2.0, 0.05f64..2.0, 0.1f64..2.0)
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-9 * scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outcome_distributions_are_normalized((n, bx, bz, t) in planar_case()) {
        let t = EvolutionTime::new(t).unwrap();
        let field = MagneticField::planar(bx, bz);
        for protocol in [Protocol::AncillaFreeZ, Protocol::SingleZ, Protocol::SingleX, Protocol::ThreeD] {
            let model = outcome_model(&protocol.probes(n)[0], &field, t).unwrap();
            model.validate(1e-12).unwrap();
            for (qp, qm) in model.q_plus.iter().zip(&model.q_minus) {
                prop_assert!((qp + qm - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unitary_stays_unitary(bx in -3.0f64..3.0, by in -3.0f64..3.0, bz in -3.0f64..3.0, t in 0.0f64..4.0) {
        prop_assume!(bx * bx + by * by + bz * bz > 1e-6);
        let field = MagneticField::new(bx, by, bz);
        let t = EvolutionTime::new(t).unwrap();
        prop_assert!(single_qubit_unitary(&field, t).unitarity_residual() < 1e-12);
        let jet = unitary_jet(&field, t);
        prop_assert!(jet.value.unitarity_residual() < 1e-12);
    }

    #[test]
    fn x_probe_is_the_z_probe_with_components_swapped((n, bx, bz, t) in planar_case()) {
        let t = EvolutionTime::new(t).unwrap();
        let field = MagneticField::planar(bx, bz);
        let x = cfim_total(&[ProbeSpec::ancilla_assisted(n, ProbeBasis::X)], &field, t).unwrap();
        let z = cfim_total(&[ProbeSpec::ancilla_assisted(n, ProbeBasis::Z)], &field.swap_xz(), t).unwrap();
        let scale = z.frobenius_norm();
        prop_assert!(close(x[(0, 0)], z[(1, 1)], scale));
        prop_assert!(close(x[(1, 1)], z[(0, 0)], scale));
        prop_assert!(close(x[(0, 1)], z[(1, 0)], scale));
    }

    #[test]
    fn planar_field_reduces_the_three_dimensional_probe((n, bx, bz, t) in planar_case()) {
        let t = EvolutionTime::new(t).unwrap();
        let planar = MagneticField::planar(bx, bz);
        let model3 = outcome_model(&ProbeSpec::three_d(n), &MagneticField::new(bx, 0.0, bz), t).unwrap();
        let model2 = outcome_model(&ProbeSpec::ancilla_assisted(n, ProbeBasis::Z), &planar, t).unwrap();
        for (a, b) in model3.p.iter().zip(&model2.p) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let f3 = cfim_total(&[ProbeSpec::three_d(n)], &MagneticField::new(bx, 0.0, bz), t).unwrap();
        let f2 = cfim_total(&[ProbeSpec::ancilla_assisted(n, ProbeBasis::Z)], &planar, t).unwrap();
        let scale = f2.frobenius_norm();
        prop_assert!(close(f3[(0, 0)], f2[(0, 0)], scale));
        prop_assert!(close(f3[(0, 2)], f2[(0, 1)], scale));
        prop_assert!(close(f3[(2, 2)], f2[(1, 1)], scale));
    }

    #[test]
    fn fisher_matrices_are_symmetric_and_positive((n, bx, bz, t) in planar_case()) {
        let t = EvolutionTime::new(t).unwrap();
        let field = MagneticField::planar(bx, bz);
        for probe in [ProbeSpec::ancilla_assisted(n, ProbeBasis::Z), ProbeSpec::ancilla_free(n, ProbeBasis::Z)] {
            for f in [cfim_stabilizer(&probe, &field, t).unwrap(), cfim_pec(&probe, &field, t).unwrap()] {
                let scale = f.frobenius_norm().max(1.0);
                prop_assert!(f.symmetry_residual() <= 1e-12 * scale);
                prop_assert!(f.is_psd(1e-9 * scale));
            }
        }
    }

    #[test]
    fn quantum_fisher_bounds_the_classical((n, bx, bz, t) in (1usize..=8, 0.05f64..2.0, 0.05f64..2.0, 0.1f64..2.0)) {
        let t = EvolutionTime::new(t).unwrap();
        let field = MagneticField::planar(bx, bz);
        for basis in [ProbeBasis::Z, ProbeBasis::X] {
            let probe = ProbeSpec::ancilla_assisted(n, basis);
            let c = cfim_total(&[probe], &field, t).unwrap();
            let q = qfim_probe(&probe, &field, t).unwrap();
            let gap = FisherMatrix::from_2x2([
                [q[(0, 0)] - c[(0, 0)], q[(0, 1)] - c[(0, 1)]],
                [q[(1, 0)] - c[(1, 0)], q[(1, 1)] - c[(1, 1)]],
            ]);
            prop_assert!(gap.is_psd(1e-9 * q.frobenius_norm().max(1.0)));
        }
    }
}
