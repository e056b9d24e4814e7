//! Values frozen from an independent 40-digit statevector simulation with
//! numerical derivatives, at `t = 1`.

use qemetro::fisher::{cfim_total, qfim, qfim_probe};
use qemetro::protocol::outcome_model;
use qemetro::{EvolutionTime, MagneticField, ProbeBasis, ProbeSpec, Protocol, QfimLayout};

const REL_TOL: f64 = 1e-10;

fn t1() -> EvolutionTime<f64> {
    EvolutionTime::new(1.0).unwrap()
}

fn assert_rel(actual: f64, expected: f64, what: &str) {
    let rel = ((actual - expected) / expected).abs();
    assert!(rel < REL_TOL, "{what}: {actual} vs {expected} (rel {rel:e})");
}

fn cfim_trace_inverse(protocol: Protocol, n: usize, field: MagneticField<f64>) -> f64 {
    cfim_total(&protocol.probes(n), &field, t1()).unwrap().trace_inverse().unwrap()
}

#[test]
fn ancilla_assisted_class_probabilities() {
    let model = outcome_model(&ProbeSpec::ancilla_assisted(2, ProbeBasis::Z), &MagneticField::planar(0.3, 0.4), t1()).unwrap();
    let expected = [0.84135566194021114, 2.0 * 0.075898753116054011, 0.0068468318276808396];
    for (p, e) in model.p.iter().zip(expected) {
        assert_rel(*p, e, "p_k");
    }
}

#[test]
fn single_probe_trace_inverses() {
    let f = MagneticField::planar(0.3, 0.4);
    assert_rel(cfim_trace_inverse(Protocol::SingleZ, 3, f), 0.11860959848012976, "single Z");
    assert_rel(cfim_trace_inverse(Protocol::SingleX, 3, f), 0.11877563793601715, "single X");
}

#[test]
fn dual_probe_trace_inverses() {
    assert_rel(cfim_trace_inverse(Protocol::Dual, 3, MagneticField::planar(0.3, 0.4)), 0.046435462541154754, "dual N=3");
    assert_rel(cfim_trace_inverse(Protocol::Dual, 4, MagneticField::planar(0.7, 1.1)), 0.064201632682634674, "dual N=4");
}

#[test]
fn ancilla_free_trace_inverses() {
    let f = MagneticField::planar(0.3, 0.4);
    assert_rel(cfim_trace_inverse(Protocol::AncillaFreeZ, 4, f), 0.083423499606078598, "ancilla-free N=4");
    assert_rel(cfim_trace_inverse(Protocol::AncillaFreeZ, 5, f), 0.065169263588913721, "ancilla-free N=5");
}

#[test]
fn three_dimensional_trace_inverses() {
    let f = MagneticField::new(0.3, 0.2, 0.4);
    assert_rel(cfim_trace_inverse(Protocol::ThreeD, 2, f), 0.33526262385734226, "3d N=2");
    assert_rel(cfim_trace_inverse(Protocol::ThreeD, 3, f), 0.20898109312140951, "3d N=3");
}

#[test]
fn quantum_fisher_trace_inverses() {
    let f = MagneticField::planar(0.3, 0.4);
    let bare = qfim(QfimLayout::Single(ProbeBasis::Z), 3, &f, t1()).unwrap().trace_inverse().unwrap();
    assert_rel(bare, 0.11860959848012976, "bare GHZ");
    let probe = qfim_probe(&ProbeSpec::ancilla_assisted(2, ProbeBasis::Z), &f, t1()).unwrap().trace_inverse().unwrap();
    assert_rel(probe, 0.19957154380159892, "ancilla-assisted probe");
}
