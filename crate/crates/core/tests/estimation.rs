use qemetro::bayes::{estimate_from_data, run_estimation, EstimationConfig};
use qemetro::protocol::outcome_model;
use qemetro::sampler::sample_experiment_stream;
use qemetro::{EvolutionTime, MagneticField, ProbeSpec, Protocol};

#[test]
fn dual_estimate_lands_near_the_truth() {
    let truth = MagneticField::planar(0.4, 0.7);
    let t = EvolutionTime::new(1.0).unwrap();
    let probes = Protocol::Dual.probes(10);
    let data: Vec<_> = probes
        .iter()
        .enumerate()
        .map(|(j, p)| sample_experiment_stream(&outcome_model(p, &truth, t).unwrap(), 4000, 2, j as u64).unwrap())
        .collect();
    let grid = estimate_from_data::<f64>(&probes, &data, t, &EstimationConfig::default()).unwrap();
    let (bx, bz): (f64, f64) = grid.mean();
    assert!((bx - 0.4).abs() < 5e-3 && (bz - 0.7).abs() < 5e-3, "estimate ({bx}, {bz})");
}

#[test]
fn repeated_estimation_is_reproducible_and_efficient() {
    let truth = MagneticField::planar(0.4, 0.7);
    let t = EvolutionTime::new(1.0).unwrap();
    let probes = Protocol::Dual.probes(10);
    let config = EstimationConfig::default();
    let a = run_estimation(&probes, &truth, t, 2000, 20, &config, 4).unwrap();
    assert_eq!(a, run_estimation(&probes, &truth, t, 2000, 20, &config, 4).unwrap());
    assert_eq!(a.flagged, 0);
    let bound = qemetro::fisher::cfim_total(&probes, &truth, t).unwrap().trace_inverse().unwrap();
    let ratio = a.m_trace_cov().unwrap() / bound;
    assert!(ratio > 0.3 && ratio < 3.0, "M Tr[Cov] / Tr[F^-1] = {ratio}");
}

#[test]
fn unsupported_probes_and_bad_configs_are_rejected() {
    let truth = MagneticField::planar(0.4, 0.7);
    let t = EvolutionTime::new(1.0).unwrap();
    let config = EstimationConfig::default();
    assert!(run_estimation(&[ProbeSpec::three_d(3)], &truth, t, 100, 2, &config, 0).is_err());
    assert!(run_estimation(&Protocol::Dual.probes(3), &truth, t, 100, 0, &config, 0).is_err());
    let zero_box = EstimationConfig { prior_box: (-1.0, 1.0, -1.0, 1.0), ..config };
    assert!(run_estimation(&Protocol::Dual.probes(3), &truth, t, 100, 2, &zero_box, 0).is_err());
}
