use qemetro::protocol::outcome_model;
use qemetro::sampler::{sample_experiment, sample_experiment_stream};
use qemetro::{EvolutionTime, ExperimentData, MagneticField, OutcomeModel, ProbeBasis, ProbeSpec};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const SHOTS: u64 = 50_000;

fn model(n: usize, basis: ProbeBasis, ancilla: bool) -> OutcomeModel<f64> {
    let probe = if ancilla { ProbeSpec::ancilla_assisted(n, basis) } else { ProbeSpec::ancilla_free(n, basis) };
    outcome_model(&probe, &MagneticField::planar(0.6, 0.9), EvolutionTime::new(1.0).unwrap()).unwrap()
}

/// Pearson statistic over the joint (class, string) cells, pooling cells
/// with fewer than five expected counts.
fn chi_square_p_value(model: &OutcomeModel<f64>, data: &ExperimentData) -> f64 {
    let m = data.m as f64;
    let mut cells = Vec::new();
    for i in 0..model.k.len() {
        cells.push((model.p[i] * model.q_plus[i] * m, data.counts_plus[i] as f64));
        cells.push((model.p[i] * model.q_minus[i] * m, data.counts_minus[i] as f64));
    }
    let (mut stat, mut bins) = (0.0, 0usize);
    let (mut pooled_e, mut pooled_o) = (0.0, 0.0);
    for (e, o) in cells {
        if e < 5.0 {
            pooled_e += e;
            pooled_o += o;
        } else {
            stat += (o - e) * (o - e) / e;
            bins += 1;
        }
    }
    if pooled_e > 0.0 {
        stat += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e.max(1e-12);
        bins += 1;
    }
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn counts_follow_the_outcome_model() {
    for (n, basis, ancilla) in [(3, ProbeBasis::Z, true), (4, ProbeBasis::X, true), (6, ProbeBasis::Z, false)] {
        let model = model(n, basis, ancilla);
        for seed in 0..4 {
            let data = sample_experiment(&model, SHOTS, seed).unwrap();
            assert!(data.is_consistent());
            let p = chi_square_p_value(&model, &data);
            assert!(p > 1e-4, "n={n} {basis:?} seed={seed}: p-value {p}");
        }
    }
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let model = model(3, ProbeBasis::Z, true);
    let a = sample_experiment_stream(&model, 1000, 9, 2).unwrap();
    assert_eq!(a, sample_experiment_stream(&model, 1000, 9, 2).unwrap());
    assert_ne!(a.counts_plus, sample_experiment_stream(&model, 1000, 9, 3).unwrap().counts_plus);
}

#[test]
fn records_round_trip_through_json() {
    let model = model(3, ProbeBasis::X, true);
    let data = sample_experiment(&model, 500, 1).unwrap();
    let back: ExperimentData = serde_json::from_str(&serde_json::to_string(&data).unwrap()).unwrap();
    assert_eq!(back, data);
    let back: OutcomeModel<f64> = serde_json::from_str(&serde_json::to_string(&model).unwrap()).unwrap();
    assert_eq!(back, model);
}

#[test]
fn zero_shots_are_rejected() {
    assert!(sample_experiment(&model(2, ProbeBasis::Z, true), 0, 0).is_err());
}
