//! Cross-checks of the closed-form model against the statevector oracle and
//! of the analytic information matrices against finite differences.

use qemetro::fisher::{cfim_total, qfim_probe};
use qemetro::oracle::{oracle_qfim_probe, simulate_protocol, C64, MAX_QFIM_QUBITS};
use qemetro::protocol::{outcome_model, pec_phases, pec_state_ancilla_free, syndrome_distribution};
use qemetro::{Dimensionality, EvolutionTime, FisherMatrix, MagneticField, ProbeBasis, ProbeSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::CliError;

/// Smallest class probability whose post-correction state is compared.
/// Below it the simulated state is dominated by rounding of the projection.
pub const STATE_PROBABILITY_FLOOR: f64 = 1e-10;

/// Central-difference step of the CFIM check. Outcomes close to a zero of
/// `q` make the truncation error large, so the step is small.
pub const DERIVATIVE_STEP: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub cases: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    /// Probe and field of the largest residual.
    pub worst: String,
}

impl CheckReport {
    fn new(name: &str, tolerance: f64) -> Self {
        Self { name: name.into(), cases: 0, max_residual: 0.0, tolerance, worst: String::new() }
    }

    pub fn passed(&self) -> bool {
        self.cases > 0 && self.max_residual < self.tolerance
    }

    fn record(&mut self, residual: f64, what: impl FnOnce() -> String) {
        self.cases += 1;
        if residual > self.max_residual || residual.is_nan() {
            self.max_residual = if residual.is_nan() { f64::INFINITY } else { residual };
            self.worst = what();
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.cases += other.cases;
        if other.max_residual > self.max_residual {
            self.max_residual = other.max_residual;
            self.worst = other.worst;
        }
        self
    }
}

/// `cells x cells` points with both components evenly spaced over
/// `[lo, hi]`.
pub fn field_grid(cells: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let at = |i: usize| if cells == 1 { lo } else { lo + (hi - lo) * i as f64 / (cells - 1) as f64 };
    (0..cells).flat_map(|i| (0..cells).map(move |j| (at(i), at(j)))).collect()
}

/// The grid `0.1, 0.2, ..., 2.0` per axis without the points whose `Bt` lies
/// within `margin` of a multiple of `pi/2`.
pub fn regular_grid(t: f64, margin: f64) -> Vec<(f64, f64)> {
    field_grid(20, 0.1, 2.0)
        .into_iter()
        .filter(|&(bx, bz)| {
            let bt = bx.hypot(bz) * t / std::f64::consts::FRAC_PI_2;
            (bt - bt.round()).abs() * std::f64::consts::FRAC_PI_2 > margin
        })
        .collect()
}

/// Every probe layout with at most `max_qubits` qubits, ancilla included.
pub fn all_variants(max_qubits: usize) -> Vec<ProbeSpec> {
    (1..=max_qubits)
        .flat_map(|n| {
            [
                ProbeSpec::ancilla_free(n, ProbeBasis::Z),
                ProbeSpec::ancilla_free(n, ProbeBasis::X),
                ProbeSpec::ancilla_assisted(n, ProbeBasis::Z),
                ProbeSpec::ancilla_assisted(n, ProbeBasis::X),
                ProbeSpec::three_d(n),
            ]
        })
        .filter(|p| p.total_qubits() <= max_qubits && p.validate().is_ok())
        .collect()
}

/// Y component used for the three-dimensional probe in the checks.
pub const CHECK_BY: f64 = 0.25;

fn field_for(probe: &ProbeSpec, bx: f64, bz: f64) -> MagneticField<f64> {
    match probe.dimensionality {
        Dimensionality::TwoD => MagneticField::planar(bx, bz),
        Dimensionality::ThreeD => MagneticField::new(bx, CHECK_BY, bz),
    }
}

fn describe(probe: &ProbeSpec, f: &MagneticField<f64>) -> String {
    format!(
        "n={} basis={:?} ancilla={} dim={} field=({}, {}, {})",
        probe.n,
        probe.basis,
        probe.ancilla_assisted,
        probe.parameter_count(),
        f.bx,
        f.by,
        f.bz
    )
}

fn fix_global_phase(c: [C64; 2]) -> [C64; 2] {
    let norm = (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
    let pivot = if c[0].norm() > 1e-12 * norm { c[0] } else { c[1] };
    let phase = pivot.conj() / pivot.norm();
    [c[0] * phase / norm, c[1] * phase / norm]
}

fn over_cases<F>(name: &str, tolerance: f64, probes: &[ProbeSpec], grid: &[(f64, f64)], check: F) -> Result<CheckReport, CliError>
where
    F: Fn(&ProbeSpec, &MagneticField<f64>, &mut CheckReport) -> Result<(), CliError> + Sync,
{
    let cases: Vec<(ProbeSpec, (f64, f64))> = probes.iter().flat_map(|p| grid.iter().map(move |&g| (*p, g))).collect();
    cases
        .par_iter()
        .map(|(probe, (bx, bz))| {
            let mut r = CheckReport::new(name, tolerance);
            check(probe, &field_for(probe, *bx, *bz), &mut r)?;
            Ok(r)
        })
        .try_reduce(|| CheckReport::new(name, tolerance), |a, b| Ok(a.merge(b)))
}

/// Syndrome-class probabilities of the oracle against the closed form.
pub fn probability_check(max_qubits: usize, cells: usize, t: EvolutionTime<f64>) -> Result<CheckReport, CliError> {
    over_cases("probabilities", 1e-10, &all_variants(max_qubits), &field_grid(cells, 0.1, 2.0), |probe, f, r| {
        let oracle = simulate_protocol(probe, f, t)?;
        let model = syndrome_distribution(probe, f, t)?;
        for class in &oracle {
            let i = model.k.iter().position(|&k| k == class.k).ok_or_else(|| CliError::CheckFailed(format!("class {} missing", class.k)))?;
            r.record((class.probability - model.p[i]).abs(), || format!("{} k={}", describe(probe, f), class.k));
        }
        Ok(())
    })
}

/// Post-correction logical states of the oracle against the closed form:
/// `(|0> + e^{i phi_k}|1>)/sqrt 2` with the ancilla, the normalized
/// `(c0, c1)` amplitudes without it, both up to a global phase.
pub fn state_check(max_qubits: usize, cells: usize, t: EvolutionTime<f64>) -> Result<CheckReport, CliError> {
    over_cases("states", 1e-10, &all_variants(max_qubits), &field_grid(cells, 0.1, 2.0), |probe, f, r| {
        // the three-dimensional phase table uses +arctan(ny/nx), which is the
        // phase the rotation produces for the field mirrored in y
        let simulated = if probe.dimensionality == Dimensionality::ThreeD { MagneticField::new(f.bx, -f.by, f.bz) } else { *f };
        let oracle = simulate_protocol(probe, &simulated, t)?;
        let phases = if probe.ancilla_assisted { Some(pec_phases(probe, f, t)?) } else { None };
        for class in oracle.iter().filter(|c| c.probability > STATE_PROBABILITY_FLOOR) {
            let expect = match &phases {
                Some(phi) => {
                    let h = std::f64::consts::FRAC_1_SQRT_2;
                    [C64::new(h, 0.0), C64::from_polar(h, phi[class.k])]
                }
                None => {
                    let (c0, c1) = pec_state_ancilla_free(probe, f, t, class.k)?;
                    fix_global_phase([c0, c1])
                }
            };
            let residual = (class.logical[0] - expect[0]).norm().max((class.logical[1] - expect[1]).norm());
            r.record(residual, || format!("{} k={}", describe(probe, f), class.k));
        }
        Ok(())
    })
}

fn relative_difference(a: &FisherMatrix<f64>, b: &FisherMatrix<f64>) -> f64 {
    let scale = a.frobenius_norm().max(b.frobenius_norm());
    if scale == 0.0 {
        return 0.0;
    }
    (*a + b.scaled(-1.0)).frobenius_norm() / scale
}

fn parameter_shift(f: &MagneticField<f64>, j: usize, d: f64) -> MagneticField<f64> {
    let mut g = *f;
    match j {
        0 => g.bx += d,
        1 => g.by += d,
        _ => g.bz += d,
    }
    g
}

/// CFIM of the joint (class, string outcome) distribution from central
/// differences of the outcome probabilities.
pub fn finite_difference_cfim(probe: &ProbeSpec, f: &MagneticField<f64>, t: EvolutionTime<f64>) -> Result<FisherMatrix<f64>, CliError> {
    let joint = |g: &MagneticField<f64>| -> Result<Vec<f64>, CliError> {
        let m = outcome_model(probe, g, t)?;
        Ok(m.p.iter().zip(m.q_plus.iter().zip(&m.q_minus)).flat_map(|(p, (qp, qm))| [p * qp, p * qm]).collect())
    };
    let idx: &[usize] = match probe.dimensionality {
        Dimensionality::TwoD => &[0, 2],
        Dimensionality::ThreeD => &[0, 1, 2],
    };
    let center = joint(f)?;
    let mut grads = Vec::with_capacity(idx.len());
    for &j in idx {
        let h = DERIVATIVE_STEP;
        let (up, dn) = (joint(&parameter_shift(f, j, h))?, joint(&parameter_shift(f, j, -h))?);
        grads.push(up.iter().zip(&dn).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<f64>>());
    }
    let mut m = [[0.0; 3]; 3];
    for (o, &p) in center.iter().enumerate() {
        // an outcome near a zero of q keeps a finite (dP)^2 / P, so only exact
        // zeros are skipped
        if p <= 0.0 {
            continue;
        }
        for a in 0..idx.len() {
            for b in 0..idx.len() {
                m[a][b] += grads[a][o] * grads[b][o] / p;
            }
        }
    }
    Ok(if idx.len() == 2 { FisherMatrix::from_2x2([[m[0][0], m[0][1]], [m[1][0], m[1][1]]]) } else { FisherMatrix::from_3x3(m) })
}

/// Analytic CFIM against [`finite_difference_cfim`], relative Frobenius
/// error.
pub fn cfim_derivative_check(max_n: usize, grid: &[(f64, f64)], t: EvolutionTime<f64>) -> Result<CheckReport, CliError> {
    let probes: Vec<ProbeSpec> = all_variants(max_n + 1).into_iter().filter(|p| p.n <= max_n).collect();
    over_cases("cfim-derivatives", 1e-5, &probes, grid, |probe, f, r| {
        let analytic = cfim_total(std::slice::from_ref(probe), f, t)?;
        let numeric = finite_difference_cfim(probe, f, t)?;
        r.record(relative_difference(&analytic, &numeric), || describe(probe, f));
        Ok(())
    })
}

/// Analytic probe QFIM against central differences of the simulated state.
pub fn qfim_derivative_check(max_n: usize, grid: &[(f64, f64)], t: EvolutionTime<f64>) -> Result<CheckReport, CliError> {
    let probes: Vec<ProbeSpec> =
        all_variants(MAX_QFIM_QUBITS).into_iter().filter(|p| p.n <= max_n && p.total_qubits() <= MAX_QFIM_QUBITS).collect();
    over_cases("qfim-derivatives", 1e-5, &probes, grid, |probe, f, r| {
        let analytic = qfim_probe(probe, f, t)?;
        let numeric = oracle_qfim_probe(probe, f, t)?;
        r.record(relative_difference(&analytic, &numeric), || describe(probe, f));
        Ok(())
    })
}

/// The whole suite as run by `oracle-check`.
pub fn full_suite(max_qubits: usize, cells: usize, t: EvolutionTime<f64>) -> Result<Vec<CheckReport>, CliError> {
    let grid = regular_grid(t.get(), 0.05);
    let max_n = max_qubits.min(10);
    Ok(vec![
        probability_check(max_qubits, cells, t)?,
        state_check(max_qubits, cells, t)?,
        cfim_derivative_check(max_n, &grid, t)?,
        qfim_derivative_check(max_n, &grid, t)?,
    ])
}
