//! Dense statevector simulation of the full protocol, used as ground truth.
//!
//! Qubit 0 is the most significant bit of a basis index and, for
//! ancilla-assisted probes, is the shielded ancilla. Stabilizer `i` is
//! `Z_i Z_{i+1}` (or `X_i X_{i+1}`); syndromes are packed with stabilizer 0
//! as the most significant bit and bit value 1 meaning outcome `-1`, so the
//! syndrome order is the row order of the usual decoding table.
//!
//! X-basis probes are simulated by conjugating the evolution with Hadamards
//! on every qubit, after which the phase-flip code is a bit-flip code.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{single_qubit_unitary, EvolutionTime, MagneticField};
use crate::fisher::FisherMatrix;
use crate::protocol::{Dimensionality, ProbeBasis, ProbeSpec};

/// Largest register accepted by [`simulate_protocol`].
pub const MAX_SIMULATED_QUBITS: usize = 14;
/// Largest probe accepted by [`oracle_qfim`].
pub const MAX_QFIM_QUBITS: usize = 12;
/// Central-difference step of [`oracle_qfim`].
pub const QFIM_STEP: f64 = 1e-6;

/// Complex amplitude of the simulated registers.
pub type C64 = Complex<f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero_state(qubits: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << qubits];
        amps[0] = C64::new(1.0, 0.0);
        Self { qubits, amps }
    }

    /// `(|0...0> + |1...1>)/sqrt 2`.
    pub fn ghz(qubits: usize) -> Self {
        let mut s = Self::zero_state(qubits);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        s.amps[0] = C64::new(h, 0.0);
        let last = s.amps.len() - 1;
        s.amps[last] += C64::new(h, 0.0);
        s
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Applies `m` (row-major) to qubit `q`.
    pub fn apply_single(&mut self, q: usize, m: [[C64; 2]; 2]) {
        let stride = 1 << (self.qubits - 1 - q);
        for base in 0..self.amps.len() {
            if base & stride != 0 {
                continue;
            }
            let (a0, a1) = (self.amps[base], self.amps[base | stride]);
            self.amps[base] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[base | stride] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    pub fn apply_hadamard_all(&mut self) {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        for q in 0..self.qubits {
            self.apply_single(q, [[h, h], [h, -h]]);
        }
    }
}

/// Syndrome of basis index `idx` on an `n`-qubit repetition code.
pub fn syndrome_of(idx: usize, n: usize) -> usize {
    (idx ^ (idx >> 1)) & ((1 << (n - 1)) - 1)
}

/// Correction to apply for each syndrome of an `n_physical`-qubit repetition
/// code.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodingTable {
    pub n_physical: usize,
    pub basis: ProbeBasis,
    pub ancilla_assisted: bool,
    /// Indexed by syndrome; bit `n_physical - 1 - q` set means qubit `q` is
    /// flipped.
    corrections: Vec<usize>,
}

impl DecodingTable {
    pub fn syndrome_count(&self) -> usize {
        self.corrections.len()
    }

    pub fn correction_mask(&self, syndrome: usize) -> usize {
        self.corrections[syndrome]
    }

    /// Zero-based indices of the corrected qubits.
    pub fn correction_qubits(&self, syndrome: usize) -> Vec<usize> {
        let mask = self.corrections[syndrome];
        (0..self.n_physical).filter(|q| mask >> (self.n_physical - 1 - q) & 1 == 1).collect()
    }

    pub fn correction_weight(&self, syndrome: usize) -> usize {
        self.corrections[syndrome].count_ones() as usize
    }

    /// Stabilizer outcomes `+1`/`-1` in stabilizer order.
    pub fn syndrome_signs(&self, syndrome: usize) -> Vec<i8> {
        let bits = self.n_physical - 1;
        (0..bits).map(|i| if syndrome >> (bits - 1 - i) & 1 == 1 { -1 } else { 1 }).collect()
    }

    /// `I`, or the corrected qubits with one-based labels, e.g. `X2X3`.
    pub fn correction_label(&self, syndrome: usize) -> String {
        let letter = match self.basis {
            ProbeBasis::Z => 'X',
            ProbeBasis::X => 'Z',
        };
        let qubits = self.correction_qubits(syndrome);
        if qubits.is_empty() {
            "I".to_string()
        } else {
            qubits.iter().map(|q| format!("{letter}{}", q + 1)).collect()
        }
    }

    /// Stabilizer names, e.g. `Z1Z2`.
    pub fn stabilizer_labels(&self) -> Vec<String> {
        let letter = match self.basis {
            ProbeBasis::Z => 'Z',
            ProbeBasis::X => 'X',
        };
        (1..self.n_physical).map(|i| format!("{letter}{i}{letter}{}", i + 1)).collect()
    }
}

/// Decoder for an `n_physical`-qubit bit-flip (Z basis) or phase-flip
/// (X basis) repetition code.
///
/// With the ancilla, qubit 0 never errs and every syndrome has exactly one
/// consistent error on the remaining qubits. Without it, each syndrome is
/// consistent with an error and its complement; the lighter one is chosen,
/// and on a tie the one acting on the lowest-index qubit.
pub fn build_decoding_table(n_physical: usize, basis: ProbeBasis, ancilla_assisted: bool) -> Result<DecodingTable> {
    if n_physical < 2 {
        return Err(Error::InvalidProbe("a repetition code needs at least two physical qubits".into()));
    }
    if n_physical > usize::BITS as usize - 2 {
        return Err(Error::SizeLimit { qubits: n_physical, limit: usize::BITS as usize - 2 });
    }
    let all = (1usize << n_physical) - 1;
    let top = 1usize << (n_physical - 1);
    let corrections = (0..top)
        .map(|s| {
            // the error with qubit 0 untouched: invert idx ^ (idx >> 1)
            let mut e = 0usize;
            for bit in (0..n_physical - 1).rev() {
                let above = e >> (bit + 1) & 1;
                e |= ((s >> bit & 1) ^ above) << bit;
            }
            if ancilla_assisted {
                return e;
            }
            let alt = e ^ all;
            match e.count_ones().cmp(&alt.count_ones()) {
                core::cmp::Ordering::Less => e,
                core::cmp::Ordering::Greater => alt,
                // the complement is the one flipping qubit 0
                core::cmp::Ordering::Equal => alt,
            }
        })
        .collect();
    Ok(DecodingTable { n_physical, basis, ancilla_assisted, corrections })
}

/// One error-weight class of the simulated protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleClass {
    pub k: usize,
    /// Total probability of the syndromes in the class.
    pub probability: f64,
    /// Number of syndromes in the class.
    pub syndromes: usize,
    /// Normalized logical amplitudes after correction, with the global phase
    /// chosen so that `c0` is real and nonnegative (or `c1` when `c0 = 0`).
    /// Zero when the class never occurs.
    pub logical: [C64; 2],
    /// Largest spread of per-syndrome probabilities within the class.
    pub probability_spread: f64,
    /// Largest distance between the logical states of syndromes in the class.
    pub state_spread: f64,
    /// Largest deviation of a stabilizer expectation from `+1` after
    /// correction.
    pub codespace_residual: f64,
}

/// Evolved probe state, in the frame where the code is a bit-flip code.
pub fn evolve_probe(probe: &ProbeSpec, field: &MagneticField<f64>, t: EvolutionTime<f64>) -> Result<StateVector> {
    probe.validate()?;
    if probe.dimensionality == Dimensionality::TwoD && !field.is_planar() {
        return Err(Error::InvalidProbe("field has a Y component; use the three-dimensional variant".into()));
    }
    let total = probe.total_qubits();
    let mut state = StateVector::ghz(total);
    let u = single_qubit_unitary(field, t).as_matrix();
    let first = usize::from(probe.ancilla_assisted);
    let x = probe.basis == ProbeBasis::X;
    if x {
        state.apply_hadamard_all();
    }
    for q in first..total {
        state.apply_single(q, u);
    }
    if x {
        state.apply_hadamard_all();
    }
    Ok(state)
}

fn fix_global_phase(c: [C64; 2]) -> [C64; 2] {
    let norm = (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
    if norm == 0.0 {
        return c;
    }
    let pivot = if c[0].norm() > 1e-12 * norm { c[0] } else { c[1] };
    let phase = pivot.conj() / pivot.norm();
    [c[0] * phase / norm, c[1] * phase / norm]
}

/// Prepares the GHZ probe, applies the field to the sensing qubits, projects
/// onto every syndrome, applies the table correction and groups the results
/// by correction weight.
pub fn simulate_protocol(probe: &ProbeSpec, field: &MagneticField<f64>, t: EvolutionTime<f64>) -> Result<Vec<OracleClass>> {
    probe.validate()?;
    let total = probe.total_qubits();
    if total > MAX_SIMULATED_QUBITS {
        return Err(Error::SizeLimit { qubits: total, limit: MAX_SIMULATED_QUBITS });
    }
    let state = evolve_probe(probe, field, t)?;
    let amps = state.amplitudes();
    if total == 1 {
        let logical = fix_global_phase([amps[0], amps[1]]);
        return Ok(vec![OracleClass {
            k: 0,
            probability: 1.0,
            syndromes: 1,
            logical,
            probability_spread: 0.0,
            state_spread: 0.0,
            codespace_residual: 0.0,
        }]);
    }
    let table = build_decoding_table(total, probe.basis, probe.ancilla_assisted)?;
    let all = (1usize << total) - 1;
    let mut classes: Vec<OracleClass> = (0..=probe.max_class())
        .map(|k| OracleClass {
            k,
            probability: 0.0,
            syndromes: 0,
            logical: [C64::new(0.0, 0.0); 2],
            probability_spread: 0.0,
            state_spread: 0.0,
            codespace_residual: 0.0,
        })
        .collect();
    let mut prob_range: Vec<(f64, f64)> = vec![(f64::INFINITY, f64::NEG_INFINITY); classes.len()];
    for s in 0..table.syndrome_count() {
        let mask = table.correction_mask(s);
        let k = table.correction_weight(s);
        // the two basis states with syndrome s, mapped by the correction to
        // |0...0> and |1...1>
        let (i0, i1) = (mask, mask ^ all);
        debug_assert_eq!(syndrome_of(i0, total), s);
        let c = [amps[i0], amps[i1]];
        let p = c[0].norm_sqr() + c[1].norm_sqr();
        let class = &mut classes[k];
        class.probability += p;
        class.syndromes += 1;
        prob_range[k] = (prob_range[k].0.min(p), prob_range[k].1.max(p));
        // stabilizer expectations of the corrected basis states
        let residual = [i0 ^ mask, i1 ^ mask]
            .iter()
            .zip(&c)
            .map(|(&idx, a)| if syndrome_of(idx, total) == 0 { 0.0 } else { 2.0 * a.norm_sqr() / p.max(f64::MIN_POSITIVE) })
            .fold(0.0, f64::max);
        class.codespace_residual = class.codespace_residual.max(residual);
        if p > 0.0 {
            let logical = fix_global_phase(c);
            if class.logical == [C64::new(0.0, 0.0); 2] {
                class.logical = logical;
            } else {
                let d = ((logical[0] - class.logical[0]).norm_sqr() + (logical[1] - class.logical[1]).norm_sqr()).sqrt();
                class.state_spread = class.state_spread.max(d);
            }
        }
    }
    for (class, (lo, hi)) in classes.iter_mut().zip(prob_range) {
        class.probability_spread = if class.syndromes > 0 { hi - lo } else { 0.0 };
    }
    Ok(classes)
}

/// QFIM of the evolved, uncorrected `N`-qubit GHZ probe from central finite
/// differences of the state vector.
pub fn oracle_qfim(basis: ProbeBasis, n: usize, field: &MagneticField<f64>, t: EvolutionTime<f64>) -> Result<FisherMatrix<f64>> {
    oracle_qfim_probe(&ProbeSpec::ancilla_free(n, basis), field, t)
}

/// As [`oracle_qfim`] for any probe, including the ancilla.
pub fn oracle_qfim_probe(probe: &ProbeSpec, field: &MagneticField<f64>, t: EvolutionTime<f64>) -> Result<FisherMatrix<f64>> {
    probe.validate()?;
    if probe.total_qubits() > MAX_QFIM_QUBITS {
        return Err(Error::SizeLimit { qubits: probe.total_qubits(), limit: MAX_QFIM_QUBITS });
    }
    field.direction()?;
    let idx: &[usize] = match probe.dimensionality {
        Dimensionality::TwoD => &[0, 2],
        Dimensionality::ThreeD => &[0, 1, 2],
    };
    let psi = evolve_probe(probe, field, t)?;
    let derivs = idx
        .iter()
        .map(|&j| {
            let shifted = |d: f64| {
                let mut f = *field;
                match j {
                    0 => f.bx += d,
                    1 => f.by += d,
                    _ => f.bz += d,
                }
                evolve_probe(probe, &f, t)
            };
            let (up, dn) = (shifted(QFIM_STEP)?, shifted(-QFIM_STEP)?);
            Ok(up.amps.iter().zip(&dn.amps).map(|(a, b)| (a - b) / (2.0 * QFIM_STEP)).collect::<Vec<C64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let dot = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
    let berry: Vec<C64> = derivs.iter().map(|d| dot(&psi.amps, d)).collect();
    let mut rows = [[0.0; 3]; 3];
    for a in 0..idx.len() {
        for b in 0..idx.len() {
            rows[a][b] = 4.0 * (dot(&derivs[a], &derivs[b]) - berry[a].conj() * berry[b]).re;
        }
    }
    Ok(if idx.len() == 2 { FisherMatrix::from_2x2([[rows[0][0], rows[0][1]], [rows[1][0], rows[1][1]]]) } else { FisherMatrix::from_3x3(rows) })
}
