//! Syndrome-class statistics of the error-corrected GHZ protocol.
//!
//! A probe of `N` sensing qubits is prepared in a GHZ state of the bit-flip
//! (Z basis) or phase-flip (X basis) repetition code, exposed to the field,
//! and the code stabilizers are measured. Syndromes are grouped by the weight
//! `k` of the applied correction. Each class has a probability `p_k`, a
//! post-correction logical state, and the outcome probabilities `q_k,+-` of
//! the final string-operator measurement.
//!
//! Every statistic is produced together with its gradient with respect to
//! `(bx, by, bz)` ([`ClassJet`]); the Fisher engine consumes the gradients,
//! the sampler and the Bayesian estimator only the values.
//!
//! X-basis probes are evaluated in the Hadamard frame, where the problem is
//! the Z-basis one with `bx` and `bz` exchanged.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{principal_effective_angle, transverse_angle, unitary_jet, EvolutionTime, MagneticField, UnitaryElements};
use crate::scalar::{scaled_power_product, LnFactorials, Real};

/// Probabilities below this are reported as exactly zero.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProbeBasis {
    /// GHZ in the computational basis, bit-flip code, corrects the X component.
    Z,
    /// GHZ in the `|+>, |->` basis, phase-flip code, corrects the Z component.
    X,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dimensionality {
    TwoD,
    ThreeD,
}

/// One GHZ probe of the protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProbeSpec {
    /// Number of sensing qubits exposed to the field.
    pub n: usize,
    pub basis: ProbeBasis,
    /// One extra shielded qubit in the code block.
    pub ancilla_assisted: bool,
    pub dimensionality: Dimensionality,
}

impl ProbeSpec {
    pub fn ancilla_assisted(n: usize, basis: ProbeBasis) -> Self {
        Self { n, basis, ancilla_assisted: true, dimensionality: Dimensionality::TwoD }
    }

    pub fn ancilla_free(n: usize, basis: ProbeBasis) -> Self {
        Self { n, basis, ancilla_assisted: false, dimensionality: Dimensionality::TwoD }
    }

    /// Ancilla-assisted Z probe for a field with a Y component.
    pub fn three_d(n: usize) -> Self {
        Self { n, basis: ProbeBasis::Z, ancilla_assisted: true, dimensionality: Dimensionality::ThreeD }
    }

    /// The complementary Z and X ancilla-assisted probes.
    pub fn dual(n: usize) -> [Self; 2] {
        [Self::ancilla_assisted(n, ProbeBasis::Z), Self::ancilla_assisted(n, ProbeBasis::X)]
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidProbe("at least one sensing qubit is required".into()));
        }
        if self.dimensionality == Dimensionality::ThreeD {
            if !self.ancilla_assisted {
                return Err(Error::Variant("the three-dimensional protocol is ancilla-assisted only".into()));
            }
            if self.basis == ProbeBasis::X {
                return Err(Error::Variant("the three-dimensional protocol uses a Z-basis probe".into()));
            }
        }
        Ok(())
    }

    pub fn total_qubits(&self) -> usize {
        self.n + usize::from(self.ancilla_assisted)
    }

    /// Number of estimated field components.
    pub fn parameter_count(&self) -> usize {
        match self.dimensionality {
            Dimensionality::TwoD => 2,
            Dimensionality::ThreeD => 3,
        }
    }

    /// Largest class index: `N` with the ancilla, `floor(N/2)` without.
    pub fn max_class(&self) -> usize {
        if self.ancilla_assisted {
            self.n
        } else {
            self.n / 2
        }
    }

    pub fn k_values(&self) -> Vec<usize> {
        (0..=self.max_class()).collect()
    }

    fn check_field<T: Real>(&self, field: &MagneticField<T>) -> Result<()> {
        self.validate()?;
        field.direction()?;
        if self.dimensionality == Dimensionality::TwoD && !field.is_planar() {
            return Err(Error::InvalidProbe("field has a Y component; use the three-dimensional variant".into()));
        }
        Ok(())
    }
}

/// The probe layouts compared throughout: the ancilla-free Z probe, the
/// ancilla-assisted Z or X probe on its own, both together, and the
/// three-dimensional Z probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Protocol {
    AncillaFreeZ,
    SingleZ,
    SingleX,
    Dual,
    ThreeD,
}

impl Protocol {
    pub fn probes(self, n: usize) -> Vec<ProbeSpec> {
        match self {
            Protocol::AncillaFreeZ => vec![ProbeSpec::ancilla_free(n, ProbeBasis::Z)],
            Protocol::SingleZ => vec![ProbeSpec::ancilla_assisted(n, ProbeBasis::Z)],
            Protocol::SingleX => vec![ProbeSpec::ancilla_assisted(n, ProbeBasis::X)],
            Protocol::Dual => ProbeSpec::dual(n).to_vec(),
            Protocol::ThreeD => vec![ProbeSpec::three_d(n)],
        }
    }

    pub fn parameter_count(self) -> usize {
        if self == Protocol::ThreeD {
            3
        } else {
            2
        }
    }
}

/// Statistics of one syndrome class and their gradients over `(bx, by, bz)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassJet<T> {
    pub k: usize,
    pub p: T,
    pub dp: [T; 3],
    /// Relative phase of the post-correction logical state.
    pub phi: T,
    pub dphi: [T; 3],
    pub q_plus: T,
    pub dq_plus: [T; 3],
}

impl<T: Real> ClassJet<T> {
    pub fn q_minus(&self) -> T {
        T::one() - self.q_plus
    }

    fn swap_xz(mut self) -> Self {
        self.dp.swap(0, 2);
        self.dphi.swap(0, 2);
        self.dq_plus.swap(0, 2);
        self
    }
}

/// Per-class statistics with analytic gradients.
pub fn outcome_jets<T: Real>(probe: &ProbeSpec, field: &MagneticField<T>, t: EvolutionTime<T>) -> Result<Vec<ClassJet<T>>> {
    probe.check_field(field)?;
    let swap = probe.basis == ProbeBasis::X;
    let frame = if swap { field.swap_xz() } else { *field };
    let jets = if probe.ancilla_assisted {
        ancilla_assisted_jets(probe, &frame, t)
    } else {
        ancilla_free_jets(probe.n, &frame, t)
    };
    Ok(if swap { jets.into_iter().map(ClassJet::swap_xz).collect() } else { jets })
}

fn re_conj_mul<T: Real>(a: Complex<T>, b: Complex<T>) -> T {
    (a.conj() * b).re
}

fn ancilla_assisted_jets<T: Real>(probe: &ProbeSpec, field: &MagneticField<T>, t: EvolutionTime<T>) -> Vec<ClassJet<T>> {
    let n = probe.n;
    let jet = unitary_jet(field, t);
    let u = jet.value;
    let two = T::lit(2.0);
    let big_p = u.u00.norm_sqr();
    let big_q = u.u01.norm_sqr();
    let mut dbig_p = [T::zero(); 3];
    let mut dbig_q = [T::zero(); 3];
    let mut dbeta_z = [T::zero(); 3];
    for j in 0..3 {
        dbig_p[j] = two * re_conj_mul(u.u00, jet.grad[j].u00);
        dbig_q[j] = two * re_conj_mul(u.u01, jet.grad[j].u01);
        // beta_z = arg(u11) mod pi
        if big_p > T::zero() {
            dbeta_z[j] = (u.u11.conj() * jet.grad[j].u11).im / big_p;
        }
    }
    let b = field.magnitude();
    let beta_z = principal_effective_angle(field.bz / b, b * t.get());
    let (beta_xy, dbeta_xy) = if probe.dimensionality == Dimensionality::ThreeD {
        let r2 = field.bx * field.bx + field.by * field.by;
        let grad = if r2 > T::zero() { [-field.by / r2, field.bx / r2, T::zero()] } else { [T::zero(); 3] };
        (transverse_angle(field.bx, field.by), grad)
    } else {
        (T::zero(), [T::zero(); 3])
    };

    let lnf = LnFactorials::<T>::new(n);
    let floor = T::lit(PROBABILITY_FLOOR);
    (0..=n)
        .map(|k| {
            let lnc = lnf.ln_binomial(n, k);
            let mut p = scaled_power_product(lnc, big_p, n - k, big_q, k);
            let mut dp = [T::zero(); 3];
            if p < floor {
                p = T::zero();
            } else {
                let dp_dbig_p = if k < n { T::count(n - k) * scaled_power_product(lnc, big_p, n - k - 1, big_q, k) } else { T::zero() };
                let dp_dbig_q = if k > 0 { T::count(k) * scaled_power_product(lnc, big_p, n - k, big_q, k - 1) } else { T::zero() };
                for j in 0..3 {
                    dp[j] = dp_dbig_p * dbig_p[j] + dp_dbig_q * dbig_q[j];
                }
            }
            let (wz, wxy) = (T::count(n - k), T::count(k));
            let phi = two * (beta_z * wz + beta_xy * wxy);
            let mut dphi = [T::zero(); 3];
            for j in 0..3 {
                dphi[j] = two * (dbeta_z[j] * wz + dbeta_xy[j] * wxy);
            }
            let (q_plus, _) = string_measurement_probs(phi);
            let slope = -phi.sin() / two;
            let dq_plus = dphi.map(|d| slope * d);
            ClassJet { k, p, dp, phi, dphi, q_plus, dq_plus }
        })
        .collect()
}

/// `exp(ln_s) a^i b^j` and its gradient from the gradients of `a` and `b`.
pub(crate) fn monomial_jet<T: Real>(
    ln_s: T,
    a: Complex<T>,
    i: usize,
    b: Complex<T>,
    j: usize,
    da: &[Complex<T>; 3],
    db: &[Complex<T>; 3],
) -> (Complex<T>, [Complex<T>; 3]) {
    let value = complex_monomial(ln_s, a, i, b, j);
    let mut grad = [Complex::new(T::zero(), T::zero()); 3];
    let di = if i > 0 { complex_monomial(ln_s, a, i - 1, b, j) * T::count(i) } else { Complex::new(T::zero(), T::zero()) };
    let dj = if j > 0 { complex_monomial(ln_s, a, i, b, j - 1) * T::count(j) } else { Complex::new(T::zero(), T::zero()) };
    for c in 0..3 {
        grad[c] = di * da[c] + dj * db[c];
    }
    (value, grad)
}

pub(crate) fn complex_monomial<T: Real>(ln_s: T, a: Complex<T>, i: usize, b: Complex<T>, j: usize) -> Complex<T> {
    let zero = T::zero();
    if (a.norm_sqr() == zero && i > 0) || (b.norm_sqr() == zero && j > 0) {
        return Complex::new(zero, zero);
    }
    let mut ln_mag = ln_s;
    let mut arg = zero;
    if i > 0 {
        ln_mag += T::count(i) * a.norm().ln();
        arg += T::count(i) * a.arg();
    }
    if j > 0 {
        ln_mag += T::count(j) * b.norm().ln();
        arg += T::count(j) * b.arg();
    }
    Complex::from_polar(ln_mag.exp(), arg)
}

/// Degeneracy of ancilla-free class `k`: `C(N, k)` syndromes, except that
/// for even `N` the self-conjugate middle class pairs `e` with its complement
/// and holds `C(N, N/2)/2` syndromes.
pub fn ancilla_free_multiplicity_ln<T: Real>(lnf: &LnFactorials<T>, n: usize, k: usize) -> T {
    let lnc = lnf.ln_binomial(n, k);
    if 2 * k == n {
        lnc - T::LN_2()
    } else {
        lnc
    }
}

fn ancilla_free_jets<T: Real>(n: usize, field: &MagneticField<T>, t: EvolutionTime<T>) -> Vec<ClassJet<T>> {
    let jet = unitary_jet(field, t);
    let u = jet.value;
    let g = jet.grad;
    let d00 = [g[0].u00, g[1].u00, g[2].u00];
    let d01 = [g[0].u01, g[1].u01, g[2].u01];
    let d11 = [g[0].u11, g[1].u11, g[2].u11];
    let lnf = LnFactorials::<T>::new(n);
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let floor = T::lit(PROBABILITY_FLOOR);

    (0..=n / 2)
        .map(|k| {
            // amplitudes scaled so that p = |a0|^2 + |a1|^2
            let ln_s = half * (ancilla_free_multiplicity_ln(&lnf, n, k) - T::LN_2());
            let (m1, dm1) = monomial_jet(ln_s, u.u00, n - k, u.u01, k, &d00, &d01);
            let (m2, dm2) = monomial_jet(ln_s, u.u01, n - k, u.u11, k, &d01, &d11);
            let (m3, dm3) = monomial_jet(ln_s, u.u00, k, u.u01, n - k, &d00, &d01);
            let (m4, dm4) = monomial_jet(ln_s, u.u01, k, u.u11, n - k, &d01, &d11);
            let a0 = m1 + m2;
            let a1 = m3 + m4;
            let da0: [Complex<T>; 3] = core::array::from_fn(|c| dm1[c] + dm2[c]);
            let da1: [Complex<T>; 3] = core::array::from_fn(|c| dm3[c] + dm4[c]);

            let norm = a0.norm_sqr() + a1.norm_sqr();
            if norm < floor {
                return ClassJet {
                    k,
                    p: T::zero(),
                    dp: [T::zero(); 3],
                    phi: T::zero(),
                    dphi: [T::zero(); 3],
                    q_plus: half,
                    dq_plus: [T::zero(); 3],
                };
            }
            let dnorm: [T; 3] = core::array::from_fn(|c| two * (re_conj_mul(a0, da0[c]) + re_conj_mul(a1, da1[c])));
            let s = a0 + a1;
            let s2 = s.norm_sqr();
            // rounding can push either ratio an ulp past one
            let q_plus = (s2 / (two * norm)).min(T::one());
            let dq_plus: [T; 3] = core::array::from_fn(|c| {
                let ds2 = two * re_conj_mul(s, da0[c] + da1[c]);
                (ds2 * norm - s2 * dnorm[c]) / (two * norm * norm)
            });
            let phase_grad = |a: Complex<T>, da: Complex<T>| if a.norm_sqr() > T::zero() { (a.conj() * da).im / a.norm_sqr() } else { T::zero() };
            let phi = wrap_phase(a1.arg() - a0.arg());
            let dphi: [T; 3] = core::array::from_fn(|c| phase_grad(a1, da1[c]) - phase_grad(a0, da0[c]));
            ClassJet { k, p: norm.min(T::one()), dp: dnorm, phi, dphi, q_plus, dq_plus }
        })
        .collect()
}

fn wrap_phase<T: Real>(x: T) -> T {
    let two_pi = T::TAU();
    let mut y = x % two_pi;
    if y > T::PI() {
        y -= two_pi;
    } else if y <= -T::PI() {
        y += two_pi;
    }
    y
}

/// Class probabilities of the stabilizer measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyndromeDistribution<T> {
    pub k: Vec<usize>,
    pub p: Vec<T>,
}

/// Probability of each syndrome class `k`.
///
/// Ancilla-assisted: `p_k = C(N,k) (cos^2 Bt + nz^2 sin^2 Bt)^(N-k) (nx^2 sin^2 Bt)^k`
/// (X basis exchanges `nx` and `nz`; with a Y component `nx^2` becomes
/// `nx^2 + ny^2`). Ancilla-free: the exact class probability of the
/// `floor(N/2) + 1` minimum-weight classes, including the interference
/// between the two GHZ branches that appears for even `N`.
pub fn syndrome_distribution<T: Real>(probe: &ProbeSpec, field: &MagneticField<T>, t: EvolutionTime<T>) -> Result<SyndromeDistribution<T>> {
    let jets = outcome_jets(probe, field, t)?;
    Ok(SyndromeDistribution { k: jets.iter().map(|j| j.k).collect(), p: jets.iter().map(|j| j.p).collect() })
}

/// Relative phase `phi_k` of the post-correction GHZ state for each class of
/// an ancilla-assisted probe: `2 B_eff (N - k)`, plus `2 B_eff^(x,y) k` in
/// three dimensions.
pub fn pec_phases<T: Real>(probe: &ProbeSpec, field: &MagneticField<T>, t: EvolutionTime<T>) -> Result<Vec<T>> {
    if !probe.ancilla_assisted {
        return Err(Error::Variant("ancilla-free post-correction states are not pure phase rotations".into()));
    }
    Ok(outcome_jets(probe, field, t)?.into_iter().map(|j| j.phi).collect())
}

/// `(cos^2(phi/2), sin^2(phi/2))`, the outcome probabilities of the string
/// operator on `|0>_L + e^{i phi} |1>_L`.
pub fn string_measurement_probs<T: Real>(phi: T) -> (T, T) {
    let half = phi / T::lit(2.0);
    let (s, c) = half.sin_cos();
    (c * c, s * s)
}

/// Unnormalized logical amplitudes `(c0, c1)` after detecting and correcting
/// a weight-`k` error without the ancilla:
/// `c0 = u00^(N-k) u01^k + u01^(N-k) u11^k`,
/// `c1 = u00^k u01^(N-k) + u01^k u11^(N-k)`.
///
/// For X probes the amplitudes refer to `|+...+>` and `|-...->`.
pub fn pec_state_ancilla_free<T: Real>(
    probe: &ProbeSpec,
    field: &MagneticField<T>,
    t: EvolutionTime<T>,
    k: usize,
) -> Result<(Complex<T>, Complex<T>)> {
    if probe.ancilla_assisted {
        return Err(Error::Variant("post-correction amplitudes of this form are for ancilla-free probes".into()));
    }
    probe.check_field(field)?;
    if k > probe.n / 2 {
        return Err(Error::InvalidProbe(format!("class k = {k} exceeds floor(N/2) = {}", probe.n / 2)));
    }
    let frame = if probe.basis == ProbeBasis::X { field.swap_xz() } else { *field };
    let u: UnitaryElements<T> = crate::field::single_qubit_unitary(&frame, t);
    let (n, k) = (probe.n as u32, k as u32);
    let c0 = u.u00.powu(n - k) * u.u01.powu(k) + u.u01.powu(n - k) * u.u11.powu(k);
    let c1 = u.u00.powu(k) * u.u01.powu(n - k) + u.u01.powu(k) * u.u11.powu(n - k);
    Ok((c0, c1))
}

/// Complete outcome statistics of one probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeModel<T> {
    pub k: Vec<usize>,
    pub p: Vec<T>,
    pub phi: Vec<T>,
    pub q_plus: Vec<T>,
    pub q_minus: Vec<T>,
}

impl<T: Real> OutcomeModel<T> {
    /// Checks normalization of `p` to `tol` and that every probability lies
    /// in `[0, 1]`.
    pub fn validate(&self, tol: T) -> Result<()> {
        let len = self.k.len();
        if self.p.len() != len || self.phi.len() != len || self.q_plus.len() != len || self.q_minus.len() != len {
            return Err(Error::InvalidModel("column lengths differ".into()));
        }
        let unit = |x: T| x >= T::zero() && x <= T::one();
        if !self.p.iter().chain(&self.q_plus).chain(&self.q_minus).all(|&x| unit(x)) {
            return Err(Error::InvalidModel("probability outside [0, 1]".into()));
        }
        let total: T = self.p.iter().copied().sum();
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidModel(format!("class probabilities sum to {total}")));
        }
        Ok(())
    }
}

pub fn outcome_model<T: Real>(probe: &ProbeSpec, field: &MagneticField<T>, t: EvolutionTime<T>) -> Result<OutcomeModel<T>> {
    let jets = outcome_jets(probe, field, t)?;
    Ok(OutcomeModel {
        k: jets.iter().map(|j| j.k).collect(),
        p: jets.iter().map(|j| j.p).collect(),
        phi: jets.iter().map(|j| j.phi).collect(),
        q_plus: jets.iter().map(|j| j.q_plus).collect(),
        q_minus: jets.iter().map(|j| j.q_minus()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t1() -> EvolutionTime<f64> {
        EvolutionTime::new(1.0).unwrap()
    }

    #[test]
    fn no_transverse_field_means_no_errors() {
        let probe = ProbeSpec::ancilla_assisted(3, ProbeBasis::Z);
        let d = syndrome_distribution(&probe, &MagneticField::planar(0.0, 0.9), t1()).unwrap();
        assert_eq!(d.k, vec![0, 1, 2, 3]);
        assert!((d.p[0] - 1.0).abs() < 1e-15);
        assert!(d.p[1..].iter().all(|&p| p == 0.0));
    }

    #[test]
    fn ancilla_assisted_two_qubit_distribution() {
        // P = cos^2 0.5 + 0.64 sin^2 0.5, Q = 0.36 sin^2 0.5
        let (s, c) = 0.5f64.sin_cos();
        let (p, q) = (c * c + 0.64 * s * s, 0.36 * s * s);
        let probe = ProbeSpec::ancilla_assisted(2, ProbeBasis::Z);
        let d = syndrome_distribution(&probe, &MagneticField::planar(0.3, 0.4), t1()).unwrap();
        let expect = [p * p, 2.0 * p * q, q * q];
        for (a, b) in d.p.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((d.p[0] - 0.841356).abs() < 1e-6 && (d.p[1] - 0.151798).abs() < 1e-6 && (d.p[2] - 0.006847).abs() < 1e-6);
    }

    #[test]
    fn ancilla_free_odd_n_matches_folded_formula() {
        let (s, c) = 0.5f64.sin_cos();
        let (p, q) = (c * c + 0.64 * s * s, 0.36 * s * s);
        let probe = ProbeSpec::ancilla_free(3, ProbeBasis::Z);
        let d = syndrome_distribution(&probe, &MagneticField::planar(0.3, 0.4), t1()).unwrap();
        assert_eq!(d.k, vec![0, 1]);
        assert!((d.p[0] - (p.powi(3) + q.powi(3))).abs() < 1e-14);
        assert!((d.p[1] - 3.0 * (p * p * q + p * q * q)).abs() < 1e-14);
        assert!((d.p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ancilla_free_even_n_has_branch_interference() {
        // N = 2, field along X at Bt = pi/4: odd parity with certainty.
        let probe = ProbeSpec::ancilla_free(2, ProbeBasis::Z);
        let d = syndrome_distribution(&probe, &MagneticField::planar(std::f64::consts::FRAC_PI_4, 0.0), t1()).unwrap();
        assert!(d.p[0].abs() < 1e-15 && (d.p[1] - 1.0).abs() < 1e-14, "{:?}", d.p);
    }

    #[test]
    fn phases_follow_effective_field() {
        let probe = ProbeSpec::ancilla_assisted(5, ProbeBasis::Z);
        let phi = pec_phases(&probe, &MagneticField::planar(0.3, 0.4), t1()).unwrap();
        assert_eq!(phi[5], 0.0);
        let probe = ProbeSpec::ancilla_assisted(2, ProbeBasis::Z);
        let phi = pec_phases(&probe, &MagneticField::planar(0.3, 0.4), t1()).unwrap();
        assert!((phi[0] - 4.0 * 0.4120259504583013).abs() < 1e-12);
    }

    #[test]
    fn three_d_phase_adds_transverse_angle() {
        let probe = ProbeSpec::three_d(4);
        let f = MagneticField::new(0.3, 0.3, 0.4);
        let phi = pec_phases(&probe, &f, t1()).unwrap();
        let b = f.magnitude();
        let beff = (0.4 / b * b.tan()).atan();
        assert!((phi[1] - 2.0 * (3.0 * beff + std::f64::consts::FRAC_PI_4)).abs() < 1e-12);
    }

    #[test]
    fn phases_rejected_without_ancilla() {
        let probe = ProbeSpec::ancilla_free(3, ProbeBasis::Z);
        assert!(matches!(pec_phases(&probe, &MagneticField::planar(0.3, 0.4), t1()), Err(Error::Variant(_))));
    }

    #[test]
    fn string_probabilities() {
        assert_eq!(string_measurement_probs(0.0f64), (1.0, 0.0));
        let (p, m) = string_measurement_probs(std::f64::consts::PI);
        assert!(p < 1e-30 && (m - 1.0).abs() < 1e-15);
        let phi: f64 = 4.0 * 0.4120259504583013;
        let (p, m) = string_measurement_probs(phi);
        assert!((p - (phi / 2.0).cos().powi(2)).abs() < 1e-15 && (p + m - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ancilla_free_amplitudes_pure_phase_case() {
        let probe = ProbeSpec::ancilla_free(3, ProbeBasis::Z);
        let (c0, c1) = pec_state_ancilla_free(&probe, &MagneticField::planar(0.0, 0.5), t1(), 0).unwrap();
        assert!((c0 - Complex::from_polar(1.0, -1.5)).norm() < 1e-14);
        assert!((c1 - Complex::from_polar(1.0, 1.5)).norm() < 1e-14);
    }

    #[test]
    fn ancilla_free_amplitudes_reproduce_probability() {
        let probe = ProbeSpec::ancilla_free(5, ProbeBasis::Z);
        let f = MagneticField::planar(0.4, 0.3);
        let d = syndrome_distribution(&probe, &f, t1()).unwrap();
        let (c0, c1) = pec_state_ancilla_free(&probe, &f, t1(), 2).unwrap();
        assert!((10.0 * (c0.norm_sqr() + c1.norm_sqr()) / 2.0 - d.p[2]).abs() < 1e-14);
    }

    #[test]
    fn invalid_variants() {
        let f = MagneticField::new(0.1, 0.2, 0.3);
        let free3d = ProbeSpec { dimensionality: Dimensionality::ThreeD, ..ProbeSpec::ancilla_free(3, ProbeBasis::Z) };
        assert!(matches!(outcome_model(&free3d, &f, t1()), Err(Error::Variant(_))));
        let planar = ProbeSpec::ancilla_assisted(3, ProbeBasis::Z);
        assert!(matches!(outcome_model(&planar, &f, t1()), Err(Error::InvalidProbe(_))));
        assert_eq!(outcome_model(&planar, &MagneticField::planar(0.0, 0.0), t1()), Err(Error::DegenerateField));
    }

    #[test]
    fn model_serializes_with_expected_keys() {
        let m = outcome_model(&ProbeSpec::ancilla_assisted(2, ProbeBasis::Z), &MagneticField::planar(0.3, 0.4), t1()).unwrap();
        let v = serde_json::to_value(&m).unwrap();
        for key in ["k", "p", "phi", "q_plus", "q_minus"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn jets_match_finite_differences() {
        let h = 1e-6;
        let t = t1();
        for probe in [
            ProbeSpec::ancilla_assisted(4, ProbeBasis::Z),
            ProbeSpec::ancilla_assisted(3, ProbeBasis::X),
            ProbeSpec::ancilla_free(5, ProbeBasis::Z),
            ProbeSpec::ancilla_free(4, ProbeBasis::X),
            ProbeSpec::three_d(3),
        ] {
            let f = if probe.dimensionality == Dimensionality::ThreeD { MagneticField::new(0.3, 0.2, 0.4) } else { MagneticField::planar(0.3, 0.4) };
            let jets = outcome_jets(&probe, &f, t).unwrap();
            let dims: &[usize] = if probe.dimensionality == Dimensionality::ThreeD { &[0, 1, 2] } else { &[0, 2] };
            for &j in dims {
                let shift = |d: f64| {
                    let mut g = f;
                    match j {
                        0 => g.bx += d,
                        1 => g.by += d,
                        _ => g.bz += d,
                    }
                    outcome_jets(&probe, &g, t).unwrap()
                };
                let (up, dn) = (shift(h), shift(-h));
                for (c, (a, b)) in jets.iter().zip(up.iter().zip(&dn)) {
                    let fd_p = (a.p - b.p) / (2.0 * h);
                    assert!((c.dp[j] - fd_p).abs() < 1e-7, "{probe:?} k={} dp", c.k);
                    let fd_q = (a.q_plus - b.q_plus) / (2.0 * h);
                    assert!((c.dq_plus[j] - fd_q).abs() < 1e-7, "{probe:?} k={} dq", c.k);
                }
            }
        }
    }

    #[test]
    fn f32_model_normalized() {
        let m = outcome_model(&ProbeSpec::ancilla_assisted(6, ProbeBasis::Z), &MagneticField::<f32>::planar(0.3, 0.4), EvolutionTime::new(1.0f32).unwrap()).unwrap();
        m.validate(1e-5).unwrap();
    }
}
