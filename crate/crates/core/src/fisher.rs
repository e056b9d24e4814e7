//! Classical and quantum Fisher information, closed-form precision bounds and
//! scaling fits.
//!
//! Matrices are indexed by the estimated field components: `(bx, bz)` for
//! planar fields and `(bx, by, bz)` for the three-dimensional probe.

use core::ops::{Add, AddAssign, Index};

use num_complex::Complex;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{unitary_jet, EvolutionTime, MagneticField, UnitaryJet};
use crate::protocol::{monomial_jet, outcome_jets, Dimensionality, ProbeBasis, ProbeSpec};
use crate::scalar::{LnFactorials, Real};

/// Outcomes rarer than this are left out of classical Fisher sums.
pub const OUTCOME_FLOOR: f64 = 1e-14;

/// Relative determinant below which a matrix counts as singular:
/// `|det| < SINGULAR_TOLERANCE * ||m||^d` with the Frobenius norm.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

/// Symmetric 2x2 or 3x3 information matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FisherMatrix<T> {
    dim: usize,
    m: [[T; 3]; 3],
}

impl<T: Real> FisherMatrix<T> {
    /// Zero matrix of dimension 2 or 3.
    ///
    /// # Panics
    /// For any other dimension.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "Fisher matrices are 2x2 or 3x3");
        Self { dim, m: [[T::zero(); 3]; 3] }
    }

    pub fn from_2x2(rows: [[T; 2]; 2]) -> Self {
        let mut out = Self::zeros(2);
        for (i, row) in rows.iter().enumerate() {
            out.m[i][..2].copy_from_slice(row);
        }
        out
    }

    pub fn from_3x3(m: [[T; 3]; 3]) -> Self {
        Self { dim: 3, m }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            out.m[i][i] = T::one();
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.dim).map(|i| self.m[i][..self.dim].to_vec()).collect()
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        out
    }

    /// Adds `w g g^T` where `g` is picked from a gradient over `(bx, by, bz)`.
    pub(crate) fn add_outer(&mut self, w: T, grad: &[T; 3], idx: &[usize]) {
        for (i, &a) in idx.iter().enumerate() {
            for (j, &b) in idx.iter().enumerate() {
                self.m[i][j] += w * grad[a] * grad[b];
            }
        }
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.m[i][i]).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.m.iter().flatten().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn symmetry_residual(&self) -> T {
        let mut r = T::zero();
        for i in 0..self.dim {
            for j in 0..i {
                r = r.max((self.m[i][j] - self.m[j][i]).abs());
            }
        }
        r
    }

    pub fn det(&self) -> T {
        let m = &self.m;
        if self.dim == 2 {
            m[0][0] * m[1][1] - m[0][1] * m[1][0]
        } else {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }

    pub fn is_singular(&self) -> bool {
        let norm = self.frobenius_norm();
        norm == T::zero() || self.det().abs() < T::lit(SINGULAR_TOLERANCE) * norm.powi(self.dim as i32)
    }

    /// Inverse by the adjugate formula.
    pub fn inverse(&self) -> Result<Self> {
        if self.is_singular() {
            return Err(Error::Singular { det: self.det().to_f64().unwrap_or(f64::NAN) });
        }
        let det = self.det();
        let m = &self.m;
        let mut out = Self::zeros(self.dim);
        if self.dim == 2 {
            out.m[0][0] = m[1][1] / det;
            out.m[1][1] = m[0][0] / det;
            out.m[0][1] = -m[0][1] / det;
            out.m[1][0] = -m[1][0] / det;
        } else {
            for i in 0..3 {
                for j in 0..3 {
                    // cofactor of (j, i)
                    let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                    let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                    out.m[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
                }
            }
        }
        Ok(out)
    }

    pub fn trace_inverse(&self) -> Result<T> {
        Ok(self.inverse()?.trace())
    }

    /// Trace of the inverse restricted to the parameters that carry any
    /// information, i.e. with all-zero rows and columns removed. Returns the
    /// value and the kept parameter indices.
    pub fn reduced_trace_inverse(&self) -> Result<(T, Vec<usize>)> {
        let scale = (0..self.dim).map(|i| self.m[i][i].abs()).fold(T::zero(), T::max);
        let tol = T::lit(OUTCOME_FLOOR) * scale;
        let keep: Vec<usize> = (0..self.dim).filter(|&i| (0..self.dim).any(|j| self.m[i][j].abs() > tol)).collect();
        Ok((self.restricted_trace_inverse(&keep)?, keep))
    }

    /// Trace of the inverse of the principal submatrix on `keep`, i.e. the
    /// bound when the other parameters are known.
    pub fn restricted_trace_inverse(&self, keep: &[usize]) -> Result<T> {
        match *keep {
            [] => Err(Error::Singular { det: 0.0 }),
            [a] if self.m[a][a] > T::zero() => Ok(T::one() / self.m[a][a]),
            [_] => Err(Error::Singular { det: 0.0 }),
            [a, b] => Self::from_2x2([[self.m[a][a], self.m[a][b]], [self.m[b][a], self.m[b][b]]]).trace_inverse(),
            _ if keep.len() == self.dim => self.trace_inverse(),
            _ => Err(Error::InvalidConfig("parameter subset out of range".into())),
        }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<T> {
        let m = &self.m;
        let two = T::lit(2.0);
        if self.dim == 2 {
            let mean = (m[0][0] + m[1][1]) / two;
            let half_gap = ((m[0][0] - m[1][1]) / two).hypot(m[0][1]);
            return vec![mean - half_gap, mean + half_gap];
        }
        let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
        let q = self.trace() / T::lit(3.0);
        let mut vals = if p1 == T::zero() {
            vec![m[0][0], m[1][1], m[2][2]]
        } else {
            let p2 = (0..3).map(|i| (m[i][i] - q).powi(2)).sum::<T>() + two * p1;
            let p = (p2 / T::lit(6.0)).sqrt();
            let mut b = *self;
            for i in 0..3 {
                b.m[i][i] -= q;
            }
            let r = (b.scaled(T::one() / p).det() / two).max(-T::one()).min(T::one());
            let phi = r.acos() / T::lit(3.0);
            let third = T::lit(2.0) * T::PI() / T::lit(3.0);
            let e1 = q + two * p * phi.cos();
            let e3 = q + two * p * (phi + third).cos();
            vec![e1, T::lit(3.0) * q - e1 - e3, e3]
        };
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
        vals
    }

    /// All eigenvalues at least `-tol`.
    pub fn is_psd(&self, tol: T) -> bool {
        self.eigenvalues().iter().all(|&e| e >= -tol)
    }
}

impl<T: Real> Index<(usize, usize)> for FisherMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        assert!(i < self.dim && j < self.dim, "index out of range");
        &self.m[i][j]
    }
}

impl<T: Real> AddAssign for FisherMatrix<T> {
    /// # Panics
    /// When the dimensions differ.
    fn add_assign(&mut self, rhs: Self) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for i in 0..3 {
            for j in 0..3 {
                self.m[i][j] += rhs.m[i][j];
            }
        }
    }
}

impl<T: Real> Add for FisherMatrix<T> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<T: Real + Serialize> Serialize for FisherMatrix<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("FisherMatrix", 2)?;
        s.serialize_field("dim", &self.dim)?;
        s.serialize_field("entries", &self.rows())?;
        s.end()
    }
}

fn parameter_indices(d: Dimensionality) -> &'static [usize] {
    match d {
        Dimensionality::TwoD => &[0, 2],
        Dimensionality::ThreeD => &[0, 1, 2],
    }
}

/// Information carried by the syndrome class counts alone:
/// `sum_k (1/p_k) grad p_k grad p_k^T`.
pub fn cfim_stabilizer<T: Real>(probe: &ProbeSpec, field: &MagneticField<T>, t: EvolutionTime<T>) -> Result<FisherMatrix<T>> {
    let idx = parameter_indices(probe.dimensionality);
    let mut f = FisherMatrix::zeros(idx.len());
    for jet in outcome_jets(probe, field, t)? {
        if jet.p >= T::lit(OUTCOME_FLOOR) {
            f.add_outer(T::one() / jet.p, &jet.dp, idx);
        }
    }
    Ok(f)
}

/// Probability-weighted information of the string measurement on the
/// corrected states. With the ancilla each class contributes
/// `grad phi_k grad phi_k^T`; without it the binary outcome CFIM
/// built from `q_k,+-`.
pub fn cfim_pec<T: Real>(probe: &ProbeSpec, field: &MagneticField<T>, t: EvolutionTime<T>) -> Result<FisherMatrix<T>> {
    let idx = parameter_indices(probe.dimensionality);
    let floor = T::lit(OUTCOME_FLOOR);
    let mut f = FisherMatrix::zeros(idx.len());
    for jet in outcome_jets(probe, field, t)? {
        if jet.p < floor {
            continue;
        }
        if probe.ancilla_assisted {
            f.add_outer(jet.p, &jet.dphi, idx);
        } else {
            for q in [jet.q_plus, jet.q_minus()] {
                if jet.p * q >= floor {
                    f.add_outer(jet.p / q, &jet.dq_plus, idx);
                }
            }
        }
    }
    Ok(f)
}

/// Full classical information of a set of independent probes. Stabilizer and
/// string outcomes form one joint distribution whose CFIM splits exactly into
/// the two parts, and independent probes add.
pub fn cfim_total<T: Real>(probes: &[ProbeSpec], field: &MagneticField<T>, t: EvolutionTime<T>) -> Result<FisherMatrix<T>> {
    let dim = common_dimension(probes)?;
    let mut f = FisherMatrix::zeros(dim);
    for probe in probes {
        f += cfim_stabilizer(probe, field, t)?;
        f += cfim_pec(probe, field, t)?;
    }
    Ok(f)
}

fn common_dimension(probes: &[ProbeSpec]) -> Result<usize> {
    let first = probes.first().ok_or_else(|| Error::InvalidProbe("at least one probe is required".into()))?;
    let dim = first.parameter_count();
    if probes.iter().any(|p| p.parameter_count() != dim) {
        return Err(Error::InvalidProbe("probes estimate different numbers of field components".into()));
    }
    Ok(dim)
}

/// Probe layout for the uncorrected-GHZ quantum Fisher information.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QfimLayout {
    Single(ProbeBasis),
    Dual,
}

type AmplitudeJet<T> = (Complex<T>, [Complex<T>; 3]);

/// `4 Re(<d_a psi|d_b psi> - <d_a psi|psi><psi|d_b psi>)` for a state given
/// by its distinct amplitudes, each pre-scaled by the square root of its
/// multiplicity.
fn pure_state_qfim<T: Real>(amps: &[AmplitudeJet<T>], idx: &[usize]) -> FisherMatrix<T> {
    let zero = Complex::new(T::zero(), T::zero());
    let mut overlap = [[zero; 3]; 3];
    let mut berry = [zero; 3];
    for (a, da) in amps {
        for i in 0..3 {
            berry[i] += a.conj() * da[i];
            for j in 0..3 {
                overlap[i][j] += da[i].conj() * da[j];
            }
        }
    }
    let four = T::lit(4.0);
    let mut f = FisherMatrix::zeros(idx.len());
    for (i, &a) in idx.iter().enumerate() {
        for (j, &b) in idx.iter().enumerate() {
            f.m[i][j] = four * (overlap[a][b] - berry[a].conj() * berry[b]).re;
        }
    }
    f
}

fn swap_jet_xz<T: Real>(amps: &mut [AmplitudeJet<T>]) {
    for (_, d) in amps.iter_mut() {
        d.swap(0, 2);
    }
}

fn elem_grads<T: Real>(jet: &UnitaryJet<T>) -> [[Complex<T>; 3]; 4] {
    let g = &jet.grad;
    [
        core::array::from_fn(|c| g[c].u00),
        core::array::from_fn(|c| g[c].u01),
        core::array::from_fn(|c| g[c].u10),
        core::array::from_fn(|c| g[c].u11),
    ]
}

/// Amplitudes of `U^{(x)N}` applied to a Z-basis GHZ state, with or without
/// an entangled, field-free ancilla.
fn ghz_amplitudes<T: Real>(n: usize, field: &MagneticField<T>, t: EvolutionTime<T>, with_ancilla: bool) -> Vec<AmplitudeJet<T>> {
    let jet = unitary_jet(field, t);
    let u = jet.value;
    let [d00, d01, d10, d11] = elem_grads(&jet);
    let lnf = LnFactorials::<T>::new(n);
    let half = T::lit(0.5);
    let mut out = Vec::with_capacity(2 * (n + 1));
    for k in 0..=n {
        let ln_s = half * (lnf.ln_binomial(n, k) - T::LN_2());
        let from_zero = monomial_jet(ln_s, u.u00, n - k, u.u10, k, &d00, &d10);
        let from_one = monomial_jet(ln_s, u.u01, n - k, u.u11, k, &d01, &d11);
        if with_ancilla {
            out.push(from_zero);
            out.push(from_one);
        } else {
            let sum: [Complex<T>; 3] = core::array::from_fn(|c| from_zero.1[c] + from_one.1[c]);
            out.push((from_zero.0 + from_one.0, sum));
        }
    }
    out
}

fn basis_amplitudes<T: Real>(
    n: usize,
    basis: ProbeBasis,
    field: &MagneticField<T>,
    t: EvolutionTime<T>,
    with_ancilla: bool,
) -> Vec<AmplitudeJet<T>> {
    match basis {
        ProbeBasis::Z => ghz_amplitudes(n, field, t, with_ancilla),
        ProbeBasis::X => {
            let mut amps = ghz_amplitudes(n, &field.swap_xz(), t, with_ancilla);
            swap_jet_xz(&mut amps);
            amps
        }
    }
}

/// QFIM over `(bx, bz)` of an `N`-qubit GHZ state evolved without error
/// correction, from the binomial sums over
/// `u00^(N-k) u01^k + u01^(N-k) u11^k`. The dual layout adds the Z and X
/// results.
pub fn qfim<T: Real>(layout: QfimLayout, n: usize, field: &MagneticField<T>, t: EvolutionTime<T>) -> Result<FisherMatrix<T>> {
    if n == 0 {
        return Err(Error::InvalidProbe("at least one sensing qubit is required".into()));
    }
    field.direction()?;
    if !field.is_planar() {
        return Err(Error::InvalidProbe("field has a Y component; use qfim_probe with a three-dimensional probe".into()));
    }
    let single = |basis| pure_state_qfim(&basis_amplitudes(n, basis, field, t, false), &[0, 2]);
    Ok(match layout {
        QfimLayout::Single(basis) => single(basis),
        QfimLayout::Dual => single(ProbeBasis::Z) + single(ProbeBasis::X),
    })
}

/// QFIM of the physical probe state before the stabilizer measurement. For
/// ancilla-assisted probes this includes the shielded qubit, which removes
/// the interference between the two GHZ branches; it coincides with the
/// bare GHZ result for `N >= 3`.
pub fn qfim_probe<T: Real>(probe: &ProbeSpec, field: &MagneticField<T>, t: EvolutionTime<T>) -> Result<FisherMatrix<T>> {
    probe.validate()?;
    field.direction()?;
    if probe.dimensionality == Dimensionality::TwoD && !field.is_planar() {
        return Err(Error::InvalidProbe("field has a Y component; use the three-dimensional variant".into()));
    }
    let amps = basis_amplitudes(probe.n, probe.basis, field, t, probe.ancilla_assisted);
    Ok(pure_state_qfim(&amps, parameter_indices(probe.dimensionality)))
}

/// QFIM of independent probes, by additivity.
pub fn qfim_total<T: Real>(probes: &[ProbeSpec], field: &MagneticField<T>, t: EvolutionTime<T>) -> Result<FisherMatrix<T>> {
    let dim = common_dimension(probes)?;
    let mut q = FisherMatrix::zeros(dim);
    for probe in probes {
        q += qfim_probe(probe, field, t)?;
    }
    Ok(q)
}

/// Protocols with closed-form precision bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClosedFormVariant {
    SingleZ,
    SingleX,
    Dual,
}

/// Diagonal entries `([F^-1]_xx, [F^-1]_zz)` of the inverse CFIM.
///
/// Single probes: `(f1 + f2/(f3 + N)) / (4 N t^2)` per entry with
/// ```text
/// f1_xx = [2 nz^2 Bt + nx^2 sin 2Bt]^2 / (4 s^2 (1 - nx^2 s^2))
/// f1_zz = nx^2 nz^2 [2Bt - sin 2Bt]^2 / (4 s^2 (1 - nx^2 s^2))
/// f2_xx = nx^2 nz^2 [1 - Bt cot Bt]^2 / (1 - nx^2 s^2)^2
/// f2_zz = [nz^2 + nx^2 Bt cot Bt]^2 / (1 - nx^2 s^2)^2
/// f3    = nx^2 s^2 / (1 - nx^2 s^2)
/// ```
/// with `s = sin Bt`, for the Z probe; the X probe exchanges `nx` and `nz`
/// and the roles of the two entries.
///
/// Dual probe: `[nx^2/(N+1) + 2 Bz^2 t^2/(A + C N)] / (4 N t^2)` for `xx` and
/// the mirror image for `zz`, with `A = s^2 (3 - cos 2Bt)` and
/// `C = s^2 (1 + cos 2Bt)`.
pub fn closed_form_diagonals<T: Real>(variant: ClosedFormVariant, n: usize, field: &MagneticField<T>, t: EvolutionTime<T>) -> Result<[T; 2]> {
    if n == 0 {
        return Err(Error::InvalidProbe("at least one sensing qubit is required".into()));
    }
    if !field.is_planar() {
        return Err(Error::InvalidProbe("closed forms cover planar fields only".into()));
    }
    let [nx, _, nz] = field.direction()?;
    let t = t.get();
    let b = field.magnitude();
    let bt = b * t;
    let s = bt.sin();
    if s.abs() < T::lit(1e-9) {
        return Err(Error::NoInformation);
    }
    let nn = T::count(n);
    let one = T::one();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let pre = one / (four * nn * t * t);
    match variant {
        ClosedFormVariant::Dual => {
            let cos2 = (two * bt).cos();
            let a = s * s * (T::lit(3.0) - cos2);
            let c = s * s * (one + cos2);
            let tail = two * t * t / (a + c * nn);
            Ok([
                pre * (nx * nx / (nn + one) + field.bz * field.bz * tail),
                pre * (nz * nz / (nn + one) + field.bx * field.bx * tail),
            ])
        }
        ClosedFormVariant::SingleZ | ClosedFormVariant::SingleX => {
            // in the X frame the corrected and the phase-carrying axes trade places
            let (na, nb) = if variant == ClosedFormVariant::SingleZ { (nx, nz) } else { (nz, nx) };
            let (na2, nb2) = (na * na, nb * nb);
            let den = one - na2 * s * s;
            if den.abs() < T::lit(1e-12) {
                return Err(Error::DivisionGuard);
            }
            let sin2 = (two * bt).sin();
            let btcot = bt * bt.cos() / s;
            let f1_corrected = (two * nb2 * bt + na2 * sin2).powi(2) / (four * s * s * den);
            let f1_phase = na2 * nb2 * (two * bt - sin2).powi(2) / (four * s * s * den);
            let f2_corrected = na2 * nb2 * (one - btcot).powi(2) / (den * den);
            let f2_phase = (nb2 + na2 * btcot).powi(2) / (den * den);
            let f3 = na2 * s * s / den;
            let corrected = pre * (f1_corrected + f2_corrected / (f3 + nn));
            let phase = pre * (f1_phase + f2_phase / (f3 + nn));
            Ok(if variant == ClosedFormVariant::SingleZ { [corrected, phase] } else { [phase, corrected] })
        }
    }
}

/// `Tr[F^-1]` from [`closed_form_diagonals`].
pub fn closed_form_trace_inverse<T: Real>(variant: ClosedFormVariant, n: usize, field: &MagneticField<T>, t: EvolutionTime<T>) -> Result<T> {
    let [xx, zz] = closed_form_diagonals(variant, n, field, t)?;
    Ok(xx + zz)
}

/// `Tr[F^-1]` of a matrix.
pub fn trace_inverse<T: Real>(m: &FisherMatrix<T>) -> Result<T> {
    m.trace_inverse()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionPoint<T> {
    pub n: usize,
    pub field: MagneticField<T>,
    pub t: T,
    pub trace_inverse: T,
}

/// Least-squares fit of `ln Tr[F^-1] = -beta ln N + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit<T> {
    pub beta: T,
    pub intercept: T,
    pub r_squared: T,
}

pub fn scaling_exponent<T: Real>(points: &[PrecisionPoint<T>]) -> Result<ScalingFit<T>> {
    let mut ns: Vec<usize> = points.iter().map(|p| p.n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 || ns.len() != points.len() {
        return Err(Error::InsufficientPoints(format!("need at least 3 points with distinct N, got {}", points.len())));
    }
    if ns[0] == 0 || points.iter().any(|p| !(p.trace_inverse > T::zero() && p.trace_inverse.is_finite())) {
        return Err(Error::InsufficientPoints("precision values must be positive and finite with N >= 1".into()));
    }
    let xs: Vec<T> = points.iter().map(|p| T::count(p.n).ln()).collect();
    let ys: Vec<T> = points.iter().map(|p| p.trace_inverse.ln()).collect();
    let len = T::count(xs.len());
    let mx = xs.iter().copied().sum::<T>() / len;
    let my = ys.iter().copied().sum::<T>() / len;
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let sxy: T = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let syy: T = ys.iter().map(|&y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy > T::zero() { sxy * sxy / (sxx * syy) } else { T::one() };
    Ok(ScalingFit { beta: -slope, intercept: my - slope * mx, r_squared })
}
