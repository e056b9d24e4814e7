//! Magnetic field, evolution time and the single-qubit rotation they generate.
//!
//! A qubit exposed to the field for time `t` evolves under
//! `U = exp(-i t (bx X + by Y + bz Z)) = cos(Bt) I - i sin(Bt) (n . sigma)`.
//! Everything downstream (syndrome statistics, phases, Fisher matrices) is a
//! function of the matrix elements of `U` and their field derivatives, which
//! [`unitary_jet`] provides analytically.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::ProbeBasis;
use crate::scalar::Real;

/// Field vector in energy units (hbar = 1). `by` is zero for planar fields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagneticField<T> {
    pub bx: T,
    pub by: T,
    pub bz: T,
}

impl<T: Real> MagneticField<T> {
    /// Field in the XZ plane.
    pub fn planar(bx: T, bz: T) -> Self {
        Self { bx, by: T::zero(), bz }
    }

    pub fn new(bx: T, by: T, bz: T) -> Self {
        Self { bx, by, bz }
    }

    pub fn magnitude(&self) -> T {
        (self.bx * self.bx + self.by * self.by + self.bz * self.bz).sqrt()
    }

    pub fn is_planar(&self) -> bool {
        self.by == T::zero()
    }

    /// Direction cosines `(nx, ny, nz)`.
    pub fn direction(&self) -> Result<[T; 3]> {
        let b = self.magnitude();
        if b <= T::zero() || !b.is_finite() {
            return Err(Error::DegenerateField);
        }
        Ok([self.bx / b, self.by / b, self.bz / b])
    }

    /// Exchanges the X and Z components.
    pub fn swap_xz(&self) -> Self {
        Self { bx: self.bz, by: self.by, bz: self.bx }
    }

    /// The same direction with magnitude `b`.
    pub fn with_magnitude(&self, b: T) -> Result<Self> {
        let [nx, ny, nz] = self.direction()?;
        Ok(Self { bx: nx * b, by: ny * b, bz: nz * b })
    }
}

/// Duration of the field interaction, strictly positive.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct EvolutionTime<T>(T);

impl<T: Real> EvolutionTime<T> {
    pub fn new(t: T) -> Result<Self> {
        if t > T::zero() && t.is_finite() {
            Ok(Self(t))
        } else {
            Err(Error::InvalidTime)
        }
    }

    pub fn get(self) -> T {
        self.0
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for EvolutionTime<T> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Self::new(T::deserialize(deserializer)?).map_err(serde::de::Error::custom)
    }
}

/// Matrix elements of the single-qubit rotation in the computational basis.
///
/// For planar fields `u10 == u01` and `u11 == conj(u00)`; the Y component
/// makes the off-diagonal elements differ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitaryElements<T> {
    pub u00: Complex<T>,
    pub u01: Complex<T>,
    pub u10: Complex<T>,
    pub u11: Complex<T>,
}

impl<T: Real> UnitaryElements<T> {
    pub fn identity() -> Self {
        let (o, z) = (Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero()));
        Self { u00: o, u01: z, u10: z, u11: o }
    }

    pub fn zero() -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self { u00: z, u01: z, u10: z, u11: z }
    }

    /// Elements `(u++, u+-, u-+, u--)` in the `|+>, |->` basis, returned in
    /// the same slots.
    pub fn in_x_basis(&self) -> Self {
        let half = T::lit(0.5);
        let (a, b, c, d) = (self.u00, self.u01, self.u10, self.u11);
        Self {
            u00: (a + b + c + d) * half,
            u01: (a - b + c - d) * half,
            u10: (a + b - c - d) * half,
            u11: (a - b - c + d) * half,
        }
    }

    /// Largest deviation of `U^dagger U` from the identity.
    pub fn unitarity_residual(&self) -> T {
        let (a, b, c, d) = (self.u00, self.u01, self.u10, self.u11);
        let r0 = (a.norm_sqr() + c.norm_sqr() - T::one()).abs();
        let r1 = (b.norm_sqr() + d.norm_sqr() - T::one()).abs();
        let off = (a.conj() * b + c.conj() * d).norm();
        r0.max(r1).max(off)
    }

    pub fn as_matrix(&self) -> [[Complex<T>; 2]; 2] {
        [[self.u00, self.u01], [self.u10, self.u11]]
    }
}

/// Single-qubit rotation after evolving for `t` in `field`. A zero field
/// gives the identity.
pub fn single_qubit_unitary<T: Real>(field: &MagneticField<T>, t: EvolutionTime<T>) -> UnitaryElements<T> {
    unitary_jet(field, t).value
}

/// Rotation elements together with their partial derivatives with respect to
/// `(bx, by, bz)`.
#[derive(Clone, Copy, Debug)]
pub struct UnitaryJet<T> {
    pub value: UnitaryElements<T>,
    pub grad: [UnitaryElements<T>; 3],
}

/// `U = c I - i g (b . sigma)` with `c = cos(Bt)`, `g = sin(Bt)/B`, so that
/// `dU/db_j = -t g b_j I - i [h b_j (b . sigma) + g sigma_j]` where
/// `h = (t c - g)/B^2`. Small `Bt` uses the series of `g` and `h`.
pub fn unitary_jet<T: Real>(field: &MagneticField<T>, t: EvolutionTime<T>) -> UnitaryJet<T> {
    let t = t.get();
    let b = field.magnitude();
    let bt = b * t;
    let cos = bt.cos();
    let (g, h) = if bt.abs() < T::lit(1e-4) {
        let x2 = bt * bt;
        let g = t * (T::one() - x2 / T::lit(6.0));
        let h = -t * t * t / T::lit(3.0) * (T::one() - x2 / T::lit(10.0));
        (g, h)
    } else {
        let g = bt.sin() / b;
        (g, (t * cos - g) / (b * b))
    };
    let (bx, by, bz) = (field.bx, field.by, field.bz);
    let re = |x: T| Complex::new(x, T::zero());
    let im = |x: T| Complex::new(T::zero(), x);
    // (b . sigma) = [[bz, bx - i by], [bx + i by, -bz]]
    let bsig = [[re(bz), Complex::new(bx, -by)], [Complex::new(bx, by), re(-bz)]];
    let minus_i = im(-T::one());

    let value = UnitaryElements {
        u00: re(cos) + minus_i * re(g) * bsig[0][0],
        u01: minus_i * re(g) * bsig[0][1],
        u10: minus_i * re(g) * bsig[1][0],
        u11: re(cos) + minus_i * re(g) * bsig[1][1],
    };

    let zero = re(T::zero());
    let sigmas: [[[Complex<T>; 2]; 2]; 3] = [
        [[zero, re(T::one())], [re(T::one()), zero]],
        [[zero, im(-T::one())], [im(T::one()), zero]],
        [[re(T::one()), zero], [zero, re(-T::one())]],
    ];
    let comps = [bx, by, bz];
    let mut grad = [UnitaryElements::zero(); 3];
    for j in 0..3 {
        let diag = re(-t * g * comps[j]);
        let hb = re(h * comps[j]);
        let gg = re(g);
        let s = &sigmas[j];
        let e = |r: usize, c: usize| minus_i * (hb * bsig[r][c] + gg * s[r][c]);
        grad[j] = UnitaryElements {
            u00: diag + e(0, 0),
            u01: e(0, 1),
            u10: e(1, 0),
            u11: diag + e(1, 1),
        };
    }
    UnitaryJet { value, grad }
}

/// Effective precession angle imprinted on the logical qubit once the
/// component transverse to the probe basis has been corrected away:
/// `arctan(nz tan(Bt))` for Z probes and `arctan(nx tan(Bt))` for X probes,
/// on the principal branch. At `cos(Bt) = 0` the limit `sign(n) pi/2` is used.
pub fn effective_field<T: Real>(field: &MagneticField<T>, t: EvolutionTime<T>, basis: ProbeBasis) -> Result<T> {
    let [nx, _, nz] = field.direction()?;
    let n = match basis {
        ProbeBasis::Z => nz,
        ProbeBasis::X => nx,
    };
    let bt = field.magnitude() * t.get();
    Ok(principal_effective_angle(n, bt))
}

pub(crate) fn principal_effective_angle<T: Real>(n: T, bt: T) -> T {
    let (s, c) = bt.sin_cos();
    if c == T::zero() {
        if n == T::zero() {
            T::zero()
        } else {
            n.signum() * T::FRAC_PI_2()
        }
    } else {
        (n * s / c).atan()
    }
}

/// In-plane angle `arctan(ny/nx)` of the transverse field component, the
/// second effective field of the three-dimensional protocol.
pub fn transverse_effective_field<T: Real>(field: &MagneticField<T>) -> Result<T> {
    field.direction()?;
    Ok(transverse_angle(field.bx, field.by))
}

pub(crate) fn transverse_angle<T: Real>(bx: T, by: T) -> T {
    if bx == T::zero() {
        if by == T::zero() {
            T::zero()
        } else {
            by.signum() * T::FRAC_PI_2()
        }
    } else {
        (by / bx).atan()
    }
}

/// Binomial-sum amplitude `u00^(N-k) u01^k + u01^(N-k) u11^k`. Pass
/// [`UnitaryElements::in_x_basis`] for the X-basis analogue.
pub fn u_sum_coefficient<T: Real>(n: usize, k: usize, u: &UnitaryElements<T>) -> Complex<T> {
    assert!(k <= n, "k = {k} exceeds N = {n}");
    let (nk, k32) = ((n - k) as u32, k as u32);
    u.u00.powu(nk) * u.u01.powu(k32) + u.u01.powu(nk) * u.u11.powu(k32)
}
