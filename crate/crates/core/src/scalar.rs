//! Scalar abstraction shared by the analytic modules.
//!
//! The closed-form statistics, their derivatives and the Fisher matrices are
//! written once against [`Real`] and instantiated for `f32` and `f64`. The
//! statevector oracle, the sampler and the Bayesian grids are `f64`-only.

use core::fmt::{Debug, Display};
use core::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

mod sealed {
    pub trait Sealed {}
    impl Sealed for f32 {}
    impl Sealed for f64 {}
}

/// Floating-point scalar used by the generic analytic code: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum<Self>
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
    + sealed::Sealed
{
    /// Converts an `f64` constant into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count into `Self`.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Table of `ln(k!)` for `k = 0..=n`, used for log-space binomials.
#[derive(Clone, Debug)]
pub struct LnFactorials<T> {
    table: Vec<T>,
}

impl<T: Real> LnFactorials<T> {
    pub fn new(n: usize) -> Self {
        let mut table = Vec::with_capacity(n + 1);
        let mut acc = T::zero();
        table.push(acc);
        for i in 1..=n {
            acc += T::count(i).ln();
            table.push(acc);
        }
        Self { table }
    }

    /// `ln C(n, k)`.
    pub fn ln_binomial(&self, n: usize, k: usize) -> T {
        debug_assert!(k <= n && n < self.table.len());
        self.table[n] - self.table[k] - self.table[n - k]
    }
}

/// `exp(ln_scale) * a^i * b^j` for non-negative reals with `0^0 = 1`.
#[inline]
pub(crate) fn scaled_power_product<T: Real>(ln_scale: T, a: T, i: usize, b: T, j: usize) -> T {
    if (a == T::zero() && i > 0) || (b == T::zero() && j > 0) {
        return T::zero();
    }
    let mut ln = ln_scale;
    if i > 0 {
        ln += T::count(i) * a.ln();
    }
    if j > 0 {
        ln += T::count(j) * b.ln();
    }
    ln.exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_binomial_small_values() {
        let f = LnFactorials::<f64>::new(10);
        assert!((f.ln_binomial(10, 3).exp() - 120.0).abs() < 1e-9);
        assert_eq!(f.ln_binomial(4, 0), 0.0);
        assert_eq!(f.ln_binomial(4, 4), 0.0);
    }

    #[test]
    fn power_product_zero_conventions() {
        assert_eq!(scaled_power_product(0.0f64, 0.0, 0, 0.5, 1), 0.5);
        assert_eq!(scaled_power_product(0.0f64, 0.0, 1, 0.5, 1), 0.0);
        assert!((scaled_power_product(2.0f64.ln(), 0.5, 2, 0.25, 1) - 0.125).abs() < 1e-15);
    }
}
