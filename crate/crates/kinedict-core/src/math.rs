//! Scalar float math that works both with `std` and with `libm` on `no_std`.
//!
//! Only the handful of transcendental functions the crate actually uses are
//! shimmed; everything else (`min`, `max`, `clamp`, comparisons) is plain core.

#[cfg(feature = "std")]
macro_rules! shim {
    ($name:ident, $method:ident) => {
        #[inline(always)]
        pub(crate) fn $name(x: f64) -> f64 {
            x.$method()
        }
    };
}

#[cfg(all(not(feature = "std"), feature = "libm"))]
macro_rules! shim {
    ($name:ident, $method:ident) => {
        #[inline(always)]
        pub(crate) fn $name(x: f64) -> f64 {
            libm::$name(x)
        }
    };
}

shim!(sqrt, sqrt);
shim!(sin, sin);
shim!(cos, cos);
shim!(acos, acos);
shim!(floor, floor);

#[cfg(feature = "std")]
#[inline(always)]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    y.atan2(x)
}

#[cfg(all(not(feature = "std"), feature = "libm"))]
#[inline(always)]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

/// |x| via sign-bit masking; exact and available everywhere.
#[inline(always)]
pub(crate) fn abs(x: f64) -> f64 {
    f64::from_bits(x.to_bits() & !(1u64 << 63))
}

/// Euclidean norm of a slice.
#[inline]
pub(crate) fn norm(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|x| x * x).sum())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) const DEG_PER_RAD: f64 = 180.0 / core::f64::consts::PI;
pub(crate) const RAD_PER_DEG: f64 = core::f64::consts::PI / 180.0;
