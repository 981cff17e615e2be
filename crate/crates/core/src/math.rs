//! Float helpers that work without `std`.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn log2(x: f64) -> f64 {
    libm::log2(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

/// `2^k` for integer `k`, exact for the normal range.
#[inline]
pub(crate) fn pow2(k: i32) -> f64 {
    libm::ldexp(1.0, k)
}
