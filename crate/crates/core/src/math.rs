//! Thin wrappers over `libm` so the rest of the crate reads like std code.

pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// Rounds half away from zero.
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn sqrtf(x: f32) -> f32 {
    libm::sqrtf(x)
}

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

/// Sine and cosine of an angle in degrees.
pub(crate) fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let rad = deg.to_radians();
    (libm::sin(rad), libm::cos(rad))
}
