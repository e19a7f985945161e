//! Float helpers routed through `libm` so results are identical on std and
//! no_std builds (and across platforms, since `libm` is pure software).

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn tan(x: f64) -> f64 {
    libm::tan(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

#[inline]
pub fn abs_f32(x: f32) -> f32 {
    libm::fabsf(x)
}

#[inline]
pub fn sqrt_f32(x: f32) -> f32 {
    libm::sqrtf(x)
}

pub const DEG_TO_RAD: f64 = core::f64::consts::PI / 180.0;

/// Degrees-argument tangent, used for the repose slope threshold.
#[inline]
pub fn tan_deg(deg: f64) -> f64 {
    tan(deg * DEG_TO_RAD)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_std_for_exact_ops() {
        for &x in &[0.0f64, 1.5, -2.25, 37.125, 1e-9] {
            assert_eq!(abs(x), x.abs());
            assert_eq!(floor(x), x.floor());
            assert_eq!(ceil(x), x.ceil());
            assert_eq!(round(x), x.round());
        }
        assert_eq!(sqrt(2.0), 2.0f64.sqrt()); // both correctly rounded
    }

    #[test]
    fn tan_deg_at_45_is_one() {
        assert!((tan_deg(45.0) - 1.0).abs() < 1e-12);
    }
}
