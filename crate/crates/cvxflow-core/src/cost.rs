//! Per-arc convex cost curves.
//!
//! Every curve is defined on `flow >= 0`, costs nothing at zero flow, and
//! has a continuous first derivative. Those three properties are what the
//! solver relies on; [`CostFn::validate`] rejects parameter choices that
//! would break convexity.

use alloc::sync::Arc;
use core::fmt;

use crate::math;

/// User-supplied cost curve for [`CostFn::Custom`].
///
/// Implementations must be convex on `[0, inf)`, evaluate to 0 at 0, and
/// return the exact derivative of `cost` from `deriv`.
pub trait CostCurve: Send + Sync {
    fn cost(&self, flow: f64) -> f64;
    fn deriv(&self, flow: f64) -> f64;
}

/// Convex arc cost, one of four closed-form families or a custom curve.
#[derive(Clone)]
pub enum CostFn {
    /// `slope * x`
    Linear { slope: f64 },
    /// `quad * x^2 + slope * x`, `quad >= 0`
    Quadratic { quad: f64, slope: f64 },
    /// `scale * x^p`, `scale >= 0`, `p >= 1`
    Power { scale: f64, exponent: f64 },
    /// `scale * (exp(rate * x) - 1)`, `scale >= 0`, `rate >= 0`
    Exponential { scale: f64, rate: f64 },
    /// Arbitrary convex curve provided by the caller.
    Custom(Arc<dyn CostCurve>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostError {
    /// Cost curves are only defined for nonnegative flow.
    NegativeFlow { flow: f64 },
    /// Parameters violate convexity or are not finite.
    BadParams { reason: &'static str },
}

impl fmt::Display for CostError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostError::NegativeFlow { flow } => {
                write!(f, "cost undefined for negative flow {flow}")
            }
            CostError::BadParams { reason } => write!(f, "bad cost parameters: {reason}"),
        }
    }
}

impl core::error::Error for CostError {}

impl CostFn {
    pub fn linear(slope: f64) -> Self {
        CostFn::Linear { slope }
    }

    pub fn quadratic(quad: f64, slope: f64) -> Self {
        CostFn::Quadratic { quad, slope }
    }

    pub fn power(scale: f64, exponent: f64) -> Self {
        CostFn::Power { scale, exponent }
    }

    pub fn exponential(scale: f64, rate: f64) -> Self {
        CostFn::Exponential { scale, rate }
    }

    pub fn custom<C: CostCurve + 'static>(curve: C) -> Self {
        CostFn::Custom(Arc::new(curve))
    }

    /// Checks parameters for finiteness and convexity. Custom curves are
    /// only probed at zero, where the cost must vanish.
    pub fn validate(&self) -> Result<(), CostError> {
        let bad = |reason| Err(CostError::BadParams { reason });
        match *self {
            CostFn::Linear { slope } => {
                if !slope.is_finite() {
                    return bad("linear slope must be finite");
                }
            }
            CostFn::Quadratic { quad, slope } => {
                if !quad.is_finite() || !slope.is_finite() {
                    return bad("quadratic coefficients must be finite");
                }
                if quad < 0.0 {
                    return bad("quadratic coefficient must be nonnegative");
                }
            }
            CostFn::Power { scale, exponent } => {
                if !scale.is_finite() || !exponent.is_finite() {
                    return bad("power parameters must be finite");
                }
                if scale < 0.0 {
                    return bad("power scale must be nonnegative");
                }
                if exponent < 1.0 {
                    return bad("power exponent must be at least 1");
                }
            }
            CostFn::Exponential { scale, rate } => {
                if !scale.is_finite() || !rate.is_finite() {
                    return bad("exponential parameters must be finite");
                }
                if scale < 0.0 || rate < 0.0 {
                    return bad("exponential parameters must be nonnegative");
                }
            }
            CostFn::Custom(ref curve) => {
                let at_zero = curve.cost(0.0);
                // NaN must fail this check too.
                if at_zero.is_nan() || at_zero.abs() > 1e-12 {
                    return bad("custom cost must vanish at zero flow");
                }
            }
        }
        Ok(())
    }

    pub fn cost(&self, flow: f64) -> Result<f64, CostError> {
        if flow < 0.0 {
            return Err(CostError::NegativeFlow { flow });
        }
        Ok(match *self {
            CostFn::Linear { slope } => slope * flow,
            CostFn::Quadratic { quad, slope } => quad * flow * flow + slope * flow,
            CostFn::Power { scale, exponent } => scale * math::powf(flow, exponent),
            CostFn::Exponential { scale, rate } => scale * (math::exp(rate * flow) - 1.0),
            CostFn::Custom(ref curve) => curve.cost(flow),
        })
    }

    /// First derivative with respect to flow. For the power family the
    /// one-sided derivative at zero is `scale` when `p == 1` and 0 when
    /// `p > 1`, which is exactly what `x^(p-1)` evaluates to there.
    pub fn deriv(&self, flow: f64) -> Result<f64, CostError> {
        if flow < 0.0 {
            return Err(CostError::NegativeFlow { flow });
        }
        Ok(match *self {
            CostFn::Linear { slope } => slope,
            CostFn::Quadratic { quad, slope } => 2.0 * quad * flow + slope,
            CostFn::Power { scale, exponent } => {
                scale * exponent * math::powf(flow, exponent - 1.0)
            }
            CostFn::Exponential { scale, rate } => scale * rate * math::exp(rate * flow),
            CostFn::Custom(ref curve) => curve.deriv(flow),
        })
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, CostFn::Linear { .. })
    }
}

impl fmt::Debug for CostFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CostFn::Linear { slope } => write!(f, "Linear {{ slope: {slope} }}"),
            CostFn::Quadratic { quad, slope } => {
                write!(f, "Quadratic {{ quad: {quad}, slope: {slope} }}")
            }
            CostFn::Power { scale, exponent } => {
                write!(f, "Power {{ scale: {scale}, exponent: {exponent} }}")
            }
            CostFn::Exponential { scale, rate } => {
                write!(f, "Exponential {{ scale: {scale}, rate: {rate} }}")
            }
            CostFn::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl PartialEq for CostFn {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (CostFn::Linear { slope: a }, CostFn::Linear { slope: b }) => a == b,
            (
                CostFn::Quadratic { quad: a, slope: b },
                CostFn::Quadratic { quad: c, slope: d },
            ) => a == c && b == d,
            (
                CostFn::Power { scale: a, exponent: b },
                CostFn::Power { scale: c, exponent: d },
            ) => a == c && b == d,
            (
                CostFn::Exponential { scale: a, rate: b },
                CostFn::Exponential { scale: c, rate: d },
            ) => a == c && b == d,
            (CostFn::Custom(a), CostFn::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_cost_and_deriv() {
        let c = CostFn::linear(5.0);
        assert_eq!(c.cost(2.0).unwrap(), 10.0);
        assert_eq!(c.deriv(2.0).unwrap(), 5.0);
        assert_eq!(c.cost(0.0).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_cost_and_deriv() {
        let c = CostFn::quadratic(2.0, 1.0);
        assert_eq!(c.cost(3.0).unwrap(), 21.0);
        assert_eq!(c.deriv(3.0).unwrap(), 13.0);
    }

    #[test]
    fn power_cost_matches_square() {
        let c = CostFn::power(1.0, 2.0);
        let x = 8.0 / 3.0;
        assert!((c.cost(x).unwrap() - 64.0 / 9.0).abs() < 1e-12);
        assert!((c.deriv(x).unwrap() - 16.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn power_deriv_at_zero() {
        // One-sided derivative: scale for p == 1, zero for p > 1.
        assert_eq!(CostFn::power(3.0, 1.0).deriv(0.0).unwrap(), 3.0);
        assert_eq!(CostFn::power(3.0, 1.5).deriv(0.0).unwrap(), 0.0);
        assert_eq!(CostFn::power(3.0, 2.0).deriv(0.0).unwrap(), 0.0);
    }

    #[test]
    fn exponential_cost_vanishes_at_zero() {
        let c = CostFn::exponential(1.0, 1.0);
        assert_eq!(c.cost(0.0).unwrap(), 0.0);
        assert_eq!(c.deriv(0.0).unwrap(), 1.0);
        assert!((c.cost(1.0).unwrap() - (core::f64::consts::E - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn negative_flow_is_rejected() {
        let c = CostFn::quadratic(1.0, 0.0);
        assert_eq!(
            c.cost(-0.5).unwrap_err(),
            CostError::NegativeFlow { flow: -0.5 }
        );
        assert_eq!(
            c.deriv(-0.5).unwrap_err(),
            CostError::NegativeFlow { flow: -0.5 }
        );
    }

    #[test]
    fn convexity_violations_are_rejected() {
        assert!(CostFn::quadratic(-1.0, 0.0).validate().is_err());
        assert!(CostFn::power(1.0, 0.5).validate().is_err());
        assert!(CostFn::power(-1.0, 2.0).validate().is_err());
        assert!(CostFn::exponential(-1.0, 1.0).validate().is_err());
        assert!(CostFn::exponential(1.0, -1.0).validate().is_err());
        assert!(CostFn::quadratic(0.0, -3.0).validate().is_ok());
        assert!(CostFn::linear(-2.0).validate().is_ok());
    }

    #[test]
    fn non_finite_params_are_rejected() {
        assert!(CostFn::linear(f64::NAN).validate().is_err());
        assert!(CostFn::quadratic(f64::INFINITY, 0.0).validate().is_err());
        assert!(CostFn::power(1.0, f64::NAN).validate().is_err());
        assert!(CostFn::exponential(1.0, f64::INFINITY).validate().is_err());
    }

    struct Quartic;

    impl CostCurve for Quartic {
        fn cost(&self, flow: f64) -> f64 {
            flow.powi(4)
        }
        fn deriv(&self, flow: f64) -> f64 {
            4.0 * flow.powi(3)
        }
    }

    struct Offset;

    impl CostCurve for Offset {
        fn cost(&self, flow: f64) -> f64 {
            flow + 1.0
        }
        fn deriv(&self, _flow: f64) -> f64 {
            1.0
        }
    }

    #[test]
    fn custom_curve_must_vanish_at_zero() {
        assert!(CostFn::custom(Quartic).validate().is_ok());
        assert!(CostFn::custom(Offset).validate().is_err());
        assert_eq!(CostFn::custom(Quartic).cost(2.0).unwrap(), 16.0);
        assert_eq!(CostFn::custom(Quartic).deriv(2.0).unwrap(), 32.0);
    }
}
