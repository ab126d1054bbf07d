//! Numeric kernels: scalar traits, double-double and log-scaled arithmetic,
//! bracketed root refinement and simultaneous polynomial root finding.

pub mod dd;
pub mod hexfloat;
pub mod poly;
pub mod root;
pub mod scalar;
pub mod scaled;

pub use dd::DoubleDouble;
pub use poly::{aberth, hausdorff, poly_roots, AberthOptions, CoeffPoly, PolyEval, PolyTarget};
pub use root::{refine_bracket, refine_root, Bracket, Refined, RootOptions};
pub use scalar::{Field, Scalar};
pub use scaled::{scaled_add, scaled_mul, ScaledReal};

use serde::{Deserialize, Serialize};

/// Working precision for kernels that are generic over [`Scalar`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Standard,
    #[default]
    Extended,
}

/// Shortest round-trip text for `x`, switching to exponent form outside
/// `[1e-5, 1e16)` so tiny and huge values stay short.
pub fn fmt_real(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod fmt_tests {
    use super::fmt_real;

    #[test]
    fn round_trips_and_stays_short() {
        for x in [
            0.0,
            -0.0,
            1.5,
            -2.2552519304127614,
            1.9626184322622233e-103,
            3e20,
            1e-5,
            f64::INFINITY,
        ] {
            let s = fmt_real(x);
            assert!(s.len() < 30, "{s}");
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert!(fmt_real(f64::NAN).parse::<f64>().unwrap().is_nan());
    }
}
