// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959964;

/// Wilson score interval, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WilsonInterval<T> {
    pub point: T,
    pub low: T,
    pub high: T,
    pub n: u64,
    pub z: T,
}

impl<T: Scalar> fmt::Display for WilsonInterval<T> {
    /// Rounded to 0.1 percentage points: `84.7 [77.3, 90.0]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.1} [{:.1}, {:.1}]",
            self.point.as_f64(),
            self.low.as_f64(),
            self.high.as_f64()
        )
    }
}

pub fn wilson_ci<T: Scalar>(successes: u64, n: u64, z: T) -> Result<WilsonInterval<T>> {
    if n == 0 {
        return Err(Error::invalid("Wilson interval needs at least one trial"));
    }
    if successes > n {
        return Err(Error::invalid(format!("{successes} successes out of {n} trials")));
    }
    if !(z.is_finite() && z > T::zero()) {
        return Err(Error::invalid(format!("z must be positive, got {z}")));
    }
    let hundred = T::lit(100.0);
    let n_t = T::from_u64(n).expect("trial count fits scalar");
    let p = T::from_u64(successes).expect("success count fits scalar") / n_t;
    let z2 = z * z;
    let denom = T::one() + z2 / n_t;
    let center = (p + z2 / (T::lit(2.0) * n_t)) / denom;
    let half = z / denom * (p * (T::one() - p) / n_t + z2 / (T::lit(4.0) * n_t * n_t)).sqrt();
    // At the boundaries the analytic endpoints are exactly 0 and 1.
    let low = if successes == 0 {
        T::zero()
    } else {
        (center - half).max(T::zero())
    };
    let high = if successes == n {
        T::one()
    } else {
        (center + half).min(T::one())
    };
    Ok(WilsonInterval {
        point: p * hundred,
        low: low * hundred,
        high: high * hundred,
        n,
        z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn round1(x: f64) -> f64 {
        (x * 10.0).round() / 10.0
    }

    #[test]
    fn published_intervals() {
        let ci = wilson_ci(105, 124, 1.96).unwrap();
        assert_eq!((round1(ci.point), round1(ci.low), round1(ci.high)), (84.7, 77.3, 90.0));
        assert_eq!(ci.to_string(), "84.7 [77.3, 90.0]");
        let ci = wilson_ci(129, 143, 1.96).unwrap();
        assert_eq!((round1(ci.point), round1(ci.low), round1(ci.high)), (90.2, 84.2, 94.1));
        let ci = wilson_ci(97, 124, Z_95).unwrap();
        assert_eq!(ci.to_string(), "78.2 [70.2, 84.6]");
    }

    #[test]
    fn boundaries() {
        let ci = wilson_ci(0, 10, 1.96).unwrap();
        assert_eq!((ci.point, ci.low), (0.0, 0.0));
        assert!(ci.high > 0.0);
        let ci = wilson_ci(10, 10, 1.96).unwrap();
        assert_eq!(ci.high, 100.0);
        assert!(wilson_ci(0, 0, 1.96).is_err());
        assert!(wilson_ci(3, 2, 1.96).is_err());
    }

    proptest! {
        #[test]
        fn ordered_and_bounded(n in 1u64..5000, frac in 0.0f64..=1.0) {
            let k = ((n as f64) * frac).floor() as u64;
            let ci = wilson_ci(k, n, Z_95).unwrap();
            prop_assert!(0.0 <= ci.low && ci.low <= ci.point && ci.point <= ci.high && ci.high <= 100.0);
        }

        #[test]
        fn reflection_about_half(n in 1u64..5000, frac in 0.0f64..=1.0) {
            let k = ((n as f64) * frac).floor() as u64;
            let a = wilson_ci(k, n, Z_95).unwrap();
            let b = wilson_ci(n - k, n, Z_95).unwrap();
            prop_assert!((a.low - (100.0 - b.high)).abs() < 1e-9);
            prop_assert!((a.high - (100.0 - b.low)).abs() < 1e-9);
        }
    }
}
