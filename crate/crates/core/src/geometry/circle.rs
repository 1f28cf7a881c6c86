use std::fmt;
use std::ops::{Add, Neg, Sub};

/// An element of R/Z, stored by its representative in [0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, serde::Serialize)]
pub struct CircleValue(f64);

impl CircleValue {
    pub const ZERO: CircleValue = CircleValue(0.0);

    pub fn new(v: f64) -> Self {
        let r = v.rem_euclid(1.0);
        // rem_euclid can return 1.0 for tiny negative inputs
        CircleValue(if r >= 1.0 { 0.0 } else { r })
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Representative in (-1/2, 1/2].
    pub fn centered(self) -> f64 {
        if self.0 > 0.5 {
            self.0 - 1.0
        } else {
            self.0
        }
    }

    pub fn times(self, n: i64) -> Self {
        CircleValue::new(self.0 * n as f64)
    }

    /// min(|a-b|, 1-|a-b|).
    pub fn distance(self, other: CircleValue) -> f64 {
        let d = (self.0 - other.0).abs();
        d.min(1.0 - d)
    }

    pub fn approx_eq(self, other: CircleValue, tol: f64) -> bool {
        self.distance(other) < tol
    }
}

/// Signed representative of `v` mod 1 in (-1/2, 1/2].
pub fn wrap_half(v: f64) -> f64 {
    CircleValue::new(v).centered()
}

impl Add for CircleValue {
    type Output = CircleValue;
    fn add(self, rhs: CircleValue) -> CircleValue {
        CircleValue::new(self.0 + rhs.0)
    }
}

impl Sub for CircleValue {
    type Output = CircleValue;
    fn sub(self, rhs: CircleValue) -> CircleValue {
        CircleValue::new(self.0 - rhs.0)
    }
}

impl Neg for CircleValue {
    type Output = CircleValue;
    fn neg(self) -> CircleValue {
        CircleValue::new(-self.0)
    }
}

impl fmt::Display for CircleValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod 1", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_representative() {
        assert_eq!(CircleValue::new(1.25).value(), 0.25);
        assert_eq!(CircleValue::new(-0.25).value(), 0.75);
        assert_eq!(CircleValue::new(-1e-18).value(), 0.0);
        assert!(CircleValue::new(0.999999).distance(CircleValue::new(0.0)) < 2e-6);
    }

    proptest! {
        #[test]
        fn group_laws(a in -10.0f64..10.0, b in -10.0f64..10.0, n in -20i64..20) {
            let (x, y) = (CircleValue::new(a), CircleValue::new(b));
            prop_assert!((x + y).value() < 1.0 && (x + y).value() >= 0.0);
            prop_assert!(((x + y) - y).distance(x) < 1e-12);
            prop_assert!((x + (-x)).distance(CircleValue::ZERO) < 1e-12);
            prop_assert!(x.times(n).distance(CircleValue::new(a * n as f64)) < 1e-9);
            prop_assert!(x.distance(y) <= 0.5);
        }
    }
}
