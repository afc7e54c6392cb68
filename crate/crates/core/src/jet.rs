//! First-order jets: a value together with its derivative in `r`.
//!
//! The chain recursion for β is a rational expression in lower-stage β's;
//! carrying `(f, f')` through the arithmetic gives the stage derivatives
//! exactly instead of by differencing.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub deriv: f64,
}

impl Jet {
    pub const fn new(value: f64, deriv: f64) -> Self {
        Jet { value, deriv }
    }

    pub const fn constant(value: f64) -> Self {
        Jet { value, deriv: 0.0 }
    }

    pub fn recip(self) -> Self {
        Jet {
            value: 1.0 / self.value,
            deriv: -self.deriv / (self.value * self.value),
        }
    }

    pub fn is_finite(self) -> bool {
        self.value.is_finite() && self.deriv.is_finite()
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet::new(self.value + o.value, self.deriv + o.deriv)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet::new(self.value - o.value, self.deriv - o.deriv)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet::new(-self.value, -self.deriv)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet::new(
            self.value * o.value,
            self.deriv * o.value + self.value * o.deriv,
        )
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let q = self.value / o.value;
        Jet::new(q, (self.deriv - q * o.deriv) / o.value)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        Jet::new(self.value * s, self.deriv * s)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, j: Jet) -> Jet {
        j * self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotient_rule() {
        // f = r^2, g = 1 + r at r = 2
        let f = Jet::new(4.0, 4.0);
        let g = Jet::new(3.0, 1.0);
        let q = f / g;
        assert!((q.value - 4.0 / 3.0).abs() < 1e-15);
        // (2r(1+r) - r^2) / (1+r)^2 = (12 - 4)/9
        assert!((q.deriv - 8.0 / 9.0).abs() < 1e-15);
        let p = f * g;
        assert_eq!(p.deriv, 4.0 * 3.0 + 4.0 * 1.0);
        assert_eq!((-f + f).value, 0.0);
        assert_eq!(g.recip().deriv, -1.0 / 9.0);
    }
}
