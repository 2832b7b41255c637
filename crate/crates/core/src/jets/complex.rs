//! Complex-valued functions carried as a pair of real jets.

use std::ops::{Add, Mul, Sub};

use super::Jet2;

#[derive(Clone, Debug, PartialEq)]
pub struct CJet {
    pub re: Jet2,
    pub im: Jet2,
}

impl CJet {
    pub fn new(re: Jet2, im: Jet2) -> Self {
        Self { re, im }
    }

    pub fn real(re: Jet2) -> Self {
        let m = re.dim();
        Self {
            re,
            im: Jet2::constant(0.0, m),
        }
    }

    pub fn constant(re: f64, im: f64, m: usize) -> Self {
        Self {
            re: Jet2::constant(re, m),
            im: Jet2::constant(im, m),
        }
    }

    /// The `j`-th complex coordinate `x_j + i y_j` from seeded real variables
    /// ordered `(x_1, y_1, …, x_n, y_n)`.
    pub fn coordinate(vars: &[Jet2], j: usize) -> Self {
        Self {
            re: vars[2 * j].clone(),
            im: vars[2 * j + 1].clone(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    /// `|self|²`
    pub fn abs2(&self) -> Jet2 {
        self.re.square() + self.im.square()
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            re: self.re.scale(k),
            im: self.im.scale(k),
        }
    }

    /// Multiplication by the complex constant `a + ib`.
    pub fn mul_const(&self, a: f64, b: f64) -> Self {
        Self {
            re: &self.re.scale(a) - &self.im.scale(b),
            im: &self.re.scale(b) + &self.im.scale(a),
        }
    }

    pub fn exp(&self) -> Self {
        let r = self.re.exp();
        Self {
            re: &r * &self.im.cos(),
            im: &r * &self.im.sin(),
        }
    }

    /// `e^{iθ}` for a real jet θ.
    pub fn cis(theta: &Jet2) -> Self {
        Self {
            re: theta.cos(),
            im: theta.sin(),
        }
    }
}

impl Add for &CJet {
    type Output = CJet;
    fn add(self, rhs: &CJet) -> CJet {
        CJet {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl Sub for &CJet {
    type Output = CJet;
    fn sub(self, rhs: &CJet) -> CJet {
        CJet {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

impl Mul for &CJet {
    type Output = CJet;
    fn mul(self, rhs: &CJet) -> CJet {
        CJet {
            re: &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            im: &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_of_coordinates() {
        // z·w at z = 1+2i, w = 3-i  →  5 + 5i
        let vars = Jet2::seed(&[1.0, 2.0, 3.0, -1.0]);
        let p = &CJet::coordinate(&vars, 0) * &CJet::coordinate(&vars, 1);
        assert_eq!(p.re.value(), 5.0);
        assert_eq!(p.im.value(), 5.0);
        // Re(zw) = x1 x2 - y1 y2
        assert_eq!(p.re.grad(), &[3.0, 1.0, 1.0, -2.0]);
    }

    #[test]
    fn cis_has_unit_modulus() {
        let vars = Jet2::seed(&[0.7]);
        let e = CJet::cis(&vars[0]);
        let m = e.abs2();
        assert!((m.value() - 1.0).abs() < 1e-15);
        assert!(m.grad()[0].abs() < 1e-15);
    }
}
