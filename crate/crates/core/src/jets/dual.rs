//! Second-order forward-mode dual numbers over a fixed number of real
//! variables.
//!
//! A [`Jet2`] carries a value, its gradient and its Hessian with respect to
//! `m` seed variables. Every operation assembles the upper triangle of the
//! Hessian and mirrors it, so `hess[i][j] == hess[j][i]` holds bit for bit.

use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{domain, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    value: f64,
    grad: Vec<f64>,
    /// Row-major `m × m`.
    hess: Vec<f64>,
}

impl Jet2 {
    pub fn constant(value: f64, m: usize) -> Self {
        Self {
            value,
            grad: vec![0.0; m],
            hess: vec![0.0; m * m],
        }
    }

    /// The `index`-th coordinate function evaluated at `value`.
    pub fn variable(value: f64, index: usize, m: usize) -> Self {
        let mut jet = Self::constant(value, m);
        jet.grad[index] = 1.0;
        jet
    }

    /// Seeds one variable per coordinate of `x`.
    pub fn seed(x: &[f64]) -> Vec<Self> {
        let m = x.len();
        x.iter()
            .enumerate()
            .map(|(i, &v)| Self::variable(v, i, m))
            .collect()
    }

    /// Builds a jet from explicit parts. The Hessian is symmetrised by
    /// copying its upper triangle over the lower one.
    pub fn from_parts(value: f64, grad: Vec<f64>, mut hess: Vec<f64>) -> Result<Self> {
        let m = grad.len();
        if hess.len() != m * m {
            return Err(crate::Error::Dimension {
                expected: m * m,
                got: hess.len(),
            });
        }
        for i in 0..m {
            for j in 0..i {
                hess[i * m + j] = hess[j * m + i];
            }
        }
        Ok(Self { value, grad, hess })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    /// Row-major Hessian.
    pub fn hess(&self) -> &[f64] {
        &self.hess
    }

    pub fn hess_at(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    /// Number of seed variables.
    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }

    /// `f ∘ self` given `f(v)`, `f'(v)` and `f''(v)` at the current value.
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let m = self.dim();
        let grad: Vec<f64> = self.grad.iter().map(|g| f1 * g).collect();
        let mut hess = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let h = f1 * self.hess[i * m + j] + f2 * self.grad[i] * self.grad[j];
                hess[i * m + j] = h;
                hess[j * m + i] = h;
            }
        }
        Self {
            value: f0,
            grad,
            hess,
        }
    }

    fn combine(&self, other: &Self, value: f64, ga: f64, gb: f64, cross: f64) -> Self {
        // value, ga·∇a + gb·∇b, ga·Ha + gb·Hb + cross·(∇a∇bᵀ + ∇b∇aᵀ)
        let m = self.dim();
        debug_assert_eq!(m, other.dim());
        let grad = (0..m)
            .map(|i| ga * self.grad[i] + gb * other.grad[i])
            .collect();
        let mut hess = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let mut h = ga * self.hess[i * m + j] + gb * other.hess[i * m + j];
                if cross != 0.0 {
                    h += cross * (self.grad[i] * other.grad[j] + self.grad[j] * other.grad[i]);
                }
                hess[i * m + j] = h;
                hess[j * m + i] = h;
            }
        }
        Self { value, grad, hess }
    }

    pub fn scale(&self, k: f64) -> Self {
        self.chain(k * self.value, k, 0.0)
    }

    pub fn offset(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.value += k;
        out
    }

    pub fn square(&self) -> Self {
        let v = self.value;
        self.chain(v * v, 2.0 * v, 2.0)
    }

    pub fn powi(&self, k: i32) -> Self {
        let v = self.value;
        let kf = k as f64;
        let f1 = if k == 0 { 0.0 } else { kf * v.powi(k - 1) };
        let f2 = if k == 0 || k == 1 {
            0.0
        } else {
            kf * (kf - 1.0) * v.powi(k - 2)
        };
        self.chain(v.powi(k), f1, f2)
    }

    /// Real power `self^p`; requires a positive base unless `p` is an
    /// integer.
    pub fn powf(&self, p: f64) -> Result<Self> {
        if p.fract() == 0.0 && p.abs() < i32::MAX as f64 {
            return Ok(self.powi(p as i32));
        }
        let v = self.value;
        if !(v > 0.0) {
            return Err(domain(
                "powf",
                format!("base {v} must be positive for exponent {p}"),
            ));
        }
        Ok(self.chain(
            v.powf(p),
            p * v.powf(p - 1.0),
            p * (p - 1.0) * v.powf(p - 2.0),
        ))
    }

    pub fn sqrt(&self) -> Result<Self> {
        let v = self.value;
        if !(v > 0.0) {
            return Err(domain("sqrt", format!("argument {v} must be positive")));
        }
        let s = v.sqrt();
        Ok(self.chain(s, 0.5 / s, -0.25 / (s * v)))
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Result<Self> {
        let v = self.value;
        if !(v > 0.0) {
            return Err(domain("ln", format!("argument {v} must be positive")));
        }
        Ok(self.chain(v.ln(), 1.0 / v, -1.0 / (v * v)))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    /// Cotangent; fails within 1e-12 of a multiple of π.
    pub fn cot(&self) -> Result<Self> {
        let v = self.value;
        let k = (v / PI).round();
        if (v - k * PI).abs() < 1e-12 {
            return Err(crate::Error::Singularity { argument: v });
        }
        let (s, c) = v.sin_cos();
        let cot = c / s;
        let csc2 = 1.0 / (s * s);
        // cot' = -csc², cot'' = 2 csc² cot
        Ok(self.chain(cot, -csc2, 2.0 * csc2 * cot))
    }

    pub fn recip(&self) -> Result<Self> {
        let v = self.value;
        if v == 0.0 {
            return Err(domain("div", "division by zero"));
        }
        Ok(self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.recip()?)
    }
}

impl Add for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: &Jet2) -> Jet2 {
        self.combine(rhs, self.value + rhs.value, 1.0, 1.0, 0.0)
    }
}

impl Sub for &Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: &Jet2) -> Jet2 {
        self.combine(rhs, self.value - rhs.value, 1.0, -1.0, 0.0)
    }
}

impl Mul for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: &Jet2) -> Jet2 {
        self.combine(rhs, self.value * rhs.value, rhs.value, self.value, 1.0)
    }
}

/// Division through [`Jet2::recip`]; a zero divisor yields non-finite
/// entries. Use [`Jet2::checked_div`] where that must be reported.
impl Div for &Jet2 {
    type Output = Jet2;
    fn div(self, rhs: &Jet2) -> Jet2 {
        let v = rhs.value;
        let r = rhs.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
        self * &r
    }
}

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($trait:ident, $method:ident) => {
        impl $trait for Jet2 {
            type Output = Jet2;
            fn $method(self, rhs: Jet2) -> Jet2 {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet2> for Jet2 {
            type Output = Jet2;
            fn $method(self, rhs: &Jet2) -> Jet2 {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet2> for &Jet2 {
            type Output = Jet2;
            fn $method(self, rhs: Jet2) -> Jet2 {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Add<f64> for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: f64) -> Jet2 {
        self.offset(rhs)
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(self, rhs: f64) -> Jet2 {
        self.offset(rhs)
    }
}

impl Sub<f64> for &Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: f64) -> Jet2 {
        self.offset(-rhs)
    }
}

impl Sub<f64> for Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: f64) -> Jet2 {
        self.offset(-rhs)
    }
}

impl Mul<f64> for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: f64) -> Jet2 {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: f64) -> Jet2 {
        self.scale(rhs)
    }
}

impl Mul<&Jet2> for f64 {
    type Output = Jet2;
    fn mul(self, rhs: &Jet2) -> Jet2 {
        rhs.scale(self)
    }
}

impl Mul<Jet2> for f64 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        rhs.scale(self)
    }
}

impl Sub<&Jet2> for f64 {
    type Output = Jet2;
    fn sub(self, rhs: &Jet2) -> Jet2 {
        rhs.chain(self - rhs.value, -1.0, 0.0)
    }
}

impl Sub<Jet2> for f64 {
    type Output = Jet2;
    fn sub(self, rhs: Jet2) -> Jet2 {
        self - &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn abs2_of_one_plus_i() {
        let v = Jet2::seed(&[1.0, 1.0]);
        let f = v[0].square() + v[1].square();
        assert_eq!(f.value(), 2.0);
        assert_eq!(f.grad(), &[2.0, 2.0]);
        assert_eq!(f.hess(), &[2.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn real_part_is_linear() {
        let v = Jet2::seed(&[0.3, -1.7]);
        let f = v[0].clone();
        assert_eq!(f.grad(), &[1.0, 0.0]);
        assert!(f.hess().iter().all(|&h| h == 0.0));
    }

    #[test]
    fn abs4_at_one_matches_hand_derivatives() {
        // |z|⁴ = (x²+y²)²: ∂x = 4x(x²+y²), ∂xx = 12x²+4y², ∂yy = 4x²+12y², ∂xy = 8xy
        let v = Jet2::seed(&[1.0, 0.0]);
        let f = (v[0].square() + v[1].square()).square();
        assert_eq!(f.value(), 1.0);
        assert_eq!(f.grad(), &[4.0, 0.0]);
        assert_eq!(f.hess(), &[12.0, 0.0, 0.0, 4.0]);
    }

    #[test]
    fn quotient_rule() {
        let v = Jet2::seed(&[2.0, 3.0]);
        let f = &v[0] / &v[1];
        assert_relative_eq!(f.grad()[0], 1.0 / 3.0);
        assert_relative_eq!(f.grad()[1], -2.0 / 9.0);
        assert_relative_eq!(f.hess_at(0, 1), -1.0 / 9.0);
        assert_relative_eq!(f.hess_at(1, 1), 4.0 / 27.0);
        assert_eq!(f.hess_at(0, 0), 0.0);
    }

    #[test]
    fn domain_errors_name_primitive() {
        let v = Jet2::seed(&[-1.0]);
        match v[0].ln() {
            Err(crate::Error::Domain { primitive, .. }) => assert_eq!(primitive, "ln"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            Jet2::seed(&[0.0])[0].cot(),
            Err(crate::Error::Singularity { .. })
        ));
        assert!(matches!(
            v[0].powf(0.5),
            Err(crate::Error::Domain {
                primitive: "powf",
                ..
            })
        ));
        assert!(v[0].powf(3.0).is_ok());
    }

    #[test]
    fn hessian_is_exactly_symmetric() {
        let v = Jet2::seed(&[0.4, -0.9, 1.3]);
        let f = (&(&v[0] * &v[1]).sin() * &v[2].exp()) / &(v[1].square() + 2.0);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(f.hess_at(i, j).to_bits(), f.hess_at(j, i).to_bits());
            }
        }
    }
}
