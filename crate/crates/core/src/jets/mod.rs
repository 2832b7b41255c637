//! Second-order automatic differentiation on ℝ^{2n} and Wirtinger
//! extraction of complex derivatives.
//!
//! Real coordinates are ordered `(x_1, y_1, …, x_n, y_n)` with
//! `z_j = x_j + i y_j`.

mod complex;
mod dual;
mod fd;

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use complex::CJet;
pub use dual::Jet2;
pub use fd::{directional_derivative, normal_third_derivative, FdConfig, FdEstimate};

use crate::error::{Error, Result};

/// A real scalar field on ℂⁿ ≅ ℝ^{2n} that can be evaluated on jets.
pub trait ScalarField: Send + Sync {
    /// Complex dimension `n`.
    fn complex_dim(&self) -> usize;

    /// Evaluates the field on `2n` seeded coordinate jets.
    fn eval(&self, vars: &[Jet2]) -> Result<Jet2>;
}

/// A complex-valued scalar field, carried as real and imaginary jets.
pub trait ComplexScalarField: Send + Sync {
    fn complex_dim(&self) -> usize;
    fn eval_complex(&self, vars: &[Jet2]) -> Result<CJet>;
}

impl<T: ScalarField + ?Sized> ScalarField for Arc<T> {
    fn complex_dim(&self) -> usize {
        (**self).complex_dim()
    }
    fn eval(&self, vars: &[Jet2]) -> Result<Jet2> {
        (**self).eval(vars)
    }
}

/// Adapts a closure into a [`ScalarField`].
pub struct FnField<F> {
    n: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[Jet2]) -> Result<Jet2> + Send + Sync,
{
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F> ScalarField for FnField<F>
where
    F: Fn(&[Jet2]) -> Result<Jet2> + Send + Sync,
{
    fn complex_dim(&self) -> usize {
        self.n
    }
    fn eval(&self, vars: &[Jet2]) -> Result<Jet2> {
        (self.f)(vars)
    }
}

/// Adapts a closure into a [`ComplexScalarField`].
pub struct FnComplexField<F> {
    n: usize,
    f: F,
}

impl<F> FnComplexField<F>
where
    F: Fn(&[Jet2]) -> Result<CJet> + Send + Sync,
{
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F> ComplexScalarField for FnComplexField<F>
where
    F: Fn(&[Jet2]) -> Result<CJet> + Send + Sync,
{
    fn complex_dim(&self) -> usize {
        self.n
    }
    fn eval_complex(&self, vars: &[Jet2]) -> Result<CJet> {
        (self.f)(vars)
    }
}

fn check_dim(n: usize, x: &[f64]) -> Result<()> {
    if x.len() != 2 * n {
        return Err(Error::Dimension {
            expected: 2 * n,
            got: x.len(),
        });
    }
    Ok(())
}

/// Value, gradient and Hessian of `f` at `x`.
pub fn evaluate_jet<F: ScalarField + ?Sized>(f: &F, x: &[f64]) -> Result<Jet2> {
    check_dim(f.complex_dim(), x)?;
    let jet = f.eval(&Jet2::seed(x))?;
    if !jet.value().is_finite() {
        return Err(crate::error::domain(
            "evaluate",
            format!("non-finite value at {x:?}"),
        ));
    }
    Ok(jet)
}

/// Value only.
pub fn evaluate_value<F: ScalarField + ?Sized>(f: &F, x: &[f64]) -> Result<f64> {
    check_dim(f.complex_dim(), x)?;
    let vars: Vec<Jet2> = x.iter().map(|&v| Jet2::constant(v, 0)).collect();
    Ok(f.eval(&vars)?.value())
}

/// Complex derivatives of a real function at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct LeviData {
    pub value: f64,
    /// `∂f/∂z_j`
    pub holo_grad: Vec<Complex64>,
    /// `H_{jk} = ∂²f/∂z_j∂z̄_k`; Hermitian.
    pub mixed_hess: DMatrix<Complex64>,
    /// `∂²f/∂z_j∂z_k`; symmetric.
    pub holo_hess: DMatrix<Complex64>,
}

impl LeviData {
    pub fn n(&self) -> usize {
        self.holo_grad.len()
    }

    /// Euclidean norm of the real gradient, `2 (Σ|∂f/∂z_j|²)^{1/2}`.
    pub fn grad_norm(&self) -> f64 {
        2.0 * self.holo_grad_norm()
    }

    /// `(Σ|∂f/∂z_j|²)^{1/2}`
    pub fn holo_grad_norm(&self) -> f64 {
        self.holo_grad
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `Σ H_{jk} X_j Ȳ_k`
    pub fn levi(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, xj) in x.iter().enumerate().take(self.n()) {
            let row: Complex64 = y
                .iter()
                .enumerate()
                .take(self.n())
                .map(|(k, yk)| self.mixed_hess[(j, k)] * yk.conj())
                .sum();
            acc += xj * row;
        }
        acc
    }

    /// `X f = Σ X_j ∂f/∂z_j`
    pub fn apply(&self, x: &[Complex64]) -> Complex64 {
        x.iter().zip(&self.holo_grad).map(|(a, b)| a * b).sum()
    }

    /// Real Hessian on `(x_1, y_1, …)` rebuilt from the complex parts.
    pub fn real_hessian(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            for k in 0..n {
                let plus = self.mixed_hess[(j, k)] + self.holo_hess[(j, k)];
                let minus = self.mixed_hess[(j, k)] - self.holo_hess[(j, k)];
                h[(2 * j, 2 * k)] = 2.0 * plus.re;
                h[(2 * j + 1, 2 * k)] = -2.0 * plus.im;
                h[(2 * j + 1, 2 * k + 1)] = 2.0 * minus.re;
                h[(2 * j, 2 * k + 1)] = 2.0 * minus.im;
            }
        }
        h
    }
}

/// Wirtinger extraction: `∂/∂z = ½(∂/∂x − i∂/∂y)`.
pub fn complex_parts(jet: &Jet2) -> Result<LeviData> {
    let m = jet.dim();
    if !m.is_multiple_of(2) {
        return Err(Error::Dimension {
            expected: m + 1,
            got: m,
        });
    }
    let n = m / 2;
    let g = jet.grad();
    let holo_grad = (0..n)
        .map(|j| Complex64::new(0.5 * g[2 * j], -0.5 * g[2 * j + 1]))
        .collect();
    let h = |a: usize, b: usize| jet.hess_at(a, b);
    let mut mixed = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    let mut holo = mixed.clone();
    for j in 0..n {
        let (xj, yj) = (2 * j, 2 * j + 1);
        for k in 0..n {
            let (xk, yk) = (2 * k, 2 * k + 1);
            mixed[(j, k)] = Complex64::new(
                0.25 * (h(xj, xk) + h(yj, yk)),
                0.25 * (h(xj, yk) - h(yj, xk)),
            );
            holo[(j, k)] = Complex64::new(
                0.25 * (h(xj, xk) - h(yj, yk)),
                -0.25 * (h(xj, yk) + h(yj, xk)),
            );
        }
    }
    Ok(LeviData {
        value: jet.value(),
        holo_grad,
        mixed_hess: mixed,
        holo_hess: holo,
    })
}

/// Evaluates `f` at `x` and extracts its complex derivatives.
pub fn levi_data<F: ScalarField + ?Sized>(f: &F, x: &[f64]) -> Result<LeviData> {
    complex_parts(&evaluate_jet(f, x)?)
}

/// Complex derivatives of a complex-valued field `u + iv`:
/// `∂ψ/∂z_j` and `∂²ψ/∂z_j∂z̄_k`.
pub fn complex_field_derivatives<F: ComplexScalarField + ?Sized>(
    f: &F,
    x: &[f64],
) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
    check_dim(f.complex_dim(), x)?;
    let c = f.eval_complex(&Jet2::seed(x))?;
    let re = complex_parts(&c.re)?;
    let im = complex_parts(&c.im)?;
    let i = Complex64::new(0.0, 1.0);
    let grad = re
        .holo_grad
        .iter()
        .zip(&im.holo_grad)
        .map(|(a, b)| a + i * b)
        .collect();
    let mixed = &re.mixed_hess + im.mixed_hess.map(|b| i * b);
    Ok((grad, mixed))
}

/// Derivative dimension of seeded variables (0 for value-only evaluation).
pub fn jet_dim(vars: &[Jet2]) -> usize {
    vars.first().map_or(0, Jet2::dim)
}

/// `(x_1, y_1, …)` → `(z_1, …)`
pub fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect()
}

/// `(z_1, …)` → `(x_1, y_1, …)`
pub fn to_real(z: &[Complex64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs2() -> FnField<impl Fn(&[Jet2]) -> Result<Jet2> + Send + Sync> {
        FnField::new(1, |v: &[Jet2]| Ok(CJet::coordinate(v, 0).abs2()))
    }

    #[test]
    fn abs2_parts() {
        let d = levi_data(&abs2(), &[1.0, 1.0]).unwrap();
        assert_eq!(d.holo_grad[0], Complex64::new(1.0, -1.0)); // z̄
        assert_eq!(d.mixed_hess[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(d.holo_hess[(0, 0)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn re_z_squared_is_pluriharmonic() {
        let f = FnField::new(1, |v: &[Jet2]| {
            let z = CJet::coordinate(v, 0);
            Ok((&z * &z).re)
        });
        let d = levi_data(&f, &[0.3, -0.8]).unwrap();
        assert_eq!(d.mixed_hess[(0, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(d.holo_hess[(0, 0)], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn abs4_parts_at_one() {
        let f = FnField::new(1, |v: &[Jet2]| Ok(CJet::coordinate(v, 0).abs2().square()));
        let d = levi_data(&f, &[1.0, 0.0]).unwrap();
        assert_eq!(d.holo_grad[0], Complex64::new(2.0, 0.0));
        assert_eq!(d.mixed_hess[(0, 0)], Complex64::new(4.0, 0.0));
    }

    #[test]
    fn wrong_dimension_rejected() {
        assert!(matches!(
            evaluate_jet(&abs2(), &[1.0, 0.0, 0.0, 0.0]),
            Err(Error::Dimension {
                expected: 2,
                got: 4
            })
        ));
    }

    #[test]
    fn linear_holomorphic_field_derivatives() {
        // ψ = (2 - i) z
        let f = FnComplexField::new(1, |v: &[Jet2]| {
            Ok(CJet::coordinate(v, 0).mul_const(2.0, -1.0))
        });
        let (g, h) = complex_field_derivatives(&f, &[0.5, 0.25]).unwrap();
        assert!((g[0] - Complex64::new(2.0, -1.0)).norm() < 1e-15);
        assert!(h[(0, 0)].norm() < 1e-15);
    }
}
