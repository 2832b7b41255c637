//! Boundary geometry: projection onto `∂Ω`, the complex normal `N_ρ`,
//! holomorphic tangent frames, Levi forms and pseudoconvexity classes.
//!
//! Vector fields are coefficient vectors `X = Σ X_j ∂/∂z_j`. The Euclidean
//! Hermitian metric is `g(X, Y) = ½ Σ X_j Ȳ_j`, so `N_ρ` and the frame
//! vectors have unit coefficient norm and `g(N,N) = g(L,L) = ½`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{
    levi_data, normal_third_derivative, to_complex, FdConfig, FdEstimate, LeviData, ScalarField,
};
use crate::linalg::hermitian_eigen;

pub const DEFAULT_TOL_BOUNDARY: f64 = 1e-12;
pub const DEFAULT_EPS_LEVI: f64 = 1e-7;
const MAX_NEWTON: usize = 100;

/// `g(X, Y) = ½ Σ X_j Ȳ_j`
pub fn metric(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    0.5 * x
        .iter()
        .zip(y)
        .map(|(a, b)| a * b.conj())
        .sum::<Complex64>()
}

pub fn coefficient_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn normalized(x: &[Complex64]) -> Vec<Complex64> {
    let n = coefficient_norm(x);
    x.iter().map(|c| c / n).collect()
}

/// Coefficients of `N_ρ = Σ (∂ρ/∂z̄_j) ∂/∂z_j / (Σ|∂ρ/∂z_j|²)^{1/2}`.
pub fn complex_normal(d: &LeviData) -> Result<Vec<Complex64>> {
    let s = d.holo_grad_norm();
    if !(s > 0.0) {
        return Err(Error::VanishingGradient(Vec::new()));
    }
    Ok(d.holo_grad.iter().map(|c| c.conj() / s).collect())
}

/// `∇ρ / ‖∇ρ‖` in real coordinates; equals `N + N̄` as a real vector.
pub fn real_unit_normal(d: &LeviData) -> Result<Vec<f64>> {
    let norm = d.grad_norm();
    if !(norm > 0.0) {
        return Err(Error::VanishingGradient(Vec::new()));
    }
    Ok(d.holo_grad
        .iter()
        .flat_map(|c| [2.0 * c.re / norm, -2.0 * c.im / norm])
        .collect())
}

/// Removes the `N` component so that `Σ L_j ∂ρ/∂z_j = 0`.
pub fn project_tangent(d: &LeviData, l: &[Complex64]) -> Result<Vec<Complex64>> {
    let normal = complex_normal(d)?;
    let along: Complex64 = l.iter().zip(&normal).map(|(a, b)| a * b.conj()).sum();
    Ok(l.iter().zip(&normal).map(|(a, b)| a - along * b).collect())
}

/// Orthonormal (unit coefficient norm) basis of `T^{1,0}`: project the
/// standard basis off `N`, drop the shortest projection (lowest index on
/// ties) and run Gram–Schmidt in index order.
pub fn tangent_frame(d: &LeviData) -> Result<Vec<Vec<Complex64>>> {
    let n = d.n();
    let normal = complex_normal(d)?;
    let projected: Vec<Vec<Complex64>> = (0..n)
        .map(|k| {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[k] = Complex64::new(1.0, 0.0);
            let along = normal[k].conj();
            e.iter().zip(&normal).map(|(a, b)| a - along * b).collect()
        })
        .collect();
    let drop = (0..n)
        .min_by(|&a, &b| {
            coefficient_norm(&projected[a]).total_cmp(&coefficient_norm(&projected[b]))
        })
        .unwrap_or(0);
    let mut frame: Vec<Vec<Complex64>> = Vec::with_capacity(n.saturating_sub(1));
    for (k, v) in projected.into_iter().enumerate() {
        if k == drop {
            continue;
        }
        let mut v = v;
        for u in &frame {
            let c: Complex64 = v.iter().zip(u).map(|(a, b)| a * b.conj()).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= c * ui;
            }
        }
        frame.push(normalized(&v));
    }
    Ok(frame)
}

/// `M_{ab} = L_ρ(T_b, T_a)`, so that `c^H M c = L_ρ(Σ c_a T_a, Σ c_a T_a)`.
pub fn restricted_levi_matrix(d: &LeviData, frame: &[Vec<Complex64>]) -> DMatrix<Complex64> {
    let k = frame.len();
    DMatrix::from_fn(k, k, |a, b| d.levi(&frame[b], &frame[a]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    Strongly,
    /// Kernel vectors of the restricted Levi form, unit coefficient norm.
    Weakly {
        kernel: Vec<Vec<Complex64>>,
    },
    /// The restricted Levi form has an eigenvalue below `−eps_levi`.
    Indeterminate,
}

impl Classification {
    pub fn is_weak(&self) -> bool {
        matches!(self, Classification::Weakly { .. })
    }

    pub fn kernel(&self) -> &[Vec<Complex64>] {
        match self {
            Classification::Weakly { kernel } => kernel,
            _ => &[],
        }
    }
}

/// Smallest restricted Levi eigenvalue (`+∞` when `n = 1`) and the class.
pub fn classify_levi(
    d: &LeviData,
    frame: &[Vec<Complex64>],
    eps_levi: f64,
) -> (Classification, f64) {
    let pairs = hermitian_eigen(&restricted_levi_matrix(d, frame));
    let Some(&(lambda_min, _)) = pairs.first() else {
        return (Classification::Strongly, f64::INFINITY);
    };
    let class = if lambda_min > eps_levi {
        Classification::Strongly
    } else if lambda_min >= -eps_levi {
        let kernel = pairs
            .iter()
            .filter(|(l, _)| l.abs() <= eps_levi)
            .map(|(_, c)| {
                let n = d.n();
                let mut v = vec![Complex64::new(0.0, 0.0); n];
                for (ca, t) in c.iter().zip(frame) {
                    for j in 0..n {
                        v[j] += ca * t[j];
                    }
                }
                normalized(&v)
            })
            .collect();
        Classification::Weakly { kernel }
    } else {
        Classification::Indeterminate
    };
    (class, lambda_min)
}

/// A boundary point with its normal, tangent frame and classification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub point: Vec<Complex64>,
    pub rho_value: f64,
    pub normal: Vec<Complex64>,
    pub tangent_frame: Vec<Vec<Complex64>>,
    pub classification: Classification,
    /// Smallest eigenvalue of the restricted Levi form.
    pub levi_min: f64,
    /// `‖∇ρ‖ = 2 N_ρ ρ`
    pub grad_norm: f64,
}

impl BoundaryPoint {
    pub fn real_point(&self) -> Vec<f64> {
        crate::jets::to_real(&self.point)
    }
}

/// Assembles the boundary data at `x` without moving it.
pub fn boundary_point<F: ScalarField + ?Sized>(
    rho: &F,
    x: &[f64],
    eps_levi: f64,
) -> Result<BoundaryPoint> {
    let d = levi_data(rho, x)?;
    let normal = complex_normal(&d).map_err(|_| Error::VanishingGradient(x.to_vec()))?;
    let frame = tangent_frame(&d)?;
    let (classification, levi_min) = classify_levi(&d, &frame, eps_levi);
    Ok(BoundaryPoint {
        point: to_complex(x),
        rho_value: d.value,
        normal,
        tangent_frame: frame,
        classification,
        levi_min,
        grad_norm: d.grad_norm(),
    })
}

/// Newton iteration along the real gradient until `|ρ| ≤ tol_boundary`.
pub fn newton_to_boundary<F: ScalarField + ?Sized>(
    rho: &F,
    x0: &[f64],
    tol_boundary: f64,
) -> Result<Vec<f64>> {
    let mut x = x0.to_vec();
    let mut last = f64::INFINITY;
    for _ in 0..MAX_NEWTON {
        let jet = crate::jets::evaluate_jet(rho, &x)?;
        last = jet.value();
        if last.abs() <= tol_boundary {
            return Ok(x);
        }
        let g2: f64 = jet.grad().iter().map(|g| g * g).sum();
        if !(g2 > 0.0) {
            return Err(Error::VanishingGradient(x));
        }
        let step = last / g2;
        for (xi, gi) in x.iter_mut().zip(jet.grad()) {
            *xi -= step * gi;
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_NEWTON,
        residual: last.abs(),
    })
}

pub fn project_to_boundary<F: ScalarField + ?Sized>(
    rho: &F,
    x0: &[f64],
    tol_boundary: f64,
) -> Result<BoundaryPoint> {
    let x = newton_to_boundary(rho, x0, tol_boundary)?;
    boundary_point(rho, &x, DEFAULT_EPS_LEVI)
}

/// `L_ρ(X, Y)(p) = Σ H_{jk} X_j Ȳ_k`.
pub fn levi_form<F: ScalarField + ?Sized>(
    rho: &F,
    p: &[f64],
    x: &[Complex64],
    y: &[Complex64],
) -> Result<Complex64> {
    let d = levi_data(rho, p)?;
    check_len(d.n(), x.len())?;
    check_len(d.n(), y.len())?;
    Ok(d.levi(x, y))
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension { expected, got });
    }
    Ok(())
}

/// Classification and smallest restricted eigenvalue at `p`.
pub fn classify<F: ScalarField + ?Sized>(
    rho: &F,
    p: &[f64],
    eps_levi: f64,
) -> Result<(Classification, f64)> {
    let d = levi_data(rho, p)?;
    let frame = tangent_frame(&d)?;
    Ok(classify_levi(&d, &frame, eps_levi))
}

/// `Λ(x) = L_ρ(L(x), L(x))` where `L(x)` is `l` with its `N_ρ(x)` component
/// removed.
pub fn levi_along_extension<F: ScalarField + ?Sized>(
    rho: &F,
    l: &[Complex64],
    x: &[f64],
) -> Result<f64> {
    let d = levi_data(rho, x)?;
    let lx = project_tangent(&d, l)?;
    Ok(d.levi(&lx, &lx).re)
}

/// `N L_ρ(L,L)` at a weakly pseudoconvex boundary point, as half the
/// derivative of `Λ` along the real unit normal `N + N̄`. The returned
/// indicator is scaled by the same half.
pub fn normal_derivative_levi<F: ScalarField + ?Sized>(
    rho: &F,
    p: &[f64],
    l: &[Complex64],
    fd: FdConfig,
) -> Result<FdEstimate> {
    let d = levi_data(rho, p)?;
    check_len(d.n(), l.len())?;
    let direction = real_unit_normal(&d)?;
    let e = normal_third_derivative(|x| levi_along_extension(rho, l, x), p, &direction, fd)?;
    Ok(FdEstimate {
        value: 0.5 * e.value,
        indicator: 0.5 * e.indicator,
    })
}
