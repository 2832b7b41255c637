//! Boundary criteria on the weakly pseudoconvex set: the normal-derivative
//! quantity `Q`, its weighted form for `ρ e^ψ`, the residuals of the
//! weighting identities and the linear weight that cancels `L_ρ(L,N)`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domains::{weight, DefiningFunction};
use crate::error::{invalid, Error, Result};
use crate::geometry::{complex_normal, normal_derivative_levi, project_tangent, BoundaryPoint};
use crate::jets::{
    complex_field_derivatives, jet_dim, levi_data, CJet, ComplexScalarField, FdConfig, Jet2,
    ScalarField,
};

/// A weight `ψ` for `ρ e^ψ`. Complex weights only enter through their
/// derivatives (`Lψ`, `L_ψ(L,L)`), as in the linear construction.
#[derive(Clone)]
pub enum Psi {
    Zero,
    Real(Arc<dyn ScalarField>),
    Complex(Arc<dyn ComplexScalarField>),
}

impl std::fmt::Debug for Psi {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Psi::Zero => "Psi::Zero",
            Psi::Real(_) => "Psi::Real",
            Psi::Complex(_) => "Psi::Complex",
        })
    }
}

impl Psi {
    /// `(∂ψ/∂z_j, ∂²ψ/∂z_j∂z̄_k)` at `p`.
    fn derivatives(&self, n: usize, p: &[f64]) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
        let zero = Complex64::new(0.0, 0.0);
        match self {
            Psi::Zero => Ok((vec![zero; n], DMatrix::from_element(n, n, zero))),
            Psi::Real(f) => {
                let d = levi_data(f.as_ref(), p)?;
                Ok((d.holo_grad, d.mixed_hess))
            }
            Psi::Complex(f) => complex_field_derivatives(f.as_ref(), p),
        }
    }
}

/// The pieces of `Q` at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionTerms {
    pub levi_ln: Complex64,
    pub grad_norm: f64,
    /// `N L_ρ(L,L)`
    pub normal_derivative: f64,
    /// `|L_ρ(L,N)|² / ‖∇ρ‖²`
    pub term_ln: f64,
    /// `N L_ρ(L,L) / ‖∇ρ‖`
    pub term_nll: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_psi: Option<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levi_psi: Option<f64>,
}

impl CriterionTerms {
    /// `|L_ρ(L,N)|²/‖∇ρ‖² + ½ N L_ρ(L,L)/‖∇ρ‖`
    pub fn combined(&self) -> f64 {
        self.term_ln + 0.5 * self.term_nll
    }

    pub fn q(&self, eta2: f64) -> f64 {
        self.term_ln / (eta2 - 1.0) - 0.5 * self.term_nll
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionSample {
    pub point: BoundaryPoint,
    pub l: Vec<Complex64>,
    pub eta2: f64,
    pub q: f64,
    pub terms: CriterionTerms,
    pub psi_kind: String,
}

fn check_eta2(eta2: f64) -> Result<()> {
    if !(eta2 > 1.0) {
        return Err(invalid("eta2", format!("eta2 = {eta2} must exceed 1")));
    }
    Ok(())
}

/// Unweighted terms for `ρ` at `p` along `L`.
pub fn criterion_terms<F: ScalarField + ?Sized>(
    rho: &F,
    p: &[f64],
    l: &[Complex64],
    fd: FdConfig,
) -> Result<CriterionTerms> {
    let d = levi_data(rho, p)?;
    if l.len() != d.n() {
        return Err(Error::Dimension {
            expected: d.n(),
            got: l.len(),
        });
    }
    let normal = complex_normal(&d)?;
    let levi_ln = d.levi(l, &normal);
    let grad_norm = d.grad_norm();
    let normal_derivative = normal_derivative_levi(rho, p, l, fd)?.value;
    Ok(CriterionTerms {
        levi_ln,
        grad_norm,
        normal_derivative,
        term_ln: levi_ln.norm_sqr() / (grad_norm * grad_norm),
        term_nll: normal_derivative / grad_norm,
        l_psi: None,
        levi_psi: None,
    })
}

/// `Q = |L_ρ(L,N)|²/((η₂−1)‖∇ρ‖²) − ½ N L_ρ(L,L)/‖∇ρ‖`; the criterion holds
/// at `p` iff `Q ≤ 0`.
pub fn criterion_q<F: ScalarField + ?Sized>(
    rho: &F,
    p: &[f64],
    l: &[Complex64],
    eta2: f64,
) -> Result<f64> {
    check_eta2(eta2)?;
    Ok(criterion_terms(rho, p, l, FdConfig::default())?.q(eta2))
}

/// Terms for `ρ` weighted by `ψ`, with `Lψ` and `L_ψ(L,L)` filled in.
pub fn weighted_terms<F: ScalarField + ?Sized>(
    rho: &F,
    psi: &Psi,
    p: &[f64],
    l: &[Complex64],
    fd: FdConfig,
) -> Result<CriterionTerms> {
    let mut t = criterion_terms(rho, p, l, fd)?;
    let (grad, mixed) = psi.derivatives(l.len(), p)?;
    let l_psi: Complex64 = l.iter().zip(&grad).map(|(a, b)| a * b).sum();
    let mut levi_psi = Complex64::new(0.0, 0.0);
    for j in 0..l.len() {
        for k in 0..l.len() {
            levi_psi += mixed[(j, k)] * l[j] * l[k].conj();
        }
    }
    t.l_psi = Some(l_psi);
    t.levi_psi = Some(levi_psi.re);
    Ok(t)
}

/// Weighted criterion
/// `(1/(η₂−1) + 1)|A + ½Lψ|² − |A|² − ½ N L_ρ(L,L)/‖∇ρ‖ − ¼ L_ψ(L,L)`
/// with `A = L_ρ(L,N)/‖∇ρ‖`, evaluated from terms carrying the weight.
pub fn weighted_q_from_terms(t: &CriterionTerms, eta2: f64) -> f64 {
    let a = t.levi_ln / t.grad_norm;
    let shifted = (a + 0.5 * t.l_psi.unwrap_or_default()).norm_sqr();
    shifted / (eta2 - 1.0) + (shifted - t.term_ln)
        - 0.5 * t.term_nll
        - 0.25 * t.levi_psi.unwrap_or(0.0)
}

pub fn weighted_q<F: ScalarField + ?Sized>(
    rho: &F,
    psi: &Psi,
    p: &[f64],
    l: &[Complex64],
    eta2: f64,
) -> Result<f64> {
    check_eta2(eta2)?;
    if matches!(psi, Psi::Zero) {
        return criterion_q(rho, p, l, eta2);
    }
    let t = weighted_terms(rho, psi, p, l, FdConfig::default())?;
    Ok(weighted_q_from_terms(&t, eta2))
}

/// A full CSV/JSON row for one `(p, L, η₂)` triple.
pub fn criterion_sample<F: ScalarField + ?Sized>(
    rho: &F,
    psi: &Psi,
    psi_kind: &str,
    point: &BoundaryPoint,
    l: &[Complex64],
    eta2: f64,
    fd: FdConfig,
) -> Result<CriterionSample> {
    check_eta2(eta2)?;
    let p = point.real_point();
    let (terms, q) = match psi {
        Psi::Zero => {
            let t = criterion_terms(rho, &p, l, fd)?;
            (t, t.q(eta2))
        }
        _ => {
            let t = weighted_terms(rho, psi, &p, l, fd)?;
            (t, weighted_q_from_terms(&t, eta2))
        }
    };
    Ok(CriterionSample {
        point: point.clone(),
        l: l.to_vec(),
        eta2,
        q,
        terms,
        psi_kind: psi_kind.to_string(),
    })
}

/// `(r1, r2)`: gaps in the two identities relating `ρ̃ = ρe^ψ` to `ρ` on
/// `Σ_L`. Left sides come from `ρ̃` alone, right sides from `ρ` and `ψ`.
pub fn keylem_residuals(
    rho: &DefiningFunction,
    psi: Arc<dyn ScalarField>,
    p: &[f64],
    l: &[Complex64],
    fd: FdConfig,
) -> Result<(f64, f64)> {
    let tilde = weight(rho, psi.clone())?;
    let dt = levi_data(&tilde, p)?;
    let lt = project_tangent(&dt, l)?;
    let nt = complex_normal(&dt)?;
    let left1 = dt.levi(&lt, &nt) / dt.grad_norm();
    let left2 = normal_derivative_levi(&tilde, p, &lt, fd)?.value / dt.grad_norm();

    let base = criterion_terms(rho, p, l, fd)?;
    let dpsi = levi_data(psi.as_ref(), p)?;
    let l_psi: Complex64 = l.iter().zip(&dpsi.holo_grad).map(|(a, b)| a * b).sum();
    let levi_psi = dpsi.levi(l, l).re;
    let a = base.levi_ln / base.grad_norm;
    let right1 = a + 0.5 * l_psi;
    let right2 =
        base.term_nll + 0.5 * levi_psi - 0.5 * l_psi.norm_sqr() - 2.0 * (a * l_psi.conj()).re;
    Ok(((left1 - right1).norm(), (left2 - right2).abs()))
}

/// `ψ(z) = Σ b_j z_j`, holomorphic and linear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearPsi {
    pub b: Vec<Complex64>,
}

impl ComplexScalarField for LinearPsi {
    fn complex_dim(&self) -> usize {
        self.b.len()
    }

    fn eval_complex(&self, vars: &[Jet2]) -> Result<CJet> {
        let mut acc = CJet::constant(0.0, 0.0, jet_dim(vars));
        for (j, b) in self.b.iter().enumerate() {
            let zj = CJet::coordinate(vars, j);
            acc = &acc + &zj.mul_const(b.re, b.im);
        }
        Ok(acc)
    }
}

/// `b_j = −2 Σ_k H_{jk}(p₀) ∂ρ/∂z_k(p₀) / (s ‖∇ρ‖)`, which makes
/// `Lψ(p₀) = −2 L_ρ(L,N)(p₀)/‖∇ρ‖` for every tangent `L`.
pub fn linear_psi<F: ScalarField + ?Sized>(rho: &F, p0: &[f64]) -> Result<LinearPsi> {
    let d = levi_data(rho, p0)?;
    let s = d.holo_grad_norm();
    let norm = d.grad_norm();
    if !(s > 0.0) {
        return Err(Error::VanishingGradient(p0.to_vec()));
    }
    let n = d.n();
    let b = (0..n)
        .map(|j| {
            let acc: Complex64 = (0..n).map(|k| d.mixed_hess[(j, k)] * d.holo_grad[k]).sum();
            -2.0 * acc / (s * norm)
        })
        .collect();
    Ok(LinearPsi { b })
}
