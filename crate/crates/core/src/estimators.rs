//! Sampled certification of strict plurisubharmonicity and bisection for
//! the inner (Diederich–Fornæss) and outer (Steinness) exponents of a given
//! defining function, plus the determinant test and the SSNB constant.
//!
//! For `f = −(−ρ)^η` inside and `f = ρ^η` outside the complex Hessian is
//! `η|ρ|^{η−1} (H + κ ∂ρ ⊗ ∂̄ρ)` with `κ = (1−η)/(−ρ)` resp. `(η−1)/ρ`.
//! Margins are the smallest eigenvalue of the bracket, which has the same
//! sign as the Hessian of `f` without the vanishing prefactor.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{complex_normal, project_tangent, restricted_levi_matrix, tangent_frame};
use crate::jets::{levi_data, to_complex, LeviData, ScalarField};
use crate::linalg::hermitian_eigen;
use crate::sampling::Side;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Vec<Complex64>,
    pub eigenvector: Vec<Complex64>,
    pub margin: f64,
}

/// Grid for exponent bisection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub step: f64,
    /// Largest outer exponent tried.
    pub eta_max: f64,
    /// Margins at or below this count as uncertified.
    pub floor: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            eta_max: 4.0,
            floor: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub side: Side,
    pub eta: f64,
    pub certified: bool,
    pub min_margin: f64,
    pub witness: Option<Witness>,
    pub samples_used: usize,
    pub shell: (f64, f64),
}

/// Smallest eigenvalue and eigenvector of `X ↦ Σ M_{jk} X_j X̄_k`.
fn min_eigen(m: &DMatrix<Complex64>) -> (f64, Vec<Complex64>) {
    // Eigenvectors of Mᵀ are the extremisers of the form above.
    let pairs = hermitian_eigen(&m.transpose());
    pairs
        .into_iter()
        .next()
        .unwrap_or((f64::INFINITY, Vec::new()))
}

/// Minimum over `points` of the smallest complex-Hessian eigenvalue of
/// `field`, with the worst point. Points are evaluated in parallel and
/// reduced in input order.
pub fn psh_margin<F: ScalarField + ?Sized>(
    field: &F,
    points: &[Vec<f64>],
) -> Result<(f64, Option<Witness>)> {
    let per: Vec<(f64, Vec<Complex64>)> = points
        .par_iter()
        .map(|x| levi_data(field, x).map(|d| min_eigen(&d.mixed_hess)))
        .collect::<Result<_>>()?;
    Ok(reduce_min(points, per))
}

fn reduce_min(points: &[Vec<f64>], per: Vec<(f64, Vec<Complex64>)>) -> (f64, Option<Witness>) {
    let mut best: Option<(usize, f64, Vec<Complex64>)> = None;
    for (i, (m, v)) in per.into_iter().enumerate() {
        if best.as_ref().is_none_or(|b| m < b.1) {
            best = Some((i, m, v));
        }
    }
    match best {
        None => (f64::INFINITY, None),
        Some((i, m, v)) => (
            m,
            Some(Witness {
                point: to_complex(&points[i]),
                eigenvector: v,
                margin: m,
            }),
        ),
    }
}

/// `H + κ ∂ρ ⊗ ∂̄ρ` for the exponent `eta` on `side`.
fn powered_bracket(d: &LeviData, side: Side, eta: f64) -> DMatrix<Complex64> {
    let kappa = match side {
        Side::Inner => (1.0 - eta) / (-d.value),
        Side::Outer => (eta - 1.0) / d.value,
    };
    let g = &d.holo_grad;
    DMatrix::from_fn(d.n(), d.n(), |j, k| {
        d.mixed_hess[(j, k)] + kappa * g[j] * g[k].conj()
    })
}

struct Shell {
    points: Vec<Vec<f64>>,
    data: Vec<LeviData>,
}

impl Shell {
    fn new<F: ScalarField + ?Sized>(rho: &F, points: &[Vec<f64>], side: Side) -> Result<Self> {
        let data: Vec<LeviData> = points
            .par_iter()
            .map(|x| levi_data(rho, x))
            .collect::<Result<_>>()?;
        for (x, d) in points.iter().zip(&data) {
            let ok = match side {
                Side::Inner => d.value < 0.0,
                Side::Outer => d.value > 0.0,
            };
            if !ok {
                return Err(invalid(
                    "shell",
                    format!("point {x:?} has rho = {} on the wrong side", d.value),
                ));
            }
        }
        Ok(Self {
            points: points.to_vec(),
            data,
        })
    }

    fn margin(&self, side: Side, eta: f64) -> (f64, Option<Witness>) {
        let per: Vec<(f64, Vec<Complex64>)> = self
            .data
            .par_iter()
            .map(|d| min_eigen(&powered_bracket(d, side, eta)))
            .collect();
        reduce_min(&self.points, per)
    }

    fn depths(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
                (lo.min(d.value.abs()), hi.max(d.value.abs()))
            })
    }
}

/// Normalized margin of `−(−ρ)^η` (inner) or `ρ^η` (outer) over `points`.
pub fn exponent_margin<F: ScalarField + ?Sized>(
    rho: &F,
    points: &[Vec<f64>],
    side: Side,
    eta: f64,
) -> Result<(f64, Option<Witness>)> {
    Ok(Shell::new(rho, points, side)?.margin(side, eta))
}

/// Bisection on the grid `{k·step}` for the extreme certified exponent:
/// the largest in `(0,1)` inside, the smallest in `(1, eta_max]` outside.
/// Margins are monotone in `η`, which makes the bisection exact on the grid.
fn bisect_exponent<F: ScalarField + ?Sized>(
    rho: &F,
    points: &[Vec<f64>],
    side: Side,
    grid: GridConfig,
) -> Result<ExponentEstimate> {
    if !(grid.step > 0.0 && grid.step < 1.0) {
        return Err(invalid("grid", "step must lie in (0, 1)"));
    }
    if points.is_empty() {
        return Err(invalid("shell", "no sample points"));
    }
    let shell = Shell::new(rho, points, side)?;
    // Index 0 is the hardest grid value (closest to 1), `count − 1` the easiest.
    let count = match side {
        Side::Inner => (1.0 / grid.step).round() as usize - 1,
        Side::Outer => ((grid.eta_max - 1.0) / grid.step + 1e-9).floor() as usize,
    };
    if count == 0 {
        return Err(invalid("grid", "empty exponent grid"));
    }
    let eta_at = |i: usize| match side {
        Side::Inner => (count - i) as f64 * grid.step,
        Side::Outer => 1.0 + (i + 1) as f64 * grid.step,
    };
    let estimate = |i: usize, certified: bool, (m, w): (f64, Option<Witness>)| ExponentEstimate {
        side,
        eta: eta_at(i),
        certified,
        min_margin: m,
        witness: w,
        samples_used: points.len(),
        shell: shell.depths(),
    };
    let passes = |r: &(f64, Option<Witness>)| r.0 > grid.floor;

    let easiest = shell.margin(side, eta_at(count - 1));
    if !passes(&easiest) {
        return Ok(estimate(count - 1, false, easiest));
    }
    let hardest = shell.margin(side, eta_at(0));
    if passes(&hardest) {
        return Ok(estimate(0, true, hardest));
    }
    let (mut bad, mut good) = (0usize, count - 1);
    let mut good_result = easiest;
    while good - bad > 1 {
        let mid = (bad + good) / 2;
        let r = shell.margin(side, eta_at(mid));
        if passes(&r) {
            good = mid;
            good_result = r;
        } else {
            bad = mid;
        }
    }
    Ok(estimate(good, true, good_result))
}

/// Largest grid `η ∈ (0,1)` with `−(−ρ)^η` strictly psh at every inner
/// shell point.
pub fn df_exponent_lower<F: ScalarField + ?Sized>(
    rho: &F,
    points: &[Vec<f64>],
    grid: GridConfig,
) -> Result<ExponentEstimate> {
    bisect_exponent(rho, points, Side::Inner, grid)
}

/// Smallest grid `η > 1` with `ρ^η` strictly psh at every outer shell point.
pub fn steinness_exponent_upper<F: ScalarField + ?Sized>(
    rho: &F,
    points: &[Vec<f64>],
    grid: GridConfig,
) -> Result<ExponentEstimate> {
    bisect_exponent(rho, points, Side::Outer, grid)
}

/// `|L_ρ(L,N)|² − L_ρ(L,L)(L_ρ(N,N) + (η₂−1)|Nρ|²/ρ)` at an outer point,
/// with `L` projected so that `Lρ = 0` there. Negative means `ρ^{η₂}` is
/// strictly psh on `span(L, N)`. For `‖L‖ < 1e−12` the value is the
/// negated normal term, so the sign convention is the same.
pub fn determinant_condition<F: ScalarField + ?Sized>(
    rho: &F,
    z: &[f64],
    l: &[Complex64],
    eta2: f64,
) -> Result<f64> {
    let d = levi_data(rho, z)?;
    if !(d.value > 0.0) {
        return Err(invalid(
            "z",
            format!("rho(z) = {} must be positive", d.value),
        ));
    }
    if l.len() != d.n() {
        return Err(Error::Dimension {
            expected: d.n(),
            got: l.len(),
        });
    }
    let n = complex_normal(&d)?;
    let n_rho = d.apply(&n);
    let normal_term = d.levi(&n, &n).re + (eta2 - 1.0) * n_rho.norm_sqr() / d.value;
    let lp = project_tangent(&d, l)?;
    if lp.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() < 1e-12 {
        return Ok(-normal_term);
    }
    Ok(d.levi(&lp, &n).norm_sqr() - d.levi(&lp, &lp).re * normal_term)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsnbConstant {
    /// `inf L_ρ(L,L)/(ρ‖L‖²)` over outer samples, `‖L‖² = g(L,L)`.
    pub c_best: f64,
    /// `sup |L_ρ(L,N)|²/‖∇ρ‖²` over the supplied weak points and unit tangent `L`.
    pub m: f64,
    /// `8M/c + 1`, or `None` when `c ≤ 0`.
    pub eta2_bound: Option<f64>,
}

/// The constants of the strong Stein neighbourhood argument. `sigma` is
/// caller-supplied (typically the weakly pseudoconvex set).
pub fn ssnb_constant<F: ScalarField + ?Sized>(
    rho: &F,
    outer: &[Vec<f64>],
    sigma: &[Vec<f64>],
) -> Result<SsnbConstant> {
    let ratios: Vec<f64> = outer
        .par_iter()
        .map(|x| -> Result<f64> {
            let d = levi_data(rho, x)?;
            if !(d.value > 0.0) {
                return Err(invalid(
                    "outer",
                    format!("rho = {} at {x:?} is not positive", d.value),
                ));
            }
            let frame = tangent_frame(&d)?;
            let lmin = min_eigen(&restricted_levi_matrix(&d, &frame).transpose()).0;
            Ok(lmin / (0.5 * d.value))
        })
        .collect::<Result<_>>()?;
    let c_best = ratios.into_iter().fold(f64::INFINITY, f64::min);
    let ms: Vec<f64> = sigma
        .par_iter()
        .map(|x| -> Result<f64> {
            let d = levi_data(rho, x)?;
            let n = complex_normal(&d)?;
            let frame = tangent_frame(&d)?;
            // sup over unit L of |L_ρ(L,N)|² is the squared norm of the
            // functional's coefficients in the orthonormal frame.
            let s: f64 = frame.iter().map(|t| d.levi(t, &n).norm_sqr()).sum();
            Ok(s / d.grad_norm().powi(2))
        })
        .collect::<Result<_>>()?;
    let m = ms.into_iter().fold(0.0, f64::max);
    let eta2_bound = (c_best > 0.0 && c_best.is_finite()).then(|| 8.0 * m / c_best + 1.0);
    Ok(SsnbConstant {
        c_best,
        m,
        eta2_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::make_ball;
    use crate::jets::{FnField, Jet2};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn norm_squared_margin_is_one() {
        let f = FnField::new(2, |v: &[Jet2]| {
            Ok(v.iter()
                .map(|x| x.square())
                .fold(Jet2::constant(0.0, 4), |a, b| a + b))
        });
        let pts = vec![vec![0.1, 0.2, -0.3, 0.4], vec![2.0, 0.0, 0.0, -1.0]];
        let (m, w) = psh_margin(&f, &pts).unwrap();
        assert!((m - 1.0).abs() < 1e-14);
        assert!(w.is_some());
    }

    #[test]
    fn pluriharmonic_margin_is_zero() {
        // Re(z²) = x² − y²
        let f = FnField::new(1, |v: &[Jet2]| Ok(v[0].square() - v[1].square()));
        let (m, _) = psh_margin(&f, &[vec![0.3, -0.7]]).unwrap();
        assert!(m.abs() < 1e-15);
    }

    #[test]
    fn root_of_ball_defining_function() {
        // f = −(1 − |z|²)^{1/2} in one variable at z = 0.9:
        // f_{zz̄} = ½(1−r²)^{−1/2} + ¼ r²(1−r²)^{−3/2}.
        let b = make_ball(1).unwrap();
        let f = FnField::new(1, move |v: &[Jet2]| {
            let r = b.eval(v)?;
            Ok(-(-r).powf(0.5)?)
        });
        let (m, _) = psh_margin(&f, &[vec![0.9, 0.0]]).unwrap();
        let s = 1.0 - 0.81f64;
        let exact = 0.5 * s.powf(-0.5) + 0.25 * 0.81 * s.powf(-1.5);
        assert!(m > 0.0);
        assert!((m - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn ball_determinant_value() {
        let b = make_ball(2).unwrap();
        let v = determinant_condition(&b, &[1.1, 0.0, 0.0, 0.0], &[c(0.0, 0.0), c(1.0, 0.0)], 2.0)
            .unwrap();
        let exact = -(1.0 + 1.21 / 0.21);
        assert!((v - exact).abs() < 1e-12, "{v}");
    }

    #[test]
    fn degenerate_tangent_returns_normal_margin() {
        let b = make_ball(2).unwrap();
        let v = determinant_condition(&b, &[1.1, 0.0, 0.0, 0.0], &[c(0.0, 0.0); 2], 2.0).unwrap();
        assert!((v + (1.0 + 1.21 / 0.21)).abs() < 1e-12);
        assert!(determinant_condition(&b, &[0.5, 0.0, 0.0, 0.0], &[c(0.0, 0.0); 2], 2.0).is_err());
    }

    #[test]
    fn ball_ssnb_constant() {
        let b = make_ball(2).unwrap();
        let outer = vec![vec![1.01, 0.0, 0.0, 0.0], vec![0.0, 0.0, 0.6, 0.81]];
        let sigma = vec![vec![1.0, 0.0, 0.0, 0.0]];
        let s = ssnb_constant(&b, &outer, &sigma).unwrap();
        assert!(s.c_best > 0.0);
        assert_eq!(s.m, 0.0);
        assert_eq!(s.eta2_bound, Some(1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn determinant_sign_matches_two_plane_eigenvalue(
            x in prop::collection::vec(-1.0..1.0f64, 4),
            lift in 1e-3..0.3f64,
            lr in -1.0..1.0f64, li in -1.0..1.0f64, eta2 in 1.05..4.0f64,
        ) {
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assume!(nx > 1e-2);
            let b = make_ball(2).unwrap();
            // Perturb the ball into a non-convex but pseudoconvex-near-boundary field.
            let rho = FnField::new(2, move |v: &[Jet2]| {
                let base = b.eval(v)?;
                Ok(base + (&v[0] * &v[2]).scale(0.4) - v[1].square().scale(0.3))
            });
            let z: Vec<f64> = x.iter().map(|v| v / nx * (1.0 + lift)).collect();
            let d = levi_data(&rho, &z).unwrap();
            prop_assume!(d.value > 1e-3);
            let l = [c(lr, li), c(li, -lr)];
            let val = determinant_condition(&rho, &z, &l, eta2).unwrap();
            let lp = project_tangent(&d, &l).unwrap();
            prop_assume!(lp.iter().map(|c| c.norm_sqr()).sum::<f64>() > 1e-6);
            let n = complex_normal(&d).unwrap();
            let basis = [lp.clone(), n];
            let m = powered_bracket(&d, Side::Outer, eta2);
            let form = |a: &[Complex64], bb: &[Complex64]| {
                let mut s = c(0.0, 0.0);
                for j in 0..2 { for k in 0..2 { s += m[(j, k)] * a[j] * bb[k].conj(); } }
                s
            };
            let g = DMatrix::from_fn(2, 2, |i, j| form(&basis[j], &basis[i]));
            let lam = hermitian_eigen(&g)[0].0;
            let det = g[(0, 0)].re * g[(1, 1)].re - g[(0, 1)].norm_sqr();
            prop_assume!(det.abs() > 1e-8 * (1.0 + g[(1, 1)].re.abs()));
            prop_assert_eq!(val < 0.0 && d.levi(&lp, &lp).re > 0.0, lam > 0.0);
        }
    }
}
