//! A defining function of a convex body that is strictly convex off the
//! boundary, built from the gauge `σ = f − 1` with smooth maxima of `σ`
//! and quadratics, truncated after `K` collar terms.
//!
//! Bodies live in ℝ² or ℝ⁴ and are described radially: `r(u) > 0` is the
//! boundary radius in the unit direction `u`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::jets::{evaluate_jet, jet_dim, Jet2, ScalarField};
use crate::linalg::symmetric_min_eigenvalue;
use crate::sampling::QuasiRandom;

/// `χ_ε`: `|t|` for `|t| ≥ ε`, and on `|t| < ε` the even function with
/// `χ'' = (15/(8ε))(1 − (t/ε)²)²`, matched in value and slope at `±ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothMaxProfile {
    pub epsilon: f64,
}

impl SmoothMaxProfile {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(invalid(
                "epsilon",
                format!("epsilon = {epsilon} must be positive"),
            ));
        }
        Ok(Self { epsilon })
    }

    /// `(χ, χ', χ'')` at `t`.
    pub fn chi(&self, t: f64) -> (f64, f64, f64) {
        let e = self.epsilon;
        if t.abs() >= e {
            return (t.abs(), t.signum(), 0.0);
        }
        let k = 15.0 / (8.0 * e);
        let s = t / e;
        let (t2, e2) = (t * t, e * e);
        let chi = 5.0 * e / 16.0
            + k * (t2 / 2.0 - t2 * t2 / (6.0 * e2) + t2 * t2 * t2 / (30.0 * e2 * e2));
        let d1 = k * (t - 2.0 * t2 * t / (3.0 * e2) + t2 * t2 * t / (5.0 * e2 * e2));
        let d2 = k * (1.0 - s * s).powi(2);
        (chi, d1, d2)
    }
}

/// `(x + y + χ_ε(x − y))/2`, equal to `max(x, y)` when `|x − y| ≥ ε`.
pub fn smooth_max(x: f64, y: f64, profile: &SmoothMaxProfile) -> f64 {
    if (x - y).abs() >= profile.epsilon {
        return x.max(y);
    }
    0.5 * (x + y + profile.chi(x - y).0)
}

/// [`smooth_max`] on jets.
pub fn smooth_max_jet(x: &Jet2, y: &Jet2, profile: &SmoothMaxProfile) -> Jet2 {
    let d = x.value() - y.value();
    if d >= profile.epsilon {
        return x.clone();
    }
    if -d >= profile.epsilon {
        return y.clone();
    }
    let (c0, c1, c2) = profile.chi(d);
    let chi = (x - y).chain(c0, c1, c2);
    (x + y + chi).scale(0.5)
}

type Radial = dyn Fn(&[Jet2]) -> Result<Jet2> + Send + Sync;

/// Body star-shaped about 0 with radial function `r(u)`.
#[derive(Clone)]
pub struct StarBody {
    pub label: String,
    n_real: usize,
    radial: Arc<Radial>,
}

impl fmt::Debug for StarBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StarBody")
            .field("label", &self.label)
            .field("n_real", &self.n_real)
            .finish()
    }
}

/// Body descriptor used by run configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BodySpec {
    Disc { radius: f64 },
    Ellipse { axes: [f64; 2] },
    Ellipsoid { axes: Vec<f64> },
}

impl BodySpec {
    pub fn build(&self) -> Result<StarBody> {
        match self {
            BodySpec::Disc { radius } => StarBody::ellipsoid(&[*radius, *radius]),
            BodySpec::Ellipse { axes } => StarBody::ellipsoid(axes),
            BodySpec::Ellipsoid { axes } => StarBody::ellipsoid(axes),
        }
    }
}

impl StarBody {
    pub fn new(label: impl Into<String>, n_real: usize, radial: Arc<Radial>) -> Result<Self> {
        if n_real != 2 && n_real != 4 {
            return Err(invalid(
                "n_real",
                format!("bodies live in R^2 or R^4, got R^{n_real}"),
            ));
        }
        Ok(Self {
            label: label.into(),
            n_real,
            radial,
        })
    }

    /// `r(u) = (Σ u_i²/a_i²)^{−1/2}`
    pub fn ellipsoid(axes: &[f64]) -> Result<Self> {
        if let Some(a) = axes.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(invalid("axes", format!("axis {a} is not positive")));
        }
        let inv: Vec<f64> = axes.iter().map(|a| 1.0 / (a * a)).collect();
        let label = format!("ellipsoid{axes:?}");
        Self::new(
            label,
            axes.len(),
            Arc::new(move |u: &[Jet2]| {
                let mut acc = Jet2::constant(0.0, jet_dim(u));
                for (ui, w) in u.iter().zip(&inv) {
                    acc = acc + ui.square().scale(*w);
                }
                acc.powf(-0.5)
            }),
        )
    }

    pub fn n_real(&self) -> usize {
        self.n_real
    }

    pub fn radius(&self, u: &[f64]) -> Result<f64> {
        let vars: Vec<Jet2> = u.iter().map(|&v| Jet2::constant(v, 0)).collect();
        let r = (self.radial)(&vars)?.value();
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid("radial", format!("r = {r} in direction {u:?}")));
        }
        Ok(r)
    }

    /// `σ(x) = ‖x‖/r(x/‖x‖) − 1`, and `−1` (with zero derivatives) at 0.
    pub fn sigma_jet(&self, x: &[Jet2]) -> Result<Jet2> {
        let m = jet_dim(x);
        let mut n2 = Jet2::constant(0.0, m);
        for xi in x {
            n2 = n2 + xi.square();
        }
        if n2.value() < 1e-200 {
            return Ok(Jet2::constant(-1.0, m));
        }
        let norm = n2.sqrt()?;
        let inv = norm.recip()?;
        let u: Vec<Jet2> = x.iter().map(|xi| xi * &inv).collect();
        let r = (self.radial)(&u)?;
        Ok(norm.checked_div(&r)? - 1.0)
    }

    /// Boundary point in direction `u` (normalized here).
    pub fn boundary_point(&self, u: &[f64]) -> Result<Vec<f64>> {
        let n = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(n > 0.0) {
            return Err(invalid("direction", "zero direction"));
        }
        let unit: Vec<f64> = u.iter().map(|v| v / n).collect();
        let r = self.radius(&unit)?;
        Ok(unit.iter().map(|v| r * v).collect())
    }

    /// Outward unit normal `∇σ/‖∇σ‖` at `x ≠ 0`.
    pub fn normal(&self, x: &[f64]) -> Result<Vec<f64>> {
        let j = self.sigma_jet(&Jet2::seed(x))?;
        let g = j.grad();
        let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(n > 0.0) {
            return Err(Error::VanishingGradient(x.to_vec()));
        }
        Ok(g.iter().map(|v| v / n).collect())
    }

    /// `count` boundary points: equal angles in ℝ², shifted Halton
    /// Gaussian directions in ℝ⁴.
    pub fn boundary_samples(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        if self.n_real == 2 {
            let q = QuasiRandom::new(1, seed)?;
            let phase = q.point(0)[0] / count.max(1) as f64;
            return (0..count)
                .map(|i| {
                    let th = std::f64::consts::TAU * (i as f64 / count as f64 + phase);
                    self.boundary_point(&[th.cos(), th.sin()])
                })
                .collect();
        }
        let q = QuasiRandom::new(4, seed)?;
        (0..count)
            .map(|i| {
                let u = q.point(i);
                let g: Vec<f64> = u
                    .chunks_exact(2)
                    .flat_map(|c| {
                        let r = (-2.0 * c[0].max(1e-300).ln()).sqrt();
                        let t = std::f64::consts::TAU * c[1];
                        [r * t.cos(), r * t.sin()]
                    })
                    .collect();
                self.boundary_point(&g)
            })
            .collect()
    }

    /// Largest `σ` at midpoints of `pairs` boundary pairs; `≤ 0` up to
    /// rounding for a convex body.
    pub fn convexity_defect(&self, pairs: usize, seed: u64) -> Result<f64> {
        let pts = self.boundary_samples(2 * pairs, seed)?;
        let q = QuasiRandom::new(2, seed ^ 0xC0DE)?;
        let n = pts.len();
        let mut worst = f64::NEG_INFINITY;
        for i in 0..pairs {
            let u = q.point(i);
            let a = &pts[(u[0] * n as f64) as usize % n];
            let b = &pts[(u[1] * n as f64) as usize % n];
            let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
            worst = worst.max(minkowski_sigma(self, &mid)?);
        }
        Ok(worst)
    }
}

/// `σ = f − 1` with `f` the Minkowski gauge.
pub fn minkowski_sigma(body: &StarBody, x: &[f64]) -> Result<f64> {
    if x.len() != body.n_real {
        return Err(Error::Dimension {
            expected: body.n_real,
            got: x.len(),
        });
    }
    let vars: Vec<Jet2> = x.iter().map(|&v| Jet2::constant(v, 0)).collect();
    Ok(body.sigma_jet(&vars)?.value())
}

/// Signed distance to `∂Ω`: nearest point of a dense boundary sample,
/// refined by projected gradient descent of `‖x − r(u)u‖²` over unit `u`.
#[derive(Clone, Debug)]
pub struct DistanceOracle {
    boundary: Vec<Vec<f64>>,
}

impl DistanceOracle {
    pub fn new(body: &StarBody, samples: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            boundary: body.boundary_samples(samples, seed)?,
        })
    }

    pub fn signed_distance(&self, body: &StarBody, x: &[f64]) -> Result<f64> {
        let dist2 = |p: &[f64]| -> f64 { p.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum() };
        let start = self
            .boundary
            .iter()
            .min_by(|a, b| dist2(a).total_cmp(&dist2(b)))
            .ok_or_else(|| invalid("boundary", "no boundary samples"))?;
        let norm = start.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut u: Vec<f64> = start.iter().map(|v| v / norm).collect();
        // D(u) and its gradient along the sphere
        let objective = |u: &[f64]| -> Result<(f64, Vec<f64>)> {
            let vars = Jet2::seed(u);
            let r = (body.radial)(&vars)?;
            let mut d = Jet2::constant(0.0, u.len());
            for (ui, xi) in vars.iter().zip(x) {
                d = d + (&r * ui).offset(-xi).square();
            }
            let g = d.grad();
            let radial: f64 = g.iter().zip(u).map(|(a, b)| a * b).sum();
            Ok((
                d.value(),
                g.iter().zip(u).map(|(a, b)| a - radial * b).collect(),
            ))
        };
        let (mut f, mut g) = objective(&u)?;
        let mut step = 0.1;
        for _ in 0..200 {
            let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gn < 1e-15 {
                break;
            }
            let mut moved = false;
            while step > 1e-18 {
                let mut v: Vec<f64> = u.iter().zip(&g).map(|(a, b)| a - step * b / gn).collect();
                let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                v.iter_mut().for_each(|a| *a /= n);
                let (fv, gv) = objective(&v)?;
                if fv < f {
                    (u, f, g) = (v, fv, gv);
                    step *= 2.0;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let d = f.max(0.0).sqrt();
        let s = minkowski_sigma(body, x)?;
        Ok(if s < 0.0 { -d } else { d })
    }
}

/// One collar term: `max̃_w(σ, δ₁‖x‖² − δ₂)` inside or
/// `max̃_w(0, σ + δ₁‖x‖² − δ₂)` outside, scaled by `eta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollarTerm {
    pub epsilon: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Smooth-max width, in units of the compared values.
    pub width: f64,
    /// Sampled bound on value and derivatives up to order 2 on the collar.
    pub c: f64,
    pub eta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexifyConfig {
    pub k: usize,
    /// `ε_j = eps0/j`; defaults to half the inradius.
    pub eps0: Option<f64>,
    pub boundary_samples: usize,
    pub seed: u64,
}

impl Default for ConvexifyConfig {
    fn default() -> Self {
        Self {
            k: 4,
            eps0: None,
            boundary_samples: 720,
            seed: 11,
        }
    }
}

/// `ρ = Σ_j η_j ρ_{ε_j} + Σ_j η̃_j ρ̃_{ε_j}`.
#[derive(Clone, Debug)]
pub struct ConvexDefiningFunction {
    pub body: StarBody,
    pub inner: Vec<CollarTerm>,
    pub outer: Vec<CollarTerm>,
}

fn norm2(x: &[Jet2]) -> Jet2 {
    x.iter()
        .fold(Jet2::constant(0.0, jet_dim(x)), |a, b| a + b.square())
}

fn inner_term(body: &StarBody, t: &CollarTerm, x: &[Jet2]) -> Result<Jet2> {
    let q = norm2(x).scale(t.delta1).offset(-t.delta2);
    let s = body.sigma_jet(x)?;
    Ok(smooth_max_jet(&s, &q, &SmoothMaxProfile::new(t.width)?))
}

fn outer_term(body: &StarBody, t: &CollarTerm, x: &[Jet2]) -> Result<Jet2> {
    let q = body.sigma_jet(x)? + norm2(x).scale(t.delta1).offset(-t.delta2);
    let zero = Jet2::constant(0.0, jet_dim(x));
    Ok(smooth_max_jet(&zero, &q, &SmoothMaxProfile::new(t.width)?))
}

impl ConvexDefiningFunction {
    pub fn eval_jet(&self, x: &[Jet2]) -> Result<Jet2> {
        let mut acc = Jet2::constant(0.0, jet_dim(x));
        for t in &self.inner {
            acc = acc + inner_term(&self.body, t, x)?.scale(t.eta);
        }
        for t in &self.outer {
            acc = acc + outer_term(&self.body, t, x)?.scale(t.eta);
        }
        Ok(acc)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let vars: Vec<Jet2> = x.iter().map(|&v| Jet2::constant(v, 0)).collect();
        Ok(self.eval_jet(&vars)?.value())
    }

    /// Smallest eigenvalue of the real Hessian at `x`.
    pub fn min_hessian_eigenvalue(&self, x: &[f64]) -> Result<f64> {
        let j = evaluate_jet(self, x)?;
        let n = x.len();
        Ok(symmetric_min_eigenvalue(&DMatrix::from_row_slice(
            n,
            n,
            j.hess(),
        )))
    }
}

impl ScalarField for ConvexDefiningFunction {
    fn complex_dim(&self) -> usize {
        self.body.n_real / 2
    }
    fn eval(&self, vars: &[Jet2]) -> Result<Jet2> {
        self.eval_jet(vars)
    }
}

/// Largest `|value|`, `|∂_i|`, `|∂_i∂_j|` of `term` over `points`.
fn derivative_bound(
    points: &[Vec<f64>],
    term: impl Fn(&[Jet2]) -> Result<Jet2> + Sync,
) -> Result<f64> {
    let per: Vec<f64> = points
        .par_iter()
        .map(|x| -> Result<f64> {
            let j = term(&Jet2::seed(x))?;
            let m = j
                .grad()
                .iter()
                .chain(j.hess())
                .fold(j.value().abs(), |a, b| a.max(b.abs()));
            Ok(m)
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().fold(0.0, f64::max))
}

/// Points `b + t n(b)` with `t ∈ [−ε, ε]` on five levels.
fn collar_points(boundary: &[(Vec<f64>, Vec<f64>)], eps: f64) -> Vec<Vec<f64>> {
    let levels = [-1.0, -0.5, 0.0, 0.5, 1.0];
    boundary
        .iter()
        .flat_map(|(b, n)| {
            levels.iter().map(move |l| {
                b.iter()
                    .zip(n)
                    .map(|(p, d)| p + l * eps * d)
                    .collect::<Vec<f64>>()
            })
        })
        .collect()
}

/// Builds the truncated defining function with `K` inner and `K` outer
/// collar terms.
pub fn convexify(body: &StarBody, cfg: &ConvexifyConfig) -> Result<ConvexDefiningFunction> {
    if cfg.k < 2 {
        return Err(invalid("k", format!("K = {} must be at least 2", cfg.k)));
    }
    let boundary = body.boundary_samples(cfg.boundary_samples.max(16), cfg.seed)?;
    let defect = body.convexity_defect(cfg.boundary_samples.max(16), cfg.seed)?;
    if defect > 1e-9 {
        return Err(Error::Convexify(format!(
            "body is not convex: a segment midpoint has sigma = {defect:e}"
        )));
    }
    let with_normals: Vec<(Vec<f64>, Vec<f64>)> = boundary
        .iter()
        .map(|b| Ok((b.clone(), body.normal(b)?)))
        .collect::<Result<_>>()?;
    let sq = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let inradius = boundary
        .iter()
        .map(|b| sq(b).sqrt())
        .fold(f64::INFINITY, f64::min);
    let big_m = boundary.iter().map(|b| sq(b)).fold(0.0, f64::max);
    let eps0 = cfg.eps0.unwrap_or(0.5 * inradius);
    if !(eps0 > 0.0 && eps0 < inradius) {
        return Err(invalid(
            "eps0",
            format!("eps0 = {eps0} must lie in (0, inradius = {inradius})"),
        ));
    }

    let mut inner = Vec::with_capacity(cfg.k);
    let mut outer = Vec::with_capacity(cfg.k);
    for j in 1..=cfg.k {
        let eps = eps0 / j as f64;
        let offset = |sign: f64| -> Result<Vec<f64>> {
            with_normals
                .iter()
                .map(|(b, n)| {
                    let x: Vec<f64> = b.iter().zip(n).map(|(p, d)| p + sign * eps * d).collect();
                    minkowski_sigma(body, &x)
                })
                .collect()
        };
        // The maximum of σ on the inner parallel body is attained on its
        // boundary, which lies in {b − εn}; m_ε = 0 since 0 is inside.
        let s_in = offset(-1.0)?.into_iter().fold(f64::NEG_INFINITY, f64::max);
        if !(s_in < 0.0) {
            return Err(Error::Convexify(format!(
                "delta1*M_eps < delta2 < delta1*m_eps + (-S_eps) has no solution at eps = {eps}: S_eps = {s_in}"
            )));
        }
        let delta2 = -s_in / 2.0;
        let delta1 = -s_in / (4.0 * big_m);
        let mut term = CollarTerm {
            epsilon: eps,
            delta1,
            delta2,
            width: -s_in / 8.0,
            c: 0.0,
            eta: 0.0,
        };
        let pts = collar_points(&with_normals, eps);
        term.c = derivative_bound(&pts, |x| inner_term(body, &term, x))?;
        term.eta = 1.0 / (2f64.powi(j as i32) * term.c);
        inner.push(term);

        let s_out = offset(1.0)?.into_iter().fold(f64::INFINITY, f64::min);
        if !(s_out > 0.0) {
            return Err(Error::Convexify(format!(
                "delta1~*M_eps < delta2~ < s_eps has no solution at eps = {eps}: s_eps = {s_out}"
            )));
        }
        let d1 = s_out / (2.0 * big_m);
        let mut term = CollarTerm {
            epsilon: eps,
            delta1: d1,
            delta2: d1 * big_m + s_out / 4.0,
            width: s_out / 8.0,
            c: 0.0,
            eta: 0.0,
        };
        term.c = derivative_bound(&pts, |x| outer_term(body, &term, x))?;
        term.eta = 1.0 / (2f64.powi(j as i32) * term.c);
        outer.push(term);
    }
    Ok(ConvexDefiningFunction {
        body: body.clone(),
        inner,
        outer,
    })
}

/// Sampled certificate for a convexified defining function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub k: usize,
    /// Samples with `|δ| > 1/K` used for the Hessian check.
    pub hessian_samples: usize,
    pub min_hessian_eigenvalue: f64,
    pub boundary_samples: usize,
    pub max_boundary_abs: f64,
    pub signs_agree: bool,
    pub value_at_origin: f64,
    pub certified: bool,
}

/// Positive-definite Hessian at `hessian_samples` points with `|δ| > 1/K`
/// drawn from the box `[−2R, 2R]ⁿ`, `|ρ|` at boundary samples, and sign
/// agreement with `σ` at every sampled point.
pub fn certify(
    rho: &ConvexDefiningFunction,
    k: usize,
    hessian_samples: usize,
    boundary_samples: usize,
    seed: u64,
) -> Result<ConvexityReport> {
    let body = &rho.body;
    let n = body.n_real();
    let oracle = DistanceOracle::new(body, if n == 2 { 4096 } else { 20000 }, seed ^ 0xD15)?;
    let big_r = body
        .boundary_samples(256, seed)?
        .iter()
        .map(|b| b.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let q = QuasiRandom::new(n, seed)?;
    let cut = 1.0 / k as f64;
    let mut pts = Vec::with_capacity(hessian_samples);
    let mut i = 0;
    while pts.len() < hessian_samples {
        let x: Vec<f64> = q
            .point(i)
            .iter()
            .map(|u| 2.0 * big_r * (2.0 * u - 1.0))
            .collect();
        i += 1;
        if i > 1000 * hessian_samples.max(1) {
            return Err(invalid(
                "samples",
                "could not place test points away from the boundary",
            ));
        }
        if oracle.signed_distance(body, &x)?.abs() > cut {
            pts.push(x);
        }
    }
    let checks: Vec<(f64, bool)> = pts
        .par_iter()
        .map(|x| -> Result<(f64, bool)> {
            let lam = rho.min_hessian_eigenvalue(x)?;
            let v = rho.value(x)?;
            let s = minkowski_sigma(body, x)?;
            Ok((lam, (v > 0.0) == (s > 0.0) && v != 0.0))
        })
        .collect::<Result<_>>()?;
    let min_hess = checks.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let mut signs = checks.iter().all(|c| c.1);
    let bpts = body.boundary_samples(boundary_samples, seed ^ 0xB0)?;
    let max_b = bpts
        .iter()
        .map(|b| rho.value(b).map(f64::abs))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let origin = rho.value(&vec![0.0; n])?;
    let far = rho.value(
        &body
            .boundary_point(&{
                let mut u = vec![0.0; n];
                u[0] = 1.0;
                u
            })?
            .iter()
            .map(|v| 3.0 * v)
            .collect::<Vec<_>>(),
    )?;
    signs &= origin < 0.0 && far > 0.0;
    Ok(ConvexityReport {
        k,
        hessian_samples: pts.len(),
        min_hessian_eigenvalue: min_hess,
        boundary_samples: bpts.len(),
        max_boundary_abs: max_b,
        signs_agree: signs,
        value_at_origin: origin,
        certified: min_hess > 0.0 && signs && max_b <= 1e-8,
    })
}
