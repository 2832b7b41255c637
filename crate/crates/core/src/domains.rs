//! Catalog of defining functions: balls, ellipsoids, eggs, the worm domain
//! and weighted or user-composed fields.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::jets::{jet_dim, CJet, FnField, Jet2, ScalarField};
use crate::special::flat_profile;

/// Parameter record of a defining function, as stored in run configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Ball {
        n: usize,
    },
    Ellipsoid {
        axes: Vec<f64>,
    },
    /// `Σ |z_j|^{2 m_j} − 1`
    Egg {
        exponents: Vec<u32>,
    },
    Worm {
        beta: f64,
        /// Defaults to `β − π/2 + 2`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<f64>,
    },
    Weighted {
        base: Box<DomainSpec>,
        weight: String,
    },
    Custom {
        label: String,
    },
}

impl DomainSpec {
    pub fn build(&self) -> Result<DefiningFunction> {
        match self {
            DomainSpec::Ball { n } => make_ball(*n),
            DomainSpec::Ellipsoid { axes } => make_ellipsoid(axes),
            DomainSpec::Egg { exponents } => make_egg(exponents),
            DomainSpec::Worm { beta, a } => {
                let profile = match a {
                    Some(a) => WormProfile::with_a(*beta, *a)?,
                    None => WormProfile::new(*beta)?,
                };
                make_worm(profile)
            }
            DomainSpec::Weighted { .. } | DomainSpec::Custom { .. } => Err(invalid(
                "domain",
                "weighted and custom domains are built in code, not from a spec",
            )),
        }
    }
}

/// An evaluable smooth defining function with its metadata.
#[derive(Clone)]
pub struct DefiningFunction {
    pub name: String,
    n: usize,
    pub spec: DomainSpec,
    /// Where evaluation is defined, in words.
    pub eval_region: String,
    evaluator: Arc<dyn ScalarField>,
}

impl fmt::Debug for DefiningFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DefiningFunction")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("spec", &self.spec)
            .finish()
    }
}

impl ScalarField for DefiningFunction {
    fn complex_dim(&self) -> usize {
        self.n
    }
    fn eval(&self, vars: &[Jet2]) -> Result<Jet2> {
        self.evaluator.eval(vars)
    }
}

impl DefiningFunction {
    pub fn new(
        name: impl Into<String>,
        spec: DomainSpec,
        eval_region: impl Into<String>,
        evaluator: Arc<dyn ScalarField>,
    ) -> Self {
        let n = evaluator.complex_dim();
        Self {
            name: name.into(),
            n,
            spec,
            eval_region: eval_region.into(),
            evaluator,
        }
    }

    /// Wraps a user field.
    pub fn custom(label: impl Into<String>, field: Arc<dyn ScalarField>) -> Self {
        let label = label.into();
        Self::new(
            label.clone(),
            DomainSpec::Custom { label },
            "caller-defined",
            field,
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The worm profile when this is a worm domain.
    pub fn worm_profile(&self) -> Option<WormProfile> {
        match &self.spec {
            DomainSpec::Worm { beta, a } => match a {
                Some(a) => WormProfile::with_a(*beta, *a).ok(),
                None => WormProfile::new(*beta).ok(),
            },
            _ => None,
        }
    }
}

pub fn make_ball(n: usize) -> Result<DefiningFunction> {
    if n == 0 {
        return Err(invalid("n", "complex dimension must be at least 1"));
    }
    let mut f = make_ellipsoid(&vec![1.0; n])?;
    f.name = format!("ball{n}");
    f.spec = DomainSpec::Ball { n };
    Ok(f)
}

/// `Σ |z_j|²/a_j² − 1`
pub fn make_ellipsoid(axes: &[f64]) -> Result<DefiningFunction> {
    if axes.is_empty() {
        return Err(invalid("axes", "at least one axis is required"));
    }
    if let Some(a) = axes.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(invalid("axes", format!("axis {a} is not positive")));
    }
    let inv: Vec<f64> = axes.iter().map(|a| 1.0 / (a * a)).collect();
    let n = axes.len();
    let field = FnField::new(n, move |v: &[Jet2]| {
        let mut acc = Jet2::constant(-1.0, jet_dim(v));
        for (j, w) in inv.iter().enumerate() {
            acc = acc + CJet::coordinate(v, j).abs2().scale(*w);
        }
        Ok(acc)
    });
    Ok(DefiningFunction::new(
        "ellipsoid",
        DomainSpec::Ellipsoid {
            axes: axes.to_vec(),
        },
        "all of C^n",
        Arc::new(field),
    ))
}

/// `Σ |z_j|^{2 m_j} − 1`; weakly pseudoconvex where a coordinate with
/// `m_j > 1` vanishes.
pub fn make_egg(exponents: &[u32]) -> Result<DefiningFunction> {
    if exponents.is_empty() || exponents.contains(&0) {
        return Err(invalid("exponents", "need positive exponents"));
    }
    let ex = exponents.to_vec();
    let n = ex.len();
    let field = FnField::new(n, move |v: &[Jet2]| {
        let mut acc = Jet2::constant(-1.0, jet_dim(v));
        for (j, m) in ex.iter().enumerate() {
            acc = acc + CJet::coordinate(v, j).abs2().powi(*m as i32);
        }
        Ok(acc)
    });
    Ok(DefiningFunction::new(
        "egg",
        DomainSpec::Egg {
            exponents: exponents.to_vec(),
        },
        "all of C^n",
        Arc::new(field),
    ))
}

/// Convex profile `φ` of the worm domain:
/// `φ(x) = c·g(|x| − (β − π/2))`, with `g` flat at 0 and `c` fixed by
/// `φ(a) = 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WormProfile {
    pub beta: f64,
    pub a: f64,
    pub c: f64,
}

impl WormProfile {
    pub fn new(beta: f64) -> Result<Self> {
        Self::with_a(beta, beta - FRAC_PI_2 + 2.0)
    }

    pub fn with_a(beta: f64, a: f64) -> Result<Self> {
        if !(beta > FRAC_PI_2) || !beta.is_finite() {
            return Err(invalid("beta", format!("beta = {beta} must exceed pi/2")));
        }
        let half = beta - FRAC_PI_2;
        if !(a > half) {
            return Err(invalid(
                "a",
                format!("a = {a} must exceed beta - pi/2 = {half}"),
            ));
        }
        let (g, _, _) = flat_profile(a - half);
        if !(g > 0.0) {
            return Err(invalid("a", "profile vanishes at a"));
        }
        Ok(Self {
            beta,
            a,
            c: 2.0 / g,
        })
    }

    /// Half-width `β − π/2` of the flat interval.
    pub fn flat_half_width(&self) -> f64 {
        self.beta - FRAC_PI_2
    }

    /// `(φ, φ', φ'')` at `x`.
    pub fn phi(&self, x: f64) -> (f64, f64, f64) {
        let (g, g1, g2) = flat_profile(x.abs() - self.flat_half_width());
        let sign = if x < 0.0 { -1.0 } else { 1.0 };
        (self.c * g, sign * self.c * g1, self.c * g2)
    }

    /// The positive crossing `φ(x*) = 1`, by bisection on `[β − π/2, a]`.
    pub fn unit_crossing(&self) -> f64 {
        let (mut lo, mut hi) = (self.flat_half_width(), self.a);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.phi(mid).0 < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// `φ(x)` with derivatives.
pub fn worm_phi(x: f64, profile: &WormProfile) -> (f64, f64, f64) {
    profile.phi(x)
}

/// `ρ(z,w) = |z − e^{i log|w|²}|² − (1 − φ(log|w|²))` on `w ≠ 0`.
pub fn make_worm(profile: WormProfile) -> Result<DefiningFunction> {
    let field = FnField::new(2, move |v: &[Jet2]| {
        let r2 = v[2].square() + v[3].square();
        if r2.value() == 0.0 {
            return Err(domain("worm", "w = 0 is outside the evaluation region"));
        }
        let ell = r2.ln()?;
        let (p0, p1, p2) = profile.phi(ell.value());
        let phi = ell.chain(p0, p1, p2);
        let dx = &v[0] - &ell.cos();
        let dy = &v[1] - &ell.sin();
        Ok(dx.square() + dy.square() + phi - 1.0)
    });
    Ok(DefiningFunction::new(
        format!("worm(beta={})", profile.beta),
        DomainSpec::Worm {
            beta: profile.beta,
            a: Some(profile.a),
        },
        "C^2 minus {w = 0}",
        Arc::new(field),
    ))
}

/// `ρ e^ψ`.
pub fn weight(rho: &DefiningFunction, psi: Arc<dyn ScalarField>) -> Result<DefiningFunction> {
    if psi.complex_dim() != rho.n() {
        return Err(crate::Error::Dimension {
            expected: rho.n(),
            got: psi.complex_dim(),
        });
    }
    let base = rho.clone();
    let psi_field = psi.clone();
    let field = FnField::new(rho.n(), move |v: &[Jet2]| {
        let r = base.eval(v)?;
        let p = psi_field.eval(v)?;
        Ok(&r * &p.exp())
    });
    Ok(DefiningFunction::new(
        format!("weighted({})", rho.name),
        DomainSpec::Weighted {
            base: Box::new(rho.spec.clone()),
            weight: "psi".into(),
        },
        rho.eval_region.clone(),
        Arc::new(field),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::{evaluate_jet, levi_data};
    use num_complex::Complex64;

    #[test]
    fn ball_values() {
        let b = make_ball(2).unwrap();
        let d = levi_data(&b, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(d.value, 0.0);
        assert_eq!(
            d.holo_grad,
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
        );
        let d0 = levi_data(&b, &[0.0; 4]).unwrap();
        assert_eq!(d0.value, -1.0);
        assert_eq!(
            d0.mixed_hess,
            nalgebra::DMatrix::identity(2, 2).map(|x: f64| Complex64::new(x, 0.0))
        );
    }

    #[test]
    fn ellipsoid_boundary_and_errors() {
        let e = make_ellipsoid(&[2.0, 1.0]).unwrap();
        assert_eq!(
            evaluate_jet(&e, &[2.0, 0.0, 0.0, 0.0]).unwrap().value(),
            0.0
        );
        assert!(make_ellipsoid(&[2.0, 0.0]).is_err());
        assert!(make_ellipsoid(&[-1.0]).is_err());
        assert!(make_ball(0).is_err());
    }

    #[test]
    fn phi_flat_interval_and_normalisation() {
        let p = WormProfile::new(0.6 * std::f64::consts::PI).unwrap();
        assert_eq!(p.phi(0.0).0, 0.0);
        let edge = p.flat_half_width();
        assert_eq!(p.phi(edge), (0.0, 0.0, 0.0));
        assert!((p.phi(p.a).0 - 2.0).abs() < 1e-12);
        assert!((p.phi(-p.a).0 - 2.0).abs() < 1e-12);
        let x = p.unit_crossing();
        assert!((p.phi(x).0 - 1.0).abs() < 1e-10);
        assert!(p.phi(x).1 > 0.0);
    }

    #[test]
    fn worm_rejects_w_zero() {
        let w = make_worm(WormProfile::new(2.0).unwrap()).unwrap();
        assert!(matches!(
            evaluate_jet(&w, &[0.1, 0.0, 0.0, 0.0]),
            Err(crate::Error::Domain { .. })
        ));
    }

    #[test]
    fn spec_round_trip_builds() {
        let spec = DomainSpec::Worm { beta: 2.0, a: None };
        let json = serde_json::to_string(&spec).unwrap();
        let back: DomainSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.build().unwrap().n(), 2);
    }
}
