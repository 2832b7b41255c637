//! Worm-domain analysis: the weakly pseudoconvex annulus `Σ`, the Riccati
//! equation behind the weight `ψ`, the index formulas and the threshold
//! `η₂ > π/(2(π−β))`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{criterion_sample, weighted_q, CriterionSample, Psi};
use crate::domains::{make_worm, DefiningFunction, WormProfile};
use crate::error::{domain, invalid, Error, Result};
use crate::geometry::{boundary_point, BoundaryPoint, DEFAULT_EPS_LEVI};
use crate::jets::{FdConfig, FnField, Jet2, ScalarField};
use crate::sampling::golden_angle;

/// `s(t) = −√(b/a) cot(√(ab) log t + φ) / t`, solving
/// `s' = a s² − s/t + b/t²`.
pub fn riccati_closed_form(a: f64, b: f64, phi: f64, t: f64) -> Result<f64> {
    Ok(riccati_closed_form_jet(a, b, phi, t)?.value())
}

/// The closed form as a one-variable jet in `t`.
pub fn riccati_closed_form_jet(a: f64, b: f64, phi: f64, t: f64) -> Result<Jet2> {
    check_riccati(a, b)?;
    if !(t > 0.0) {
        return Err(domain("riccati", format!("t = {t} must be positive")));
    }
    let tj = Jet2::variable(t, 0, 1);
    let arg = tj.ln()?.scale((a * b).sqrt()).offset(phi);
    let cot = arg.cot()?;
    cot.scale(-(b / a).sqrt()).checked_div(&tj)
}

/// The phase `φ` of the closed-form solution through `(t0, s0)`.
pub fn riccati_phase(a: f64, b: f64, t0: f64, s0: f64) -> Result<f64> {
    check_riccati(a, b)?;
    // cot(x) = −s0 t0 √(a/b), with x ∈ (0, π)
    let cot = -s0 * t0 * (a / b).sqrt();
    let x = FRAC_PI_2 - cot.atan();
    Ok(x - (a * b).sqrt() * t0.ln())
}

fn check_riccati(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b > 0.0) {
        return Err(invalid("a, b", format!("need a, b > 0, got ({a}, {b})")));
    }
    Ok(())
}

/// Fixed-step RK4 for `s' = a s² − s/t + b/t²` from `(t0, s0)` to `t_end`.
/// The last step is shortened so the trajectory ends exactly at `t_end`.
pub fn riccati_integrate(
    a: f64,
    b: f64,
    t0: f64,
    s0: f64,
    t_end: f64,
    step: f64,
) -> Result<Vec<(f64, f64)>> {
    check_riccati(a, b)?;
    if !(t0 > 0.0 && t_end > 0.0) {
        return Err(domain("riccati", "times must be positive"));
    }
    if !(step > 0.0) {
        return Err(invalid("step", "must be positive"));
    }
    let f = |t: f64, s: f64| a * s * s - s / t + b / (t * t);
    let span = t_end - t0;
    let steps = (span.abs() / step).ceil() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    out.push((t0, s0));
    if steps == 0 {
        return Ok(out);
    }
    let h = span / steps as f64;
    let (mut t, mut s) = (t0, s0);
    for i in 0..steps {
        let k1 = f(t, s);
        let k2 = f(t + 0.5 * h, s + 0.5 * h * k1);
        let k3 = f(t + 0.5 * h, s + 0.5 * h * k2);
        let k4 = f(t + h, s + h * k3);
        s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = if i + 1 == steps {
            t_end
        } else {
            t0 + (i + 1) as f64 * h
        };
        if !(s.abs() <= 1e9) {
            return Err(Error::PoleCrossing { t, s: s.abs() });
        }
        out.push((t, s));
    }
    Ok(out)
}

/// `π/(2(π−β))`, infinite for `β ≥ π`.
pub fn threshold(beta: f64) -> f64 {
    if beta >= PI {
        f64::INFINITY
    } else {
        FRAC_PI_2 / (PI - beta)
    }
}

/// `η₂ > π/(2(π−β))`, equivalently `α(β − π/2) < π/2` with
/// `α = 1/(η₂−1) + 1`. A relative margin of 1e−12 keeps `η₂` equal to the
/// threshold up to rounding on the failing side.
pub fn threshold_check(beta: f64, eta2: f64) -> bool {
    let th = threshold(beta);
    th.is_finite() && eta2 > th * (1.0 + 1e-12)
}

fn require_threshold(beta: f64, eta2: f64) -> Result<()> {
    if !(beta > FRAC_PI_2) {
        return Err(invalid("beta", format!("beta = {beta} must exceed pi/2")));
    }
    if !threshold_check(beta, eta2) {
        return Err(Error::Threshold {
            beta,
            eta2,
            threshold: threshold(beta),
        });
    }
    Ok(())
}

/// `(π/(2β), π/(2(π−β)))`, the second infinite for `β ≥ π`.
pub fn index_formulas(beta: f64) -> Result<(f64, f64)> {
    if !(beta > FRAC_PI_2) {
        return Err(invalid("beta", format!("beta = {beta} must exceed pi/2")));
    }
    Ok((FRAC_PI_2 / beta, threshold(beta)))
}

/// Radii `[e^{−(β/2−π/4)}, e^{β/2−π/4}]` of `Σ`.
pub fn sigma_radius_interval(beta: f64) -> (f64, f64) {
    let h = 0.5 * beta - FRAC_PI_4;
    ((-h).exp(), h.exp())
}

/// `e^{−i log|w|²} ∂/∂w`, the Levi kernel at `(0, w) ∈ Σ`.
pub fn worm_kernel(w: Complex64) -> Vec<Complex64> {
    let ell = w.norm_sqr().ln();
    vec![Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, -ell)]
}

/// `m` points `(0, r e^{iθ})` of `Σ`: `r` on a uniform grid including both
/// end radii, `θ` from the golden-angle sequence. `m = 1` gives `(0, 1)`.
pub fn worm_sigma(beta: f64, m: usize) -> Result<Vec<BoundaryPoint>> {
    let rho = make_worm(WormProfile::new(beta)?)?;
    sigma_points(beta, m)
        .par_iter()
        .map(|x| boundary_point(&rho, x, DEFAULT_EPS_LEVI))
        .collect()
}

/// Real coordinates of the `Σ` samples used by [`worm_sigma`].
pub fn sigma_points(beta: f64, m: usize) -> Vec<Vec<f64>> {
    if m == 1 {
        return vec![vec![0.0, 0.0, 1.0, 0.0]];
    }
    let (lo, hi) = sigma_radius_interval(beta);
    (0..m)
        .map(|i| {
            let r = lo + (hi - lo) * i as f64 / (m - 1) as f64;
            let th = golden_angle(i);
            vec![0.0, 0.0, r * th.cos(), r * th.sin()]
        })
        .collect()
}

fn alpha(eta2: f64) -> f64 {
    1.0 / (eta2 - 1.0) + 1.0
}

/// `ψ(r) = −(1/α) log cos(2α log r)`, the antiderivative with `ψ(1) = 0` of
/// the Riccati solution `s(r) = −2 cot(2α log r + π/2)/r`.
///
/// Defined where `cos(2α log r) > 0`; above the threshold this contains the
/// radius interval of `Σ`.
pub fn worm_psi(beta: f64, eta2: f64, r: f64) -> Result<f64> {
    require_threshold(beta, eta2)?;
    let a = alpha(eta2);
    let c = if r > 0.0 {
        (2.0 * a * r.ln()).cos()
    } else {
        f64::NAN
    };
    if !(c > 0.0) {
        return Err(domain(
            "worm_psi",
            format!("r = {r}: cos(2 alpha log r) is not positive"),
        ));
    }
    Ok(-c.ln() / a)
}

/// `s(r) = 2 tan(2α log r)/r`.
pub fn worm_psi_slope(eta2: f64, r: f64) -> f64 {
    let a = alpha(eta2);
    2.0 * (2.0 * a * r.ln()).tan() / r
}

/// `ψ(z, w) = −(1/α) log cos(α log|w|²)`, depending on `|w|` only.
pub fn worm_psi_field(beta: f64, eta2: f64) -> Result<Arc<dyn ScalarField>> {
    require_threshold(beta, eta2)?;
    let a = alpha(eta2);
    Ok(Arc::new(FnField::new(2, move |v: &[Jet2]| {
        let r2 = v[2].square() + v[3].square();
        let c = r2.ln()?.scale(a).cos();
        if !(c.value() > 0.0) {
            return Err(domain("worm_psi", "cos(alpha log|w|^2) is not positive"));
        }
        Ok(c.ln()?.scale(-1.0 / a))
    })))
}

/// Maximum of `|weighted Q|` over `m` samples of `Σ` with the Riccati
/// weight and the kernel vector.
pub fn worm_criterion_verify(beta: f64, eta2: f64, m: usize) -> Result<f64> {
    require_threshold(beta, eta2)?;
    let rho = make_worm(WormProfile::new(beta)?)?;
    let psi = Psi::Real(worm_psi_field(beta, eta2)?);
    let qs: Vec<f64> = sigma_points(beta, m)
        .par_iter()
        .map(|x| {
            let l = worm_kernel(Complex64::new(x[2], x[3]));
            weighted_q(&rho, &psi, x, &l, eta2)
        })
        .collect::<Result<_>>()?;
    Ok(qs.into_iter().fold(0.0, |acc, q| acc.max(q.abs())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WormReport {
    pub beta: f64,
    pub df_formula: f64,
    /// `None` when infinite.
    pub steinness_formula: Option<f64>,
    /// `1/df + 1/steinness` when the latter is finite.
    pub reciprocal_check: Option<f64>,
    pub threshold: Option<f64>,
    pub sigma_samples: Vec<BoundaryPoint>,
    pub criterion_rows: Vec<CriterionSample>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Formulas, `Σ` samples and criterion rows for the plain `ρ` and, above
/// the threshold, for the Riccati weight.
pub fn worm_report(beta: f64, eta2: f64, m: usize, fd: FdConfig) -> Result<WormReport> {
    let (df, st) = index_formulas(beta)?;
    if !(eta2 > 1.0) {
        return Err(invalid("eta2", format!("eta2 = {eta2} must exceed 1")));
    }
    let rho: DefiningFunction = make_worm(WormProfile::new(beta)?)?;
    let sigma = worm_sigma(beta, m)?;
    let mut weights = vec![(Psi::Zero, "none")];
    if threshold_check(beta, eta2) {
        weights.push((Psi::Real(worm_psi_field(beta, eta2)?), "riccati"));
    }
    let mut rows = Vec::with_capacity(sigma.len() * weights.len());
    for (psi, kind) in &weights {
        let batch: Vec<CriterionSample> = sigma
            .par_iter()
            .map(|p| {
                let l = worm_kernel(p.point[1]);
                criterion_sample(&rho, psi, kind, p, &l, eta2, fd)
            })
            .collect::<Result<_>>()?;
        rows.extend(batch);
    }
    Ok(WormReport {
        beta,
        df_formula: df,
        steinness_formula: finite(st),
        reciprocal_check: finite(st).map(|s| 1.0 / df + 1.0 / s),
        threshold: finite(threshold(beta)),
        sigma_samples: sigma,
        criterion_rows: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Classification;

    #[test]
    fn closed_form_examples() {
        assert!(riccati_closed_form(1.0, 1.0, FRAC_PI_2, 1.0).unwrap().abs() < 1e-15);
        assert!((riccati_closed_form(2.0, 8.0, FRAC_PI_4, 1.0).unwrap() + 2.0).abs() < 1e-14);
        assert!(matches!(
            riccati_closed_form(1.0, 1.0, PI, 1.0),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn closed_form_solves_the_equation() {
        let (a, b, phi) = (2.0, 8.0, FRAC_PI_4);
        for i in 0..50 {
            let t = 0.7 + 0.7 * i as f64 / 49.0;
            let j = riccati_closed_form_jet(a, b, phi, t).unwrap();
            let s = j.value();
            let r = j.grad()[0] - (a * s * s - s / t + b / (t * t));
            assert!(r.abs() < 1e-8 * (1.0 + s.abs()), "t = {t}: {r}");
        }
    }

    #[test]
    fn rk4_matches_closed_form() {
        for (a, b, phi, t1) in [(1.0, 1.0, FRAC_PI_2, 1.5), (2.0, 8.0, FRAC_PI_4, 1.2)] {
            let s0 = riccati_closed_form(a, b, phi, 1.0).unwrap();
            let traj = riccati_integrate(a, b, 1.0, s0, t1, 1e-3).unwrap();
            assert_eq!(traj.last().unwrap().0, t1);
            let err = traj
                .iter()
                .map(|&(t, s)| (s - riccati_closed_form(a, b, phi, t).unwrap()).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-6, "{err}");
        }
        assert_eq!(
            riccati_integrate(1.0, 1.0, 1.0, 0.3, 1.0, 1e-3).unwrap(),
            vec![(1.0, 0.3)]
        );
    }

    #[test]
    fn rk4_detects_blow_up() {
        // tan(log t)/t has a pole at t = e^{π/2}.
        let r = riccati_integrate(1.0, 1.0, 1.0, 0.0, 6.0, 1e-3);
        assert!(matches!(r, Err(Error::PoleCrossing { .. })));
    }

    #[test]
    fn phase_recovers_closed_form() {
        let phi = riccati_phase(2.0, 8.0, 1.0, -2.0).unwrap();
        assert!((phi - FRAC_PI_4).abs() < 1e-14);
    }

    #[test]
    fn thresholds() {
        assert!(threshold_check(0.6 * PI, 1.3));
        assert!(!threshold_check(0.6 * PI, 1.2));
        assert!(!threshold_check(0.6 * PI, 1.25));
        assert!(!threshold_check(PI, 100.0));
        assert!(threshold_check(0.75 * PI, 2.0 + 1e-6));
    }

    #[test]
    fn formulas() {
        let (df, st) = index_formulas(0.75 * PI).unwrap();
        assert!((df - 2.0 / 3.0).abs() < 1e-12 && (st - 2.0).abs() < 1e-12);
        let (df, st) = index_formulas(0.6 * PI).unwrap();
        assert!((df - 5.0 / 6.0).abs() < 1e-12 && (st - 1.25).abs() < 1e-12);
        let (df, st) = index_formulas(1.2 * PI).unwrap();
        assert!((df - 5.0 / 12.0).abs() < 1e-12 && st.is_infinite());
    }

    #[test]
    fn psi_values() {
        let beta = 0.6 * PI;
        assert_eq!(worm_psi(beta, 2.0, 1.0).unwrap(), 0.0);
        // 2α log r = π/3 with α = 2
        let r = (PI / 12.0).exp();
        assert!((worm_psi(beta, 2.0, r).unwrap() - 0.5 * 2f64.ln()).abs() < 1e-14);
        assert!(matches!(
            worm_psi(beta, 1.2, 1.0),
            Err(Error::Threshold { .. })
        ));
        assert!(worm_psi(beta, 2.0, 1.5).is_err());
        assert!(worm_psi(beta, 2.0, 0.0).is_err());
    }

    #[test]
    fn psi_is_even_in_log_r() {
        let beta = 0.75 * PI;
        let (lo, hi) = sigma_radius_interval(beta);
        for i in 0..20 {
            let r = 1.0 + (hi - 1.0) * i as f64 / 19.0;
            let a = worm_psi(beta, 3.0, r).unwrap();
            let b = worm_psi(beta, 3.0, 1.0 / r).unwrap();
            assert!((a - b).abs() < 1e-12);
            assert!(1.0 / r >= lo * (1.0 - 1e-12));
        }
    }

    #[test]
    fn psi_slope_by_quadrature_and_jets() {
        let beta = 0.6 * PI;
        let eta2 = 1.5;
        let field = worm_psi_field(beta, eta2).unwrap();
        let (lo, hi) = sigma_radius_interval(beta);
        for i in 0..50 {
            let r = lo + (hi - lo) * i as f64 / 49.0;
            let j = crate::jets::evaluate_jet(field.as_ref(), &[0.0, 0.0, r, 0.0]).unwrap();
            assert!((j.grad()[2] - worm_psi_slope(eta2, r)).abs() < 1e-8);
        }
        // Simpson quadrature of s from 1 to r.
        let r = hi;
        let n = 2000;
        let h = (r - 1.0) / n as f64;
        let mut q = worm_psi_slope(eta2, 1.0) + worm_psi_slope(eta2, r);
        for k in 1..n {
            q += if k % 2 == 1 { 4.0 } else { 2.0 } * worm_psi_slope(eta2, 1.0 + k as f64 * h);
        }
        q *= h / 3.0;
        assert!((worm_psi(beta, eta2, r).unwrap() - q).abs() < 1e-10);
    }

    #[test]
    fn sigma_samples_are_weak() {
        let beta = 0.6 * PI;
        let pts = worm_sigma(beta, 9).unwrap();
        let (lo, hi) = sigma_radius_interval(beta);
        assert!((pts[0].point[1].norm() - lo).abs() < 1e-14);
        assert!((pts[8].point[1].norm() - hi).abs() < 1e-14);
        for p in &pts {
            assert!(p.rho_value.abs() <= 1e-12);
            assert!(matches!(p.classification, Classification::Weakly { .. }));
        }
        let one = worm_sigma(beta, 1).unwrap();
        assert_eq!(one[0].point[1], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn riccati_weight_balances_criterion() {
        assert!(worm_criterion_verify(0.6 * PI, 1.5, 12).unwrap() < 1e-5);
        assert!(matches!(
            worm_criterion_verify(0.6 * PI, 1.2, 3),
            Err(Error::Threshold { .. })
        ));
    }

    #[test]
    fn report_identity() {
        let r = worm_report(0.75 * PI, 2.5, 3, FdConfig::default()).unwrap();
        assert!((r.reciprocal_check.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(r.criterion_rows.len(), 6);
        let r = worm_report(1.2 * PI, 2.5, 2, FdConfig::default()).unwrap();
        assert!(r.steinness_formula.is_none());
        assert_eq!(r.criterion_rows.len(), 2);
    }
}
