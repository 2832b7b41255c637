use std::sync::Arc;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use leviform::convexify::{certify, convexify, BodySpec, ConvexifyConfig};
use leviform::criteria::{criterion_sample, keylem_residuals, linear_psi, CriterionSample, Psi};
use leviform::domains::{DefiningFunction, DomainSpec};
use leviform::estimators::{
    df_exponent_lower, exponent_margin, steinness_exponent_upper, GridConfig,
};
use leviform::geometry::{boundary_point, DEFAULT_EPS_LEVI};
use leviform::jets::{evaluate_jet, FdConfig, FnField, Jet2, ScalarField};
use leviform::sampling::{boundary_seeds, shell_points, ShellConfig, Side};
use leviform::worm::{
    riccati_closed_form, riccati_closed_form_jet, riccati_integrate, sigma_points, worm_kernel,
    worm_psi_field, worm_report, worm_sigma,
};
use leviform::Error;

use crate::args::*;

/// Tolerance for `max Q ≤ 0` and for the vanishing weighted criterion.
const Q_TOL: f64 = 1e-5;

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub struct Outcome {
    pub pass: bool,
    pub results: Vec<Value>,
    pub table: Option<Table>,
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn fd(step: f64) -> FdConfig {
    FdConfig {
        step,
        ..FdConfig::default()
    }
}

pub fn run(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::WormReport(a) => run_worm_report(a),
        Command::Estimate(a) => run_estimate(a),
        Command::Criterion(a) => run_criterion(a),
        Command::Riccati(a) => run_riccati(a),
        Command::Convexify(a) => run_convexify(a),
        Command::Selftest(a) => run_selftest(a),
    }
}

pub fn domain_spec(d: &DomainArgs) -> Result<DomainSpec> {
    Ok(match d.domain {
        DomainKind::Ball => DomainSpec::Ball { n: d.n },
        DomainKind::Ellipsoid => DomainSpec::Ellipsoid {
            axes: d.axes.clone().unwrap_or_else(|| vec![2.0, 1.0]),
        },
        DomainKind::Egg => DomainSpec::Egg {
            exponents: d.exponents.clone().unwrap_or_else(|| vec![1, 2]),
        },
        DomainKind::Worm => DomainSpec::Worm {
            beta: d
                .beta
                .context("field `beta` is required for the worm domain")?,
            a: None,
        },
    })
}

fn criterion_table(rows: &[CriterionSample]) -> Table {
    let n = rows.first().map_or(2, |r| r.point.point.len());
    let mut header = Vec::new();
    for j in 1..=n {
        header.push(format!("re_z{j}"));
        header.push(format!("im_z{j}"));
    }
    header.extend(["eta2", "q", "term_ln", "term_nll", "psi_kind"].map(String::from));
    let rows = rows
        .iter()
        .map(|r| {
            let mut row: Vec<String> = r
                .point
                .point
                .iter()
                .flat_map(|c| [num(c.re), num(c.im)])
                .collect();
            row.extend([
                num(r.eta2),
                num(r.q),
                num(r.terms.term_ln),
                num(r.terms.term_nll),
                r.psi_kind.clone(),
            ]);
            row
        })
        .collect();
    Table { header, rows }
}

fn max_abs_q<'a>(rows: impl Iterator<Item = &'a CriterionSample>) -> f64 {
    rows.fold(0.0, |m, r| m.max(r.q.abs()))
}

fn run_worm_report(a: &WormReportArgs) -> Result<Outcome> {
    let eta2 = a.eta2.context("field `eta2` is unresolved")?;
    let report = worm_report(a.beta, eta2, a.m, fd(a.fd_step))?;
    let rec_ok = report
        .reciprocal_check
        .is_none_or(|r| (r - 2.0).abs() <= 1e-12);
    let riccati: Vec<&CriterionSample> = report
        .criterion_rows
        .iter()
        .filter(|r| r.psi_kind == "riccati")
        .collect();
    let max_riccati = (!riccati.is_empty()).then(|| max_abs_q(riccati.iter().copied()));
    let max_plain = max_abs_q(
        report
            .criterion_rows
            .iter()
            .filter(|r| r.psi_kind == "none"),
    );
    let table = criterion_table(&report.criterion_rows);
    Ok(Outcome {
        pass: rec_ok && max_riccati.is_none_or(|q| q <= Q_TOL),
        results: vec![json!({
            "report": report,
            "max_abs_q_plain": max_plain,
            "max_abs_q_riccati": max_riccati,
        })],
        table: Some(table),
    })
}

fn run_estimate(a: &EstimateArgs) -> Result<Outcome> {
    let spec = domain_spec(&a.domain)?;
    let rho = spec.build()?;
    let side = match a.side {
        SideArg::Inner => Side::Inner,
        SideArg::Outer => Side::Outer,
    };
    let shell = ShellConfig {
        depth_min: a.depth_min,
        depth_max: a.depth_max,
        samples: a.samples,
        seed: a.seed,
    };
    let points = shell_points(&rho, side, &shell)?;
    let grid = GridConfig {
        step: a.step,
        eta_max: a.eta_max,
        floor: a.floor,
    };
    let est = match side {
        Side::Inner => df_exponent_lower(&rho, &points, grid)?,
        Side::Outer => steinness_exponent_upper(&rho, &points, grid)?,
    };
    let rows: Vec<Vec<String>> = points
        .par_iter()
        .map(|x| -> Result<Vec<String>> {
            let (m, _) = exponent_margin(&rho, std::slice::from_ref(x), side, est.eta)?;
            let v = evaluate_jet(&rho, x)?.value();
            let mut row: Vec<String> = x.iter().copied().map(num).collect();
            row.extend([num(v), num(est.eta), num(m)]);
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let n = rho.n();
    let mut header = Vec::new();
    for j in 1..=n {
        header.push(format!("re_z{j}"));
        header.push(format!("im_z{j}"));
    }
    header.extend(["rho", "eta", "margin"].map(String::from));
    Ok(Outcome {
        pass: est.certified,
        results: vec![json!({ "domain": spec, "estimate": est })],
        table: Some(Table { header, rows }),
    })
}

fn weak_points(
    rho: &DefiningFunction,
    spec: &DomainSpec,
    a: &CriterionArgs,
) -> Result<Vec<(leviform::geometry::BoundaryPoint, Vec<Complex64>)>> {
    if let DomainSpec::Worm { beta, .. } = spec {
        return Ok(worm_sigma(*beta, a.m)?
            .into_iter()
            .map(|p| {
                let l = worm_kernel(p.point[1]);
                (p, l)
            })
            .collect());
    }
    boundary_seeds(rho, a.m, a.seed)?
        .par_iter()
        .map(|x| {
            let p = boundary_point(rho, x, DEFAULT_EPS_LEVI)?;
            let l = p
                .tangent_frame
                .first()
                .cloned()
                .ok_or_else(|| Error::Domain {
                    primitive: "criterion",
                    detail: "complex dimension 1 has no tangent vectors".into(),
                })?;
            Ok((p, l))
        })
        .collect::<leviform::Result<_>>()
        .map_err(Into::into)
}

fn run_criterion(a: &CriterionArgs) -> Result<Outcome> {
    let spec = domain_spec(&a.domain)?;
    let rho = spec.build()?;
    let fdc = fd(a.fd_step);
    let pts = weak_points(&rho, &spec, a)?;
    let rows: Vec<CriterionSample> = match a.psi {
        PsiArg::None => pts
            .par_iter()
            .map(|(p, l)| criterion_sample(&rho, &Psi::Zero, "none", p, l, a.eta2, fdc))
            .collect::<leviform::Result<_>>()?,
        PsiArg::Riccati => {
            let DomainSpec::Worm { beta, .. } = spec else {
                bail!("field `psi`: the riccati weight exists only for the worm domain");
            };
            let psi = match worm_psi_field(beta, a.eta2) {
                Ok(f) => Psi::Real(f),
                Err(e @ Error::Threshold { .. }) => {
                    return Ok(Outcome {
                        pass: false,
                        results: vec![json!({ "domain": spec, "threshold_error": e.to_string() })],
                        table: None,
                    })
                }
                Err(e) => return Err(e.into()),
            };
            pts.par_iter()
                .map(|(p, l)| criterion_sample(&rho, &psi, "riccati", p, l, a.eta2, fdc))
                .collect::<leviform::Result<_>>()?
        }
        PsiArg::Linear => pts
            .par_iter()
            .map(|(p, l)| {
                let lp = linear_psi(&rho, &p.real_point())?;
                let psi = Psi::Complex(Arc::new(lp));
                criterion_sample(&rho, &psi, "linear", p, l, a.eta2, fdc)
            })
            .collect::<leviform::Result<_>>()?,
    };
    let max_q = rows.iter().map(|r| r.q).fold(f64::NEG_INFINITY, f64::max);
    Ok(Outcome {
        pass: max_q <= Q_TOL,
        results: vec![json!({
            "domain": spec,
            "max_q": max_q,
            "max_abs_q": max_abs_q(rows.iter()),
            "samples": rows.len(),
        })],
        table: Some(criterion_table(&rows)),
    })
}

fn run_riccati(a: &RiccatiArgs) -> Result<Outcome> {
    let s0 = riccati_closed_form(a.a, a.b, a.phi, a.t0)?;
    let traj = riccati_integrate(a.a, a.b, a.t0, s0, a.t1, a.step)?;
    let mut sup_error = 0.0f64;
    let mut residual = 0.0f64;
    let mut rows = Vec::with_capacity(traj.len());
    for &(t, s) in &traj {
        let j = riccati_closed_form_jet(a.a, a.b, a.phi, t)?;
        let exact = j.value();
        let r = j.grad()[0] - (a.a * exact * exact - exact / t + a.b / (t * t));
        sup_error = sup_error.max((s - exact).abs());
        residual = residual.max(r.abs());
        rows.push(vec![num(t), num(s), num(exact), num((s - exact).abs())]);
    }
    Ok(Outcome {
        pass: sup_error <= 1e-6 && residual <= 1e-8,
        results: vec![json!({
            "s0": s0,
            "steps": traj.len() - 1,
            "sup_error": sup_error,
            "ode_residual": residual,
        })],
        table: Some(Table {
            header: ["t", "s_rk4", "s_closed", "abs_error"]
                .map(String::from)
                .to_vec(),
            rows,
        }),
    })
}

pub fn body_spec(a: &ConvexifyArgs) -> Result<BodySpec> {
    let axes = a.axes.clone();
    Ok(match a.body {
        BodyKind::Disc => match axes.as_deref() {
            None => BodySpec::Disc { radius: 1.0 },
            Some([r]) => BodySpec::Disc { radius: *r },
            Some(_) => bail!("field `axes`: a disc takes one radius"),
        },
        BodyKind::Ellipse => match axes.as_deref() {
            None => BodySpec::Ellipse { axes: [2.0, 1.0] },
            Some([x, y]) => BodySpec::Ellipse { axes: [*x, *y] },
            Some(_) => bail!("field `axes`: an ellipse takes two semi-axes"),
        },
        BodyKind::Ellipsoid => match axes {
            None => BodySpec::Ellipsoid {
                axes: vec![2.0, 1.5, 1.0, 1.0],
            },
            Some(v) if v.len() == 4 => BodySpec::Ellipsoid { axes: v },
            Some(_) => bail!("field `axes`: an R^4 ellipsoid takes four semi-axes"),
        },
    })
}

fn run_convexify(a: &ConvexifyArgs) -> Result<Outcome> {
    let spec = body_spec(a)?;
    let body = spec.build()?;
    let cfg = ConvexifyConfig {
        k: a.k,
        seed: a.seed,
        ..ConvexifyConfig::default()
    };
    let rho = convexify(&body, &cfg)?;
    let report = certify(&rho, a.k, a.hessian_samples, a.boundary_samples, a.seed)?;
    let rows = rho
        .inner
        .iter()
        .map(|t| ("inner", t))
        .chain(rho.outer.iter().map(|t| ("outer", t)))
        .enumerate()
        .map(|(i, (side, t))| {
            vec![
                side.to_string(),
                (i % a.k + 1).to_string(),
                num(t.epsilon),
                num(t.delta1),
                num(t.delta2),
                num(t.width),
                num(t.c),
                num(t.eta),
            ]
        })
        .collect();
    Ok(Outcome {
        pass: report.certified,
        results: vec![json!({
            "body": spec,
            "certificate": report,
            "inner_terms": rho.inner,
            "outer_terms": rho.outer,
        })],
        table: Some(Table {
            header: [
                "side", "j", "epsilon", "delta1", "delta2", "width", "c", "eta",
            ]
            .map(String::from)
            .to_vec(),
            rows,
        }),
    })
}

fn test_weights() -> Vec<(&'static str, Arc<dyn ScalarField>)> {
    vec![
        (
            "zero",
            Arc::new(FnField::new(2, |v: &[Jet2]| {
                Ok(Jet2::constant(0.0, leviform::jets::jet_dim(v)))
            })),
        ),
        (
            "quadratic",
            Arc::new(FnField::new(2, |v: &[Jet2]| {
                Ok(v[0].scale(0.3) - v[3].scale(0.2) + (v[2].square() + v[3].square()).scale(0.1))
            })),
        ),
        (
            "trigonometric",
            Arc::new(FnField::new(2, |v: &[Jet2]| {
                Ok((&v[2].sin() * &v[1].cos()).scale(0.05) + (&v[0] * &v[3]).scale(0.2))
            })),
        ),
    ]
}

/// Largest gap between jet derivatives and central differences.
fn ad_fd_gap(field: &dyn ScalarField, x: &[f64]) -> Result<f64> {
    let j = evaluate_jet(field, x)?;
    let m = x.len();
    let h = 1e-5;
    let mut gap = 0.0f64;
    for i in 0..m {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let (jp, jm) = (evaluate_jet(field, &xp)?, evaluate_jet(field, &xm)?);
        let g = (jp.value() - jm.value()) / (2.0 * h);
        gap = gap.max((g - j.grad()[i]).abs());
        for k in 0..m {
            let hk = (jp.grad()[k] - jm.grad()[k]) / (2.0 * h);
            gap = gap.max((hk - j.hess()[i * m + k]).abs());
        }
    }
    Ok(gap / (1.0 + j.value().abs()))
}

fn run_selftest(a: &SelftestArgs) -> Result<Outcome> {
    let worm = DomainSpec::Worm {
        beta: a.beta,
        a: None,
    }
    .build()?;
    let sigma = sigma_points(a.beta, a.m);
    let fdc = FdConfig::default();
    let mut rows = Vec::new();
    let mut pass = true;
    let mut push = |check: &str, domain: &str, idx: usize, value: f64, tol: f64| {
        let ok = value <= tol;
        pass &= ok;
        rows.push(vec![
            check.to_string(),
            domain.to_string(),
            idx.to_string(),
            num(value),
            num(tol),
            ok.to_string(),
        ]);
    };
    for (name, psi) in test_weights() {
        let res: Vec<(f64, f64)> = sigma
            .par_iter()
            .map(|x| {
                let l = worm_kernel(Complex64::new(x[2], x[3]));
                keylem_residuals(&worm, psi.clone(), x, &l, fdc)
            })
            .collect::<leviform::Result<_>>()?;
        for (i, (r1, r2)) in res.into_iter().enumerate() {
            push(&format!("keylem_r1_{name}"), "worm", i, r1, 1e-5);
            push(&format!("keylem_r2_{name}"), "worm", i, r2, 1e-5);
        }
    }
    let egg = DomainSpec::Egg {
        exponents: vec![1, 2],
    }
    .build()?;
    for (label, rho) in [("worm", &worm), ("egg", &egg)] {
        let pts = boundary_seeds(rho, a.m, a.seed)?;
        let gaps: Vec<f64> = pts
            .par_iter()
            .map(|x| ad_fd_gap(rho, x))
            .collect::<Result<_>>()?;
        for (i, g) in gaps.into_iter().enumerate() {
            push("ad_fd", label, i, g, 1e-5);
        }
    }
    let failures = rows.iter().filter(|r| r[5] == "false").count();
    Ok(Outcome {
        pass,
        results: vec![json!({ "checks": rows.len(), "failures": failures })],
        table: Some(Table {
            header: ["check", "domain", "index", "value", "tolerance", "pass"]
                .map(String::from)
                .to_vec(),
            rows,
        }),
    })
}
