use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;

use leviform::convexify::{
    certify, convexify, minkowski_sigma, smooth_max, BodySpec, ConvexDefiningFunction,
    ConvexifyConfig, SmoothMaxProfile, StarBody,
};
use leviform::domains::DomainSpec;
use leviform::estimators::{df_exponent_lower, GridConfig};
use leviform::jets::{evaluate_value, FdConfig};
use leviform::sampling::{shell_points, ShellConfig, Side};
use leviform::worm::{worm_report, WormReport};

#[test]
fn domain_spec_round_trips_through_json() {
    for spec in [
        DomainSpec::Ball { n: 2 },
        DomainSpec::Ellipsoid {
            axes: vec![2.0, 1.0],
        },
        DomainSpec::Egg {
            exponents: vec![1, 3],
        },
        DomainSpec::Worm {
            beta: 0.6 * PI,
            a: None,
        },
    ] {
        let text = serde_json::to_string(&spec).unwrap();
        let back: DomainSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let rho = back.build().unwrap();
        assert!(evaluate_value(&rho, &[0.1, 0.0, 0.9, 0.2]).is_ok());
    }
}

#[test]
fn egg_inner_exponent_from_a_json_spec() {
    let spec: DomainSpec = serde_json::from_str(r#"{"kind": "egg", "exponents": [1, 2]}"#).unwrap();
    let rho = spec.build().unwrap();
    let cfg = ShellConfig {
        samples: 200,
        ..Default::default()
    };
    let pts = shell_points(&rho, Side::Inner, &cfg).unwrap();
    let est = df_exponent_lower(&rho, &pts, GridConfig::default()).unwrap();
    assert!(est.certified);
    assert!(est.eta > 0.0 && est.eta < 1.0);
}

#[test]
fn worm_report_round_trips() {
    let r = worm_report(0.6 * PI, 2.0, 8, FdConfig::default()).unwrap();
    assert_eq!(r.criterion_rows.len(), 16);
    let back: WormReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn four_dimensional_ellipsoid_is_convexified() {
    let body = BodySpec::Ellipsoid {
        axes: vec![2.0, 1.5, 1.0, 1.0],
    }
    .build()
    .unwrap();
    let cfg = ConvexifyConfig {
        boundary_samples: 400,
        ..Default::default()
    };
    let rho = convexify(&body, &cfg).unwrap();
    let r = certify(&rho, cfg.k, 60, 40, 5).unwrap();
    assert!(r.certified, "{r:?}");
}

fn ellipse_rho() -> &'static ConvexDefiningFunction {
    static RHO: OnceLock<ConvexDefiningFunction> = OnceLock::new();
    RHO.get_or_init(|| {
        let body = StarBody::ellipsoid(&[2.0, 1.0]).unwrap();
        convexify(&body, &ConvexifyConfig::default()).unwrap()
    })
}

/// Two convex functions on ℝ²: a quadratic bowl and a tilted `|x|`-like cone.
fn convex_pair(p: [f64; 2]) -> (f64, f64) {
    let f = (p[0] - 0.5).powi(2) + 2.0 * p[1] * p[1];
    let g = (1.0 + p[0] * p[0] + p[1] * p[1]).sqrt() + 0.3 * p[0] - 0.5;
    (f, g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn smooth_max_of_convex_functions_is_midpoint_convex(
        a in prop::array::uniform2(-2.0..2.0f64),
        b in prop::array::uniform2(-2.0..2.0f64),
        e in 0.05..1.5f64,
    ) {
        let p = SmoothMaxProfile::new(e).unwrap();
        let h = |x: [f64; 2]| {
            let (f, g) = convex_pair(x);
            smooth_max(f, g, &p)
        };
        let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        prop_assert!(h(m) <= 0.5 * (h(a) + h(b)) + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn convexified_ellipse_agrees_in_sign_with_the_gauge(
        x in -6.0..6.0f64,
        y in -3.0..3.0f64,
    ) {
        let rho = ellipse_rho();
        let s = minkowski_sigma(&rho.body, &[x, y]).unwrap();
        prop_assume!(s.abs() > 1e-9);
        let v = rho.value(&[x, y]).unwrap();
        prop_assert_eq!(v > 0.0, s > 0.0, "rho = {}, sigma = {}", v, s);
    }

    #[test]
    fn convexified_ellipse_is_midpoint_convex(
        a in prop::array::uniform2(-4.0..4.0f64),
        b in prop::array::uniform2(-4.0..4.0f64),
    ) {
        let rho = ellipse_rho();
        let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let (fa, fb, fm) = (rho.value(&a).unwrap(), rho.value(&b).unwrap(), rho.value(&m).unwrap());
        prop_assert!(fm <= 0.5 * (fa + fb) + 1e-12);
    }
}
