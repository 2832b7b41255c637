//! Exponential integral and the flat-at-zero profile built on it.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `E1(x) = ∫_x^∞ e^{-s}/s ds` for `x ∈ (0, 1]`, by its power series.
fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -x / kf;
        let add = -term / kf;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() + sum
}

/// `e^x E1(x)` for `x > 1` by modified Lentz on the continued fraction.
fn scaled_e1_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Exponential integral `E1(x)`, `x > 0`.
pub fn exp_integral_e1(x: f64) -> f64 {
    if x <= 1.0 {
        e1_series(x)
    } else {
        scaled_e1_cf(x) * (-x).exp()
    }
}

/// `g(t) = ∫₀ᵗ∫₀ˢ e^{-1/u} du ds` (zero for `t ≤ 0`) with `g'` and `g''`.
///
/// Closed form with `x = 1/t`:
/// `g' = t e^{-x} − E1(x)`,
/// `g  = ½(t² + t) e^{-x} − (t + ½) E1(x)`.
pub fn flat_profile(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let x = 1.0 / t;
    let decay = (-x).exp();
    if decay == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let (g, g1) = if x > 1.0 {
        let s = scaled_e1_cf(x);
        (
            decay * (0.5 * t * t + 0.5 * t - (t + 0.5) * s),
            decay * (t - s),
        )
    } else {
        let e1 = e1_series(x);
        (0.5 * (t * t + t) * decay - (t + 0.5) * e1, t * decay - e1)
    };
    (g.max(0.0), g1.max(0.0), decay)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson on [a, b].
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn e1_reference_values() {
        // Abramowitz & Stegun table 5.1
        assert!((exp_integral_e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-14);
        assert!((exp_integral_e1(0.5) - 0.559_773_594_776_160_8).abs() < 1e-14);
        assert!((exp_integral_e1(2.0) - 0.048_900_510_708_061_12).abs() < 1e-15);
        assert!((exp_integral_e1(10.0) - 4.156_968_929_685_324e-6).abs() < 1e-18);
    }

    #[test]
    fn profile_matches_quadrature() {
        let kernel = |u: f64| if u <= 0.0 { 0.0 } else { (-1.0 / u).exp() };
        for &t in &[0.05, 0.2, 0.7, 1.0, 1.5, 2.0, 3.7] {
            let (g, g1, g2) = flat_profile(t);
            let q1 = simpson(kernel, 0.0, t, 4000);
            // g(t) = ∫₀ᵗ (t − u) e^{-1/u} du
            let q0 = simpson(|u| (t - u) * kernel(u), 0.0, t, 4000);
            assert!(
                (g1 - q1).abs() < 1e-11 * (1.0 + q1),
                "g' at {t}: {g1} vs {q1}"
            );
            assert!((g - q0).abs() < 1e-11 * (1.0 + q0), "g at {t}: {g} vs {q0}");
            assert_eq!(g2, kernel(t));
        }
    }

    #[test]
    fn profile_is_flat_at_zero() {
        assert_eq!(flat_profile(0.0), (0.0, 0.0, 0.0));
        assert_eq!(flat_profile(-1.0), (0.0, 0.0, 0.0));
        let (g, g1, g2) = flat_profile(1e-3);
        assert_eq!((g, g1, g2), (0.0, 0.0, 0.0));
    }
}
