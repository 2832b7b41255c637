//! Directional derivatives by central differences with one Richardson step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    /// Coarse step `h`; the refined step is `h/2`.
    pub step: f64,
    /// Maximum accepted error indicator.
    pub tolerance: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdEstimate {
    pub value: f64,
    /// `|R − D(h/2)|`, the gap between the extrapolated and the finer
    /// central difference.
    pub indicator: f64,
}

/// Derivative of `field(p + t·direction)` at `t = 0`.
///
/// `D(h) = (F(h) − F(−h)) / 2h`, extrapolated as `(4D(h/2) − D(h)) / 3`.
pub fn directional_derivative<F>(
    field: F,
    p: &[f64],
    direction: &[f64],
    config: FdConfig,
) -> Result<FdEstimate>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if p.len() != direction.len() {
        return Err(Error::Dimension {
            expected: p.len(),
            got: direction.len(),
        });
    }
    let at = |t: f64| -> Result<f64> {
        let x: Vec<f64> = p.iter().zip(direction).map(|(a, d)| a + t * d).collect();
        field(&x)
    };
    let h = config.step;
    let coarse = (at(h)? - at(-h)?) / (2.0 * h);
    let fine = (at(0.5 * h)? - at(-0.5 * h)?) / h;
    let value = (4.0 * fine - coarse) / 3.0;
    let indicator = (value - fine).abs();
    if !(indicator <= config.tolerance) {
        return Err(Error::FiniteDifference {
            indicator,
            tolerance: config.tolerance,
        });
    }
    Ok(FdEstimate { value, indicator })
}

/// Directional derivative of a quadratic-form field (e.g. `z ↦ L_ρ(L,L)(z)`)
/// along a real unit direction through `p`.
pub fn normal_third_derivative<F>(
    quadratic_form_field: F,
    p: &[f64],
    direction: &[f64],
    config: FdConfig,
) -> Result<FdEstimate>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(crate::error::invalid("direction", "zero direction"));
    }
    let unit: Vec<f64> = direction.iter().map(|d| d / norm).collect();
    directional_derivative(quadratic_form_field, p, &unit, config)
}
