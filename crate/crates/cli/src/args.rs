//! Flags and JSON run configs. Every subcommand's arguments double as its
//! config record; serde defaults match the clap defaults.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(
    name = "leviform",
    version,
    about = "Levi-form, exponent and worm-domain checks"
)]
pub struct Cli {
    /// Read the run config from a JSON file instead of a subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write the per-sample CSV dump here.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Index formulas, Σ samples and criterion rows for the worm domain.
    WormReport(WormReportArgs),
    /// Diederich–Fornæss (inner) or Steinness (outer) exponent by bisection.
    Estimate(EstimateArgs),
    /// The Steinness criterion Q on weakly pseudoconvex boundary points.
    Criterion(CriterionArgs),
    /// RK4 against the closed-form Riccati solution.
    Riccati(RiccatiArgs),
    /// Strictly convex defining function for a convex body.
    Convexify(ConvexifyArgs),
    /// Key-lemma residuals and AD/FD consistency.
    Selftest(SelftestArgs),
}

impl Command {
    /// Fills defaults that depend on other fields.
    pub fn resolve(&mut self) {
        if let Command::WormReport(a) = self {
            if a.eta2.is_none() {
                let th = leviform::worm::threshold(a.beta);
                a.eta2 = Some(if th.is_finite() { 2.0 * th } else { 2.0 });
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::WormReport(_) => "worm-report",
            Command::Estimate(_) => "estimate",
            Command::Criterion(_) => "criterion",
            Command::Riccati(_) => "riccati",
            Command::Convexify(_) => "convexify",
            Command::Selftest(_) => "selftest",
        }
    }
}

mod defaults {
    pub fn sigma_samples() -> usize {
        50
    }
    pub fn fd_step() -> f64 {
        1e-3
    }
    pub fn n() -> usize {
        2
    }
    pub fn shell_samples() -> usize {
        2000
    }
    pub fn depth_min() -> f64 {
        1e-3
    }
    pub fn depth_max() -> f64 {
        1e-2
    }
    pub fn grid_step() -> f64 {
        1e-3
    }
    pub fn eta_max() -> f64 {
        4.0
    }
    pub fn floor() -> f64 {
        1e-9
    }
    pub fn seed() -> u64 {
        7
    }
    pub fn rk_step() -> f64 {
        1e-3
    }
    pub fn k() -> usize {
        4
    }
    pub fn hessian_samples() -> usize {
        500
    }
    pub fn boundary_samples() -> usize {
        200
    }
    pub fn selftest_beta() -> f64 {
        0.6 * std::f64::consts::PI
    }
    pub fn selftest_samples() -> usize {
        20
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct WormReportArgs {
    #[arg(long)]
    pub beta: f64,
    /// Defaults to twice the threshold π/(2(π−β)), or 2 when it is infinite.
    #[arg(long)]
    #[serde(default)]
    pub eta2: Option<f64>,
    /// Number of Σ samples.
    #[arg(long, default_value_t = defaults::sigma_samples())]
    #[serde(default = "defaults::sigma_samples")]
    pub m: usize,
    #[arg(long, default_value_t = defaults::fd_step())]
    #[serde(default = "defaults::fd_step")]
    pub fd_step: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Ball,
    Ellipsoid,
    Egg,
    Worm,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SideArg {
    Inner,
    Outer,
}

/// Domain selection shared by `estimate` and `criterion`.
#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DomainArgs {
    #[arg(long, value_enum)]
    pub domain: DomainKind,
    /// Complex dimension of the ball.
    #[arg(long, default_value_t = defaults::n())]
    #[serde(default = "defaults::n")]
    pub n: usize,
    /// Ellipsoid semi-axes, one per complex coordinate (default 2,1).
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub axes: Option<Vec<f64>>,
    /// Egg exponents m_j in Σ|z_j|^{2m_j} (default 1,2).
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub exponents: Option<Vec<u32>>,
    /// Worm winding parameter.
    #[arg(long)]
    #[serde(default)]
    pub beta: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub domain: DomainArgs,
    #[arg(long, value_enum)]
    pub side: SideArg,
    #[arg(long, default_value_t = defaults::shell_samples())]
    #[serde(default = "defaults::shell_samples")]
    pub samples: usize,
    #[arg(long, default_value_t = defaults::depth_min())]
    #[serde(default = "defaults::depth_min")]
    pub depth_min: f64,
    #[arg(long, default_value_t = defaults::depth_max())]
    #[serde(default = "defaults::depth_max")]
    pub depth_max: f64,
    #[arg(long, default_value_t = defaults::grid_step())]
    #[serde(default = "defaults::grid_step")]
    pub step: f64,
    #[arg(long, default_value_t = defaults::eta_max())]
    #[serde(default = "defaults::eta_max")]
    pub eta_max: f64,
    #[arg(long, default_value_t = defaults::floor())]
    #[serde(default = "defaults::floor")]
    pub floor: f64,
    #[arg(long, default_value_t = defaults::seed())]
    #[serde(default = "defaults::seed")]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsiArg {
    None,
    Riccati,
    Linear,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CriterionArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub domain: DomainArgs,
    #[arg(long)]
    pub eta2: f64,
    #[arg(long, value_enum, default_value = "none")]
    #[serde(default = "psi_none")]
    pub psi: PsiArg,
    /// Σ samples (worm) or boundary samples (other domains).
    #[arg(long, default_value_t = defaults::sigma_samples())]
    #[serde(default = "defaults::sigma_samples")]
    pub m: usize,
    #[arg(long, default_value_t = defaults::seed())]
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[arg(long, default_value_t = defaults::fd_step())]
    #[serde(default = "defaults::fd_step")]
    pub fd_step: f64,
}

fn psi_none() -> PsiArg {
    PsiArg::None
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct RiccatiArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long)]
    pub phi: f64,
    #[arg(long)]
    pub t0: f64,
    #[arg(long)]
    pub t1: f64,
    #[arg(long, default_value_t = defaults::rk_step())]
    #[serde(default = "defaults::rk_step")]
    pub step: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BodyKind {
    Disc,
    Ellipse,
    Ellipsoid,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ConvexifyArgs {
    #[arg(long, value_enum)]
    pub body: BodyKind,
    /// Semi-axes: one value (disc radius), two (ellipse) or four (R^4 ellipsoid).
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub axes: Option<Vec<f64>>,
    #[arg(long, default_value_t = defaults::k())]
    #[serde(default = "defaults::k")]
    pub k: usize,
    #[arg(long, default_value_t = defaults::hessian_samples())]
    #[serde(default = "defaults::hessian_samples")]
    pub hessian_samples: usize,
    #[arg(long, default_value_t = defaults::boundary_samples())]
    #[serde(default = "defaults::boundary_samples")]
    pub boundary_samples: usize,
    #[arg(long, default_value_t = defaults::seed())]
    #[serde(default = "defaults::seed")]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = defaults::selftest_beta())]
    #[serde(default = "defaults::selftest_beta")]
    pub beta: f64,
    #[arg(long, default_value_t = defaults::selftest_samples())]
    #[serde(default = "defaults::selftest_samples")]
    pub m: usize,
    #[arg(long, default_value_t = defaults::seed())]
    #[serde(default = "defaults::seed")]
    pub seed: u64,
}
