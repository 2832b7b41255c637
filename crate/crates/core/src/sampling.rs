//! Low-discrepancy boundary and shell sampling.
//!
//! Points come from a Halton sequence with a seeded Cranley–Patterson
//! shift. Boundary seeds are mapped onto `∂Ω`, then pushed along the real
//! normal line to a prescribed level `ρ = ±depth`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{DefiningFunction, DomainSpec, WormProfile};
use crate::error::{invalid, Error, Result};
use crate::jets::{evaluate_jet, evaluate_value};

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % b) as f64;
        index /= b;
    }
    r
}

/// Shifted Halton points in `[0,1)^dim`.
#[derive(Clone, Debug)]
pub struct QuasiRandom {
    shift: Vec<f64>,
}

impl QuasiRandom {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim > PRIMES.len() {
            return Err(invalid(
                "dim",
                format!("at most {} dimensions", PRIMES.len()),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            shift: (0..dim).map(|_| rng.gen::<f64>()).collect(),
        })
    }

    /// The `i`-th point; index 0 is skipped so the origin never appears.
    pub fn point(&self, i: usize) -> Vec<f64> {
        self.shift
            .iter()
            .zip(PRIMES)
            .map(|(s, p)| (halton(i as u64 + 1, p) + s).fract())
            .collect()
    }
}

/// Which side of `∂Ω` a shell lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Inner,
    Outer,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Inner => -1.0,
            Side::Outer => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellConfig {
    pub depth_min: f64,
    pub depth_max: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ShellConfig {
    fn default() -> Self {
        Self {
            depth_min: 1e-3,
            depth_max: 1e-2,
            samples: 2000,
            seed: 7,
        }
    }
}

impl ShellConfig {
    fn validate(&self) -> Result<()> {
        if !(self.depth_min > 0.0 && self.depth_max >= self.depth_min) {
            return Err(invalid(
                "shell",
                format!(
                    "need 0 < depth_min <= depth_max, got ({}, {})",
                    self.depth_min, self.depth_max
                ),
            ));
        }
        Ok(())
    }
}

fn gaussian_pair(u1: f64, u2: f64) -> (f64, f64) {
    let r = (-2.0 * u1.max(1e-300).ln()).sqrt();
    (r * (TAU * u2).cos(), r * (TAU * u2).sin())
}

/// The point `t·u` with `ρ(t·u) = 0`, for bodies star-shaped about 0.
fn radial_root(rho: &DefiningFunction, u: &[f64]) -> Result<Vec<f64>> {
    let at = |t: f64| -> Result<f64> {
        let x: Vec<f64> = u.iter().map(|v| t * v).collect();
        evaluate_value(rho, &x)
    };
    if at(0.0)? >= 0.0 {
        return Err(invalid("domain", "origin is not interior"));
    }
    let mut hi = 1.0;
    while at(hi)? <= 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(invalid("domain", "unbounded along a sampled ray"));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    Ok(u.iter().map(|v| t * v).collect())
}

/// Boundary point of the worm from `(ℓ, θ, γ)`: `w = e^{ℓ/2 + iθ}` and
/// `z = e^{iℓ}(1 − √(1−φ(ℓ)) e^{iγ})`. `γ = 0` lands on `Σ`.
pub fn worm_boundary_point(profile: &WormProfile, ell: f64, theta: f64, gamma: f64) -> Vec<f64> {
    let (phi, _, _) = profile.phi(ell);
    let rad = (1.0 - phi).max(0.0).sqrt();
    let (cu, su) = (ell.cos(), ell.sin());
    let (cg, sg) = (rad * gamma.cos(), rad * gamma.sin());
    // e^{iℓ}(1 − rad e^{iγ})
    let re = 1.0 - cg;
    let im = -sg;
    let r = (0.5 * ell).exp();
    vec![
        cu * re - su * im,
        su * re + cu * im,
        r * theta.cos(),
        r * theta.sin(),
    ]
}

/// `count` boundary points for catalogued domains. Worm points are drawn
/// from a band of half-width `gamma_max` around `Σ`.
pub fn boundary_seeds(rho: &DefiningFunction, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    match &rho.spec {
        DomainSpec::Worm { .. } => {
            let profile = rho
                .worm_profile()
                .ok_or_else(|| invalid("domain", "worm profile unavailable"))?;
            let q = QuasiRandom::new(3, seed)?;
            let h = profile.flat_half_width();
            Ok((0..count)
                .map(|i| {
                    let u = q.point(i);
                    let ell = -h + 2.0 * h * u[0];
                    worm_boundary_point(&profile, ell, TAU * u[1], 0.2 * (2.0 * u[2] - 1.0))
                })
                .collect())
        }
        DomainSpec::Ball { .. } | DomainSpec::Ellipsoid { .. } | DomainSpec::Egg { .. } => {
            let m = 2 * rho.n();
            let q = QuasiRandom::new(m + m % 2, seed)?;
            (0..count)
                .into_par_iter()
                .map(|i| {
                    let u = q.point(i);
                    let mut g: Vec<f64> = u
                        .chunks_exact(2)
                        .flat_map(|c| {
                            let (a, b) = gaussian_pair(c[0], c[1]);
                            [a, b]
                        })
                        .collect();
                    g.truncate(m);
                    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
                    let dir: Vec<f64> = g.iter().map(|v| v / norm).collect();
                    radial_root(rho, &dir)
                })
                .collect()
        }
        _ => Err(invalid(
            "domain",
            "no built-in boundary sampler; supply boundary points",
        )),
    }
}

/// Moves `b` along its real unit normal to the level `ρ = target`.
pub fn push_to_level(rho: &DefiningFunction, b: &[f64], target: f64) -> Result<Vec<f64>> {
    let jet = evaluate_jet(rho, b)?;
    let gnorm = jet.grad().iter().map(|g| g * g).sum::<f64>().sqrt();
    if !(gnorm > 0.0) {
        return Err(Error::VanishingGradient(b.to_vec()));
    }
    let n: Vec<f64> = jet.grad().iter().map(|g| g / gnorm).collect();
    let mut t = (target - jet.value()) / gnorm;
    let mut residual = f64::INFINITY;
    for _ in 0..60 {
        let x: Vec<f64> = b.iter().zip(&n).map(|(p, d)| p + t * d).collect();
        let j = evaluate_jet(rho, &x)?;
        residual = j.value() - target;
        if residual.abs() <= 1e-13 * (1.0 + target.abs()) {
            return Ok(x);
        }
        let slope: f64 = j.grad().iter().zip(&n).map(|(g, d)| g * d).sum();
        if !(slope.abs() > 0.0) {
            return Err(Error::VanishingGradient(x));
        }
        t -= residual / slope;
    }
    Err(Error::NonConvergence {
        iterations: 60,
        residual: residual.abs(),
    })
}

/// Shell points at levels `±depth`, `depth ∈ [depth_min, depth_max]`,
/// anchored at the given boundary points. Output order follows the input.
pub fn shell_from_boundary(
    rho: &DefiningFunction,
    boundary: &[Vec<f64>],
    side: Side,
    cfg: &ShellConfig,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let q = QuasiRandom::new(1, cfg.seed ^ 0x5EED)?;
    let span = cfg.depth_max - cfg.depth_min;
    boundary
        .par_iter()
        .enumerate()
        .map(|(i, b)| {
            let depth = cfg.depth_min + span * q.point(i)[0];
            push_to_level(rho, b, side.sign() * depth)
        })
        .collect()
}

/// `cfg.samples` shell points for a catalogued domain.
pub fn shell_points(
    rho: &DefiningFunction,
    side: Side,
    cfg: &ShellConfig,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let seeds = boundary_seeds(rho, cfg.samples, cfg.seed)?;
    shell_from_boundary(rho, &seeds, side, cfg)
}

/// Unit-speed angle grid helper used by several samplers.
pub fn golden_angle(i: usize) -> f64 {
    let g = PI * (3.0 - 5f64.sqrt());
    (i as f64 * g).rem_euclid(TAU)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{make_ball, make_ellipsoid, make_worm};

    #[test]
    fn halton_base_two() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(2, 2), 0.25);
        assert_eq!(halton(3, 2), 0.75);
        assert!((halton(1, 3) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn ball_shell_levels() {
        let b = make_ball(2).unwrap();
        let cfg = ShellConfig {
            samples: 50,
            ..Default::default()
        };
        for side in [Side::Inner, Side::Outer] {
            for x in shell_points(&b, side, &cfg).unwrap() {
                let r = evaluate_value(&b, &x).unwrap();
                assert!(side.sign() * r >= cfg.depth_min * (1.0 - 1e-9));
                assert!(side.sign() * r <= cfg.depth_max * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn seeds_lie_on_ellipsoid() {
        let e = make_ellipsoid(&[2.0, 1.0]).unwrap();
        for x in boundary_seeds(&e, 40, 3).unwrap() {
            assert!(evaluate_value(&e, &x).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn worm_seeds_lie_on_boundary() {
        let w = make_worm(WormProfile::new(0.6 * PI).unwrap()).unwrap();
        for x in boundary_seeds(&w, 40, 3).unwrap() {
            assert!(evaluate_value(&w, &x).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let b = make_ball(2).unwrap();
        let cfg = ShellConfig {
            samples: 20,
            ..Default::default()
        };
        assert_eq!(
            shell_points(&b, Side::Outer, &cfg).unwrap(),
            shell_points(&b, Side::Outer, &cfg).unwrap()
        );
    }
}
