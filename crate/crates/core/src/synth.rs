//! Deterministic synthetic runs with the feature geometry of a trained
//! classifier: known-class features lie along class directions with large
//! norms, unknown features have smaller norms.
//!
//! Randomness: ChaCha8 seeded with `seed`. Stream 0 draws the class
//! directions; sample `i` (knowns first, class by class, then unknowns)
//! draws from stream `i + 1`, so samples can be generated in any order or in
//! parallel with identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::runio::{EvaluationRun, Label, Sample};

/// Smallest feature norm emitted; noisier draws are clamped up to it.
pub const NORM_FLOOR: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_classes: usize,
    pub feature_dim: usize,
    pub samples_per_class: usize,
    pub num_unknown: usize,
    /// Mean feature norm of known samples.
    pub known_norm: f64,
    /// Mean feature norm of unknown samples.
    pub unknown_norm: f64,
    /// Per-component standard deviation of the Gaussian perturbation added
    /// to a known sample's class direction before renormalizing.
    pub angular_noise: f64,
    /// Standard deviation of the Gaussian noise added to every norm.
    pub norm_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_classes: 6,
            feature_dim: 128,
            samples_per_class: 100,
            num_unknown: 400,
            known_norm: 8.0,
            unknown_norm: 3.0,
            angular_noise: 0.2,
            norm_noise: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |msg: String| Err(SynthError::InvalidConfig(msg));
        if self.num_classes < 2 {
            return fail(format!("num_classes must be >= 2, got {}", self.num_classes));
        }
        if self.feature_dim < 2 {
            return fail(format!("feature_dim must be >= 2, got {}", self.feature_dim));
        }
        if self.samples_per_class < 1 {
            return fail("samples_per_class must be >= 1".into());
        }
        if self.num_unknown < 1 {
            return fail("num_unknown must be >= 1".into());
        }
        for (name, v) in [("known_norm", self.known_norm), ("unknown_norm", self.unknown_norm)] {
            if !v.is_finite() || v <= 0.0 {
                return fail(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        for (name, v) in [("angular_noise", self.angular_noise), ("norm_noise", self.norm_noise)] {
            if !v.is_finite() || v < 0.0 {
                return fail(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        Ok(())
    }
}

/// A generated run plus generation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedRun {
    pub run: EvaluationRun,
    /// Samples whose noisy norm fell below [`NORM_FLOOR`] and was clamped.
    pub clamped_norms: usize,
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit class directions.
///
/// - `D >= C`: Gram-Schmidt orthonormalization of Gaussian draws.
/// - `D == 2 < C`: angles `2 pi k / C`.
/// - otherwise: independent normalized Gaussian draws.
pub fn class_directions(num_classes: usize, feature_dim: usize, seed: u64) -> Vec<Vec<f64>> {
    if feature_dim == 2 && num_classes > 2 {
        return (0..num_classes)
            .map(|k| {
                let angle = std::f64::consts::TAU * k as f64 / num_classes as f64;
                vec![angle.cos(), angle.sin()]
            })
            .collect();
    }
    let mut rng = rng_for(seed, 0);
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(num_classes);
    while dirs.len() < num_classes {
        let mut v = gaussian_vec(&mut rng, feature_dim);
        if feature_dim >= num_classes {
            for d in &dirs {
                let p = dot(&v, d);
                v.iter_mut().zip(d).for_each(|(x, y)| *x -= p * y);
            }
        }
        // Redraw degenerate vectors; practically never taken.
        if norm(&v) > 1e-8 {
            dirs.push(normalize(v));
        }
    }
    dirs
}

/// Direction of an unknown sample: uniform on the unit sphere of the
/// subspace spanned by the class directions (all of R^D when D < C).
fn unknown_direction(rng: &mut ChaCha8Rng, dirs: &[Vec<f64>], dim: usize) -> Vec<f64> {
    loop {
        let v = if dim >= dirs.len() && dim != 2 || dim == 2 && dirs.len() == 2 {
            let coeffs = gaussian_vec(rng, dirs.len());
            let mut v = vec![0.0; dim];
            for (c, d) in coeffs.iter().zip(dirs) {
                v.iter_mut().zip(d).for_each(|(x, y)| *x += c * y);
            }
            v
        } else {
            gaussian_vec(rng, dim)
        };
        if norm(&v) > 1e-12 {
            return normalize(v);
        }
    }
}

pub fn generate_run(cfg: &SynthConfig) -> Result<EvaluationRun, SynthError> {
    generate(cfg).map(|g| g.run)
}

pub fn generate(cfg: &SynthConfig) -> Result<GeneratedRun, SynthError> {
    cfg.validate()?;
    let dirs = class_directions(cfg.num_classes, cfg.feature_dim, cfg.seed);
    let num_known = cfg.num_classes * cfg.samples_per_class;
    let total = num_known + cfg.num_unknown;

    let generated: Vec<(Sample, bool)> = (0..total)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(cfg.seed, i as u64 + 1);
            let (id, label, direction, mean_norm) = if i < num_known {
                let class = i / cfg.samples_per_class;
                let mut v = dirs[class].clone();
                if cfg.angular_noise > 0.0 {
                    let noise = gaussian_vec(&mut rng, cfg.feature_dim);
                    v.iter_mut()
                        .zip(&noise)
                        .for_each(|(x, n)| *x += cfg.angular_noise * n);
                }
                let id = format!("known_{class}_{}", i % cfg.samples_per_class);
                (id, Label::Known(class), normalize(v), cfg.known_norm)
            } else {
                let v = unknown_direction(&mut rng, &dirs, cfg.feature_dim);
                (format!("unknown_{}", i - num_known), Label::Unknown, v, cfg.unknown_norm)
            };
            let z: f64 = StandardNormal.sample(&mut rng);
            let raw = mean_norm + cfg.norm_noise * z;
            let clamped = raw < NORM_FLOOR;
            let magnitude = raw.max(NORM_FLOOR);
            let features: Vec<f64> = direction.iter().map(|x| magnitude * x).collect();
            let logits = dirs.iter().map(|d| dot(&features, d)).collect();
            (
                Sample {
                    id,
                    label,
                    logits,
                    features: Some(features),
                },
                clamped,
            )
        })
        .collect();

    let clamped_norms = generated.iter().filter(|g| g.1).count();
    let samples = generated.into_iter().map(|g| g.0).collect();
    let run = EvaluationRun::new(cfg.num_classes, samples)
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    Ok(GeneratedRun { run, clamped_norms })
}
