//! Synthetic series generators with non-negative exponential noise.
//!
//! Randomness comes from ChaCha8 seeded with `seed` on stream `stream`, so
//! every series has its own reproducible stream. Draw order is fixed: the
//! random frequency first (when the family has one), then one noise draw per
//! point.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    AdditiveFixed,
    AdditiveRandom,
    MultiplicativeFixed,
    MultiplicativeRandom,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub family: Family,
    pub num_points: usize,
    #[serde(default)]
    pub start_time: i64,
    #[serde(default)]
    pub noise_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
}

impl GenSpec {
    pub fn new(family: Family, num_points: usize) -> Self {
        GenSpec {
            family,
            num_points,
            start_time: 0,
            noise_scale: 0.0,
            period: None,
            seed: 0,
            stream: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_points < 1 {
            return Err(Error::Schema("num_points: must be at least 1".into()));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::Schema("noise_scale: must be finite and non-negative".into()));
        }
        match (self.family, self.period) {
            (Family::Periodic, Some(p)) if p > 0.0 && p.is_finite() => Ok(()),
            (Family::Periodic, _) => Err(Error::Schema("period: periodic family needs period > 0".into())),
            _ => Ok(()),
        }
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    fn times(&self) -> Vec<i64> {
        (0..self.num_points as i64).map(|k| self.start_time + k).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenOutput {
    pub t: Vec<i64>,
    pub y: Vec<f64>,
    pub y_base: Vec<f64>,
    pub alpha_drawn: Option<f64>,
}

/// Exponential variate with scale `beta` from a uniform `u ∈ [0, 1)`.
pub fn exponential_from_uniform(u: f64, beta: f64) -> f64 {
    -beta * (1.0 - u).ln()
}

fn draw_noise(rng: &mut ChaCha8Rng, n: usize, beta: f64) -> Vec<f64> {
    if beta == 0.0 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|_| exponential_from_uniform(rng.gen::<f64>(), beta))
        .collect()
}

/// `n` i.i.d. Exponential(`beta`) draws on stream 0 of `seed`.
pub fn exponential_noise(n: usize, beta: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_noise(&mut rng, n, beta)
}

pub fn additive_base(t: f64) -> f64 {
    2.0 * t.sin() + 2.0 * (t / 2.0).cos() + t / 4.0 + 4.0
}

pub fn multiplicative_base(t: f64) -> f64 {
    (t / 100.0).exp() * t.sin() + 3.0 * (t / 2.0).cos() + t / 2.0
}

pub fn periodic_base(t: f64, period: f64) -> f64 {
    (2.0 * PI * t / period).sin()
}

fn build(spec: &GenSpec, alpha_range: Option<(f64, f64)>, base: impl Fn(f64) -> f64) -> GenOutput {
    let mut rng = spec.rng();
    let alpha_drawn = alpha_range.map(|(a, b)| a + (b - a) * rng.gen::<f64>());
    let t = spec.times();
    let y_base: Vec<f64> = t
        .iter()
        .map(|&ti| {
            let tf = ti as f64;
            base(tf) + alpha_drawn.map_or(0.0, |a| (a * tf).sin())
        })
        .collect();
    let noise = draw_noise(&mut rng, t.len(), spec.noise_scale);
    let y = y_base.iter().zip(&noise).map(|(b, e)| b + e).collect();
    GenOutput {
        t,
        y,
        y_base,
        alpha_drawn,
    }
}

/// Sinusoids plus a linear trend; the random variant adds `sin(αt)` with
/// `α ~ U(0, 5)`.
pub fn generate_additive(spec: &GenSpec) -> Result<GenOutput> {
    spec.validate()?;
    let range = match spec.family {
        Family::AdditiveFixed => None,
        Family::AdditiveRandom => Some((0.0, 5.0)),
        other => return Err(Error::Schema(format!("family: {other:?} is not additive"))),
    };
    Ok(build(spec, range, additive_base))
}

/// Exponentially growing seasonal term plus a linear trend; the random
/// variant adds `sin(αt)` with `α ~ U(5, 10)`.
pub fn generate_multiplicative(spec: &GenSpec) -> Result<GenOutput> {
    spec.validate()?;
    let range = match spec.family {
        Family::MultiplicativeFixed => None,
        Family::MultiplicativeRandom => Some((5.0, 10.0)),
        other => return Err(Error::Schema(format!("family: {other:?} is not multiplicative"))),
    };
    Ok(build(spec, range, multiplicative_base))
}

/// `sin(2πt/P)` plus noise.
pub fn generate_periodic(spec: &GenSpec) -> Result<GenOutput> {
    spec.validate()?;
    if spec.family != Family::Periodic {
        return Err(Error::Schema(format!("family: {:?} is not periodic", spec.family)));
    }
    let period = spec.period.expect("validated");
    Ok(build(spec, None, |t| periodic_base(t, period)))
}

pub fn generate(spec: &GenSpec) -> Result<GenOutput> {
    match spec.family {
        Family::AdditiveFixed | Family::AdditiveRandom => generate_additive(spec),
        Family::MultiplicativeFixed | Family::MultiplicativeRandom => generate_multiplicative(spec),
        Family::Periodic => generate_periodic(spec),
    }
}
