//! Seeded Gaussian search directions and the squared normalized projection.
//!
//! Every Monte Carlo trial owns one [`SeedStream`]. Streams are addressed by
//! `(master_seed, stream_index)`: the master seed keys a ChaCha generator and
//! the stream index selects one of its 2^64 independent counter streams, so a
//! trial's draws never depend on how many other trials ran before it or on
//! which worker ran it.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};

/// Draws with a squared norm below this are treated as degenerate and redrawn.
pub const DEGENERATE_NORM_SQ: f64 = 1e-300;

/// Tolerance on `| ‖a‖ - 1 |` accepted by [`squared_normalized_projection`].
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// A reproducible source of standard normal variates for one trajectory.
#[derive(Debug, Clone)]
pub struct SeedStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha12Rng,
    rejections: u64,
}

impl SeedStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        Self {
            master_seed,
            stream_index,
            rng,
            rejections: 0,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Number of degenerate directions redrawn so far on this stream.
    pub fn rejections(&self) -> u64 {
        self.rejections
    }

    /// Position of the underlying block counter, in 32-bit words.
    pub fn word_pos(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// One standard normal variate.
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// One uniform variate on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        rand::Rng::gen::<f64>(&mut self.rng)
    }
}

/// A Gaussian search direction together with its cached squared norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    u: Vec<f64>,
    norm_sq: f64,
}

impl Direction {
    /// Wraps an explicit vector. Fails on an empty or (numerically) zero vector.
    pub fn from_vec(u: Vec<f64>) -> Result<Self> {
        if u.is_empty() {
            return Err(ZoError::InvalidDimension);
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(ZoError::invalid("direction has non-finite coordinates"));
        }
        let norm_sq = norm_sq(&u);
        if norm_sq < DEGENERATE_NORM_SQ {
            return Err(ZoError::invalid("direction has zero norm"));
        }
        Ok(Self { u, norm_sq })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.u
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.u
    }
}

/// Draws `u ~ N(0, I_d)`, redrawing (and counting) degenerate directions.
pub fn sample_direction(stream: &mut SeedStream, d: usize) -> Result<Direction> {
    if d == 0 {
        return Err(ZoError::InvalidDimension);
    }
    loop {
        let u: Vec<f64> = (0..d).map(|_| stream.standard_normal()).collect();
        let norm_sq = norm_sq(&u);
        if norm_sq >= DEGENERATE_NORM_SQ {
            return Ok(Direction { u, norm_sq });
        }
        stream.rejections += 1;
    }
}

/// `(u·a)² / ‖u‖²` for a unit vector `a`.
///
/// Exactly 1 when `d = 1`. Results are clamped into `[0, 1]` to absorb
/// rounding in the last bit.
pub fn squared_normalized_projection(u: &Direction, a: &[f64]) -> Result<f64> {
    if a.len() != u.dim() {
        return Err(ZoError::invalid(format!(
            "unit vector has length {} but direction has length {}",
            a.len(),
            u.dim()
        )));
    }
    let a_norm = norm_sq(a).sqrt();
    if !a_norm.is_finite() || (a_norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(ZoError::invalid(format!(
            "projection target must be a unit vector, got norm {a_norm}"
        )));
    }
    if u.dim() == 1 {
        return Ok(1.0);
    }
    Ok(projection_ratio(u.as_slice(), a, u.norm_sq(), 1.0))
}

/// `(u·v)² / (‖u‖² ‖v‖²)` without validation. Callers guarantee both norms are
/// positive.
pub(crate) fn projection_ratio(u: &[f64], v: &[f64], u_norm_sq: f64, v_norm_sq: f64) -> f64 {
    if u.len() == 1 {
        return 1.0;
    }
    let dot = dot(u, v);
    (dot * dot / (u_norm_sq * v_norm_sq)).clamp(0.0, 1.0)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}
