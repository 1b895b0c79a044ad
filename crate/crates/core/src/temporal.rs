//! Coefficient processes `Z_n(t)` on `[0, 1]`.
//!
//! Three kernels are supported:
//!
//! * squared exponential, `κ(s, t) = exp(-r (s - t)²)`, sampled on a uniform
//!   time grid and interpolated linearly;
//! * periodic, a finite Fourier series whose `k`-th harmonic is damped by
//!   `exp(-2 r π² k²)`;
//! * autonomous, a single Gaussian constant in time.
//!
//! Every kernel carries a per-mode scale `α` multiplying the process, so the
//! covariance is `α² κ`. A scale of zero gives the degenerate zero process.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Diagonal jitter added to the squared-exponential covariance before factorization.
pub const SQEXP_JITTER: f64 = 1e-10;
pub const DEFAULT_TIME_GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelTag {
    /// Stationary squared-exponential kernel.
    #[serde(rename = "d1")]
    SquaredExponential,
    /// Periodic Fourier kernel.
    #[serde(rename = "d2")]
    Periodic,
    /// Constant-in-time coefficients.
    #[serde(rename = "d3")]
    Autonomous,
}

impl std::str::FromStr for KernelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "d1" | "sqexp" | "squared-exponential" => Ok(KernelTag::SquaredExponential),
            "d2" | "periodic" => Ok(KernelTag::Periodic),
            "d3" | "autonomous" => Ok(KernelTag::Autonomous),
            other => Err(Error::validation("kernel", format!("unknown kernel {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelKind {
    pub tag: KernelTag,
    pub regularity: f64,
    /// Highest harmonic of the periodic kernel.
    pub temporal_max: u32,
    pub per_mode_scale: f64,
    /// Node count of the squared-exponential time grid.
    pub time_grid: usize,
}

impl KernelKind {
    pub fn new(tag: KernelTag, regularity: f64) -> Self {
        KernelKind {
            tag,
            regularity,
            temporal_max: 10,
            per_mode_scale: 1.0,
            time_grid: DEFAULT_TIME_GRID,
        }
    }

    pub fn periodic(regularity: f64, temporal_max: u32) -> Self {
        KernelKind {
            temporal_max,
            ..Self::new(KernelTag::Periodic, regularity)
        }
    }

    pub fn autonomous(regularity: f64) -> Self {
        Self::new(KernelTag::Autonomous, regularity)
    }

    pub fn squared_exponential(regularity: f64, time_grid: usize) -> Self {
        KernelKind {
            time_grid,
            ..Self::new(KernelTag::SquaredExponential, regularity)
        }
    }

    pub fn with_scale(self, per_mode_scale: f64) -> Self {
        KernelKind {
            per_mode_scale,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.regularity > 0.0 && self.regularity.is_finite()) {
            return Err(Error::validation("regularity", "must be positive and finite"));
        }
        if !(self.per_mode_scale >= 0.0 && self.per_mode_scale.is_finite()) {
            return Err(Error::validation("per_mode_scale", "must be nonnegative and finite"));
        }
        match self.tag {
            KernelTag::Periodic if self.temporal_max < 1 => {
                Err(Error::validation("temporal_max", "must be at least 1"))
            }
            KernelTag::SquaredExponential if self.time_grid < 2 => {
                Err(Error::validation("time_grid", "needs at least 2 nodes"))
            }
            _ => Ok(()),
        }
    }

    /// Damping `exp(-2 r π² k²)` of the `k`-th periodic harmonic.
    pub fn harmonic_damping(&self, k: u32) -> f64 {
        (-2.0 * self.regularity * PI * PI * f64::from(k * k)).exp()
    }

    /// Number of standard Gaussians one sample consumes, when grid independent.
    pub fn gaussians_per_sample(&self) -> Option<usize> {
        match self.tag {
            KernelTag::Periodic => Some(1 + 2 * self.temporal_max as usize),
            KernelTag::Autonomous => Some(1),
            KernelTag::SquaredExponential => None,
        }
    }

    pub fn kernel_value(&self, t1: f64, t2: f64) -> f64 {
        let scale2 = self.per_mode_scale * self.per_mode_scale;
        let base = match self.tag {
            KernelTag::SquaredExponential => (-self.regularity * (t1 - t2).powi(2)).exp(),
            KernelTag::Periodic => {
                let dt = t1 - t2;
                1.0 + (1..=self.temporal_max)
                    .map(|k| {
                        let d = self.harmonic_damping(k);
                        2.0 * d * d * (2.0 * PI * f64::from(k) * dt).cos()
                    })
                    .sum::<f64>()
            }
            KernelTag::Autonomous => 1.0,
        };
        scale2 * base
    }
}

/// Realized path of one coefficient process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TemporalPayload {
    /// Standard-normal Fourier coefficients; `cos[k-1]`, `sin[k-1]` multiply harmonic `k`.
    Periodic { x0: f64, cos: Vec<f64>, sin: Vec<f64> },
    Constant { c: f64 },
    /// Path values at strictly increasing grid times, already scaled.
    Grid { times: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalSample {
    pub kind: KernelKind,
    pub payload: TemporalPayload,
}

/// Precomputed `cos(2πkt)`, `sin(2πkt)` for `k = 1..=temporal_max` and the damping factors.
#[derive(Debug, Clone)]
pub struct HarmonicTable {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl HarmonicTable {
    pub fn new(kind: &KernelKind, t: f64) -> Self {
        let n = kind.temporal_max as usize;
        let mut cos = Vec::with_capacity(n);
        let mut sin = Vec::with_capacity(n);
        for k in 1..=kind.temporal_max {
            let d = SQRT_2 * kind.harmonic_damping(k);
            let (s, c) = (2.0 * PI * f64::from(k) * t).sin_cos();
            cos.push(d * c);
            sin.push(d * s);
        }
        HarmonicTable { cos, sin }
    }
}

impl TemporalSample {
    pub fn constant(kind: KernelKind, c: f64) -> Self {
        TemporalSample {
            kind,
            payload: TemporalPayload::Constant { c },
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.payload, TemporalPayload::Constant { .. })
    }

    pub fn evaluate(&self, t: f64) -> Result<f64> {
        match &self.payload {
            TemporalPayload::Periodic { .. } => {
                Ok(self.evaluate_with(&HarmonicTable::new(&self.kind, t)))
            }
            TemporalPayload::Constant { c } => Ok(*c),
            TemporalPayload::Grid { times, values } => interpolate(times, values, t),
        }
    }

    /// Periodic evaluation against a shared harmonic table. Other payloads
    /// ignore the table, so callers must route them through [`Self::evaluate`].
    pub(crate) fn evaluate_with(&self, table: &HarmonicTable) -> f64 {
        match &self.payload {
            TemporalPayload::Periodic { x0, cos, sin } => {
                let mut acc = *x0;
                for k in 0..cos.len() {
                    acc += cos[k] * table.cos[k] + sin[k] * table.sin[k];
                }
                self.kind.per_mode_scale * acc
            }
            TemporalPayload::Constant { c } => *c,
            TemporalPayload::Grid { .. } => f64::NAN,
        }
    }

    /// Upper bound on `sup_t |Z(t)|` for this realization.
    pub fn sup_bound(&self) -> f64 {
        match &self.payload {
            TemporalPayload::Periodic { x0, cos, sin } => {
                let tail: f64 = (0..cos.len())
                    .map(|k| {
                        SQRT_2 * self.kind.harmonic_damping(k as u32 + 1) * (cos[k].abs() + sin[k].abs())
                    })
                    .sum();
                self.kind.per_mode_scale * (x0.abs() + tail)
            }
            TemporalPayload::Constant { c } => c.abs(),
            TemporalPayload::Grid { values, .. } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> Result<f64> {
    let (start, end) = (times[0], times[times.len() - 1]);
    if !(t >= start && t <= end) {
        return Err(Error::OutOfRange { t, start, end });
    }
    let i = times.partition_point(|&s| s <= t);
    if i >= times.len() {
        return Ok(values[values.len() - 1]);
    }
    let (t0, t1) = (times[i - 1], times[i]);
    let a = (t - t0) / (t1 - t0);
    Ok(values[i - 1] * (1.0 - a) + values[i] * a)
}

/// Kernel description plus any precomputed factorization, reused across samples.
#[derive(Debug, Clone)]
pub struct TemporalSampler {
    kind: KernelKind,
    grid: Option<(Vec<f64>, DMatrix<f64>)>,
}

impl TemporalSampler {
    pub fn new(kind: KernelKind) -> Result<Self> {
        kind.validate()?;
        let grid = match kind.tag {
            KernelTag::SquaredExponential => {
                let n = kind.time_grid;
                let times: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
                let unit = KernelKind {
                    per_mode_scale: 1.0,
                    ..kind
                };
                let cov = DMatrix::from_fn(n, n, |i, j| {
                    unit.kernel_value(times[i], times[j]) + if i == j { SQEXP_JITTER } else { 0.0 }
                });
                let chol = cov.cholesky().ok_or(Error::FactorizationFailure {
                    jitter: SQEXP_JITTER,
                })?;
                Some((times, chol.l()))
            }
            _ => None,
        };
        Ok(TemporalSampler { kind, grid })
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TemporalSample {
        let kind = self.kind;
        let payload = match kind.tag {
            KernelTag::Periodic => {
                let x0 = rng.sample(StandardNormal);
                let n = kind.temporal_max as usize;
                let mut cos = Vec::with_capacity(n);
                let mut sin = Vec::with_capacity(n);
                for _ in 0..n {
                    cos.push(rng.sample(StandardNormal));
                    sin.push(rng.sample(StandardNormal));
                }
                TemporalPayload::Periodic { x0, cos, sin }
            }
            KernelTag::Autonomous => {
                let x: f64 = rng.sample(StandardNormal);
                TemporalPayload::Constant {
                    c: kind.per_mode_scale * x,
                }
            }
            KernelTag::SquaredExponential => {
                let (times, l) = self.grid.as_ref().expect("grid prepared for squared exponential");
                let z = DVector::from_fn(times.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
                let values = (l * z).iter().map(|v| kind.per_mode_scale * v).collect();
                TemporalPayload::Grid {
                    times: times.clone(),
                    values,
                }
            }
        };
        TemporalSample { kind, payload }
    }
}

/// One-off sample; prefer [`TemporalSampler`] when drawing repeatedly.
pub fn sample<R: Rng + ?Sized>(kind: KernelKind, rng: &mut R) -> Result<TemporalSample> {
    Ok(TemporalSampler::new(kind)?.sample(rng))
}
