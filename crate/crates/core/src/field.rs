//! Random Hamiltonians `H(t, x) = Σ w_n Z_n(t) e_n(x)` with spectral weights
//! `w_n = exp(-λ_n r / 2)`.
//!
//! Evaluation goes through a [`SpatialSlice`]: the dense `(kx, ky)` coefficient
//! planes of `H(t, ·)` at a frozen time. Modes whose contribution is below
//! `NEGLIGIBLE_RELATIVE` of the largest one (an a-priori bound over all
//! times, including gradients) are left out of the slices; their total effect
//! is far below double-precision rounding of the retained sum.

use std::borrow::Cow;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{SpectralBasis, Trig, Truncation};
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::rng;
use crate::temporal::{
    HarmonicTable, KernelKind, KernelTag, TemporalPayload, TemporalSample, TemporalSampler,
    DEFAULT_TIME_GRID,
};
use crate::torus::{TorusPoint, Vec2};

const TAU: f64 = 2.0 * PI;

pub const NEGLIGIBLE_RELATIVE: f64 = 1e-20;
pub const DEFAULT_OSC_SPATIAL_GRID: usize = 128;
pub const DEFAULT_OSC_TIME_GRID: usize = 101;

/// Kernel template applied to every mode; regularity and temporal cap come
/// from the surrounding [`LawDefiningConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub tag: KernelTag,
    pub per_mode_scale: f64,
    pub time_grid: usize,
}

impl KernelSpec {
    pub fn new(tag: KernelTag) -> Self {
        KernelSpec {
            tag,
            per_mode_scale: 1.0,
            time_grid: DEFAULT_TIME_GRID,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawDefiningConfig {
    pub regularity: f64,
    pub truncation: Truncation,
    pub kernel: KernelSpec,
    pub seed: u64,
}

impl LawDefiningConfig {
    pub fn new(regularity: f64, truncation: Truncation, tag: KernelTag) -> Self {
        LawDefiningConfig {
            regularity,
            truncation,
            kernel: KernelSpec::new(tag),
            seed: 0,
        }
    }

    /// Periodic kernel, modes `1 ≤ kx, ky ≤ 25`, harmonics up to 10.
    pub fn reference(regularity: f64) -> Self {
        Self::new(regularity, Truncation::default(), KernelTag::Periodic)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        LawDefiningConfig { seed, ..self }
    }

    pub fn with_spatial_max(mut self, spatial_max: u32) -> Self {
        self.truncation.spatial_max = spatial_max;
        self
    }

    pub fn with_scale(mut self, per_mode_scale: f64) -> Self {
        self.kernel.per_mode_scale = per_mode_scale;
        self
    }

    pub fn kernel_kind(&self) -> KernelKind {
        KernelKind {
            tag: self.kernel.tag,
            regularity: self.regularity,
            temporal_max: self.truncation.temporal_max,
            per_mode_scale: self.kernel.per_mode_scale,
            time_grid: self.kernel.time_grid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.regularity > 0.0 && self.regularity.is_finite()) {
            return Err(Error::validation("regularity", "must be positive and finite"));
        }
        self.truncation.validate()?;
        self.kernel_kind().validate()
    }
}

/// `exp(-λ r / 2)`.
pub fn weight(lambda: f64, r: f64) -> f64 {
    (-0.5 * lambda * r).exp()
}

/// Number of standard Gaussians consumed by one draw.
pub fn gaussian_dimension(config: &LawDefiningConfig) -> Result<usize> {
    config.validate()?;
    let per_mode = config.kernel_kind().gaussians_per_sample().ok_or_else(|| {
        Error::Unsupported("the squared-exponential kernel dimension depends on its time grid".into())
    })?;
    Ok(SpectralBasis::new(config.truncation)?.len() * per_mode)
}

/// Analytic `Var[H(t, p)] = Σ w_n² κ_n(t, t) e_n(p)²`.
pub fn pointwise_variance(config: &LawDefiningConfig, t: f64, p: TorusPoint) -> Result<f64> {
    let basis = SpectralBasis::new(config.truncation)?;
    let kind = config.kernel_kind();
    let k = kind.kernel_value(t, t);
    Ok(basis
        .modes()
        .iter()
        .map(|m| {
            let w = weight(m.eigenvalue, config.regularity);
            let e = m.evaluate(p);
            w * w * k * e * e
        })
        .sum())
}

/// Coefficients of `H(t, ·)` at a frozen time, laid out as four dense
/// `dim × dim` planes indexed `kx * dim + ky` (one per [`Trig`]).
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSlice {
    dim: usize,
    planes: [Vec<f64>; 4],
}

#[derive(Debug, Default)]
pub struct SliceScratch {
    cx: Vec<f64>,
    sx: Vec<f64>,
    cy: Vec<f64>,
    sy: Vec<f64>,
    cyb: Vec<f64>,
    syb: Vec<f64>,
}

/// `cos(2π k x)`, `sin(2π k x)` for `k = 0..c.len()` by angle addition.
fn fill_trig(x: f64, c: &mut [f64], s: &mut [f64]) {
    if c.is_empty() {
        return;
    }
    let (s1, c1) = (TAU * x).sin_cos();
    c[0] = 1.0;
    s[0] = 0.0;
    for k in 1..c.len() {
        c[k] = c[k - 1] * c1 - s[k - 1] * s1;
        s[k] = s[k - 1] * c1 + c[k - 1] * s1;
    }
}

impl SpatialSlice {
    pub fn zeros(dim: usize) -> Self {
        SpatialSlice {
            dim,
            planes: std::array::from_fn(|_| vec![0.0; dim * dim]),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn add(&mut self, trig: Trig, kx: u32, ky: u32, c: f64) {
        let i = kx as usize * self.dim + ky as usize;
        self.planes[trig.plane()][i] += c;
    }

    /// `self += s · other`; both slices must share a dimension.
    pub fn add_scaled(&mut self, other: &SpatialSlice, s: f64) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.planes.iter_mut().zip(&other.planes) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
    }

    pub fn value_gradient(&self, p: Vec2, scratch: &mut SliceScratch) -> (f64, Vec2) {
        let d = self.dim;
        if d == 0 {
            return (0.0, [0.0, 0.0]);
        }
        let sc = scratch;
        for v in [&mut sc.cx, &mut sc.sx, &mut sc.cy, &mut sc.sy, &mut sc.cyb, &mut sc.syb] {
            v.resize(d, 0.0);
        }
        fill_trig(p[0], &mut sc.cx, &mut sc.sx);
        fill_trig(p[1], &mut sc.cy, &mut sc.sy);
        for b in 0..d {
            sc.cyb[b] = b as f64 * sc.cy[b];
            sc.syb[b] = b as f64 * sc.sy[b];
        }
        let [cc, cs, snc, ss] = &self.planes;
        let (mut value, mut gx, mut gy) = (0.0, 0.0, 0.0);
        for a in 0..d {
            let row = a * d..(a + 1) * d;
            let (cc, cs, snc, ss) = (&cc[row.clone()], &cs[row.clone()], &snc[row.clone()], &ss[row]);
            let (mut uc, mut us, mut vc, mut vs) = (0.0, 0.0, 0.0, 0.0);
            for b in 0..d {
                uc += cc[b] * sc.cy[b] + cs[b] * sc.sy[b];
                us += snc[b] * sc.cy[b] + ss[b] * sc.sy[b];
                vc += cs[b] * sc.cyb[b] - cc[b] * sc.syb[b];
                vs += ss[b] * sc.cyb[b] - snc[b] * sc.syb[b];
            }
            value += sc.cx[a] * uc + sc.sx[a] * us;
            gx += a as f64 * (sc.cx[a] * us - sc.sx[a] * uc);
            gy += sc.cx[a] * vc + sc.sx[a] * vs;
        }
        (value, [TAU * gx, TAU * gy])
    }

    /// Values on the `n × n` lattice `(i/n, j/n)`, row-major in `i`.
    pub fn lattice(&self, n: usize, out: &mut Vec<f64>) {
        out.clear();
        let d = self.dim;
        if d == 0 {
            out.resize(n * n, 0.0);
            return;
        }
        let h = 1.0 / n as f64;
        let mut cxs = vec![0.0; n * d];
        let mut sxs = vec![0.0; n * d];
        for i in 0..n {
            let (c, s) = (&mut cxs[i * d..(i + 1) * d], &mut sxs[i * d..(i + 1) * d]);
            fill_trig(i as f64 * h, c, s);
        }
        // The lattice is symmetric in its axes, so the x tables double as y tables.
        let [cc, cs, snc, ss] = &self.planes;
        let mut uc = vec![0.0; n * d];
        let mut us = vec![0.0; n * d];
        for j in 0..n {
            let (cy, sy) = (&cxs[j * d..(j + 1) * d], &sxs[j * d..(j + 1) * d]);
            for a in 0..d {
                let (mut u, mut v) = (0.0, 0.0);
                for b in 0..d {
                    let k = a * d + b;
                    u += cc[k] * cy[b] + cs[k] * sy[b];
                    v += snc[k] * cy[b] + ss[k] * sy[b];
                }
                uc[j * d + a] = u;
                us[j * d + a] = v;
            }
        }
        for i in 0..n {
            let (cx, sx) = (&cxs[i * d..(i + 1) * d], &sxs[i * d..(i + 1) * d]);
            for j in 0..n {
                let (u, v) = (&uc[j * d..(j + 1) * d], &us[j * d..(j + 1) * d]);
                let mut acc = 0.0;
                for a in 0..d {
                    acc += cx[a] * u[a] + sx[a] * v[a];
                }
                out.push(acc);
            }
        }
    }
}

/// Draws Hamiltonians for one configuration, sharing the basis, weights, and
/// any kernel factorization across draws.
#[derive(Debug, Clone)]
pub struct HamiltonianSampler {
    config: LawDefiningConfig,
    basis: Arc<SpectralBasis>,
    weights: Arc<Vec<f64>>,
    temporal: TemporalSampler,
}

impl HamiltonianSampler {
    pub fn new(config: LawDefiningConfig) -> Result<Self> {
        config.validate()?;
        let basis = Arc::new(SpectralBasis::new(config.truncation)?);
        let weights = Arc::new(
            basis
                .modes()
                .iter()
                .map(|m| weight(m.eigenvalue, config.regularity))
                .collect(),
        );
        let temporal = TemporalSampler::new(config.kernel_kind())?;
        Ok(HamiltonianSampler {
            config,
            basis,
            weights,
            temporal,
        })
    }

    pub fn config(&self) -> &LawDefiningConfig {
        &self.config
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> RandomHamiltonian {
        let temporal = (0..self.basis.len()).map(|_| self.temporal.sample(rng)).collect();
        RandomHamiltonian::assemble(self.config, self.basis.clone(), self.weights.clone(), temporal)
    }

    /// Draw number `index` of this configuration's seed.
    pub fn sample_index(&self, index: u64) -> RandomHamiltonian {
        self.sample(&mut rng::derive(self.config.seed, &[index]))
    }
}

pub fn sample_hamiltonian<R: Rng + ?Sized>(
    config: &LawDefiningConfig,
    rng: &mut R,
) -> Result<RandomHamiltonian> {
    Ok(HamiltonianSampler::new(*config)?.sample(rng))
}

#[derive(Debug, Clone)]
pub struct RandomHamiltonian {
    config: LawDefiningConfig,
    basis: Arc<SpectralBasis>,
    weights: Arc<Vec<f64>>,
    temporal: Vec<TemporalSample>,
    active: Vec<usize>,
    dim: usize,
    autonomous: bool,
    frozen: Option<SpatialSlice>,
}

impl RandomHamiltonian {
    /// Build a Hamiltonian from explicit coefficient paths, one per basis mode.
    pub fn from_parts(config: LawDefiningConfig, temporal: Vec<TemporalSample>) -> Result<Self> {
        config.validate()?;
        let basis = Arc::new(SpectralBasis::new(config.truncation)?);
        if temporal.len() != basis.len() {
            return Err(Error::validation(
                "temporal",
                format!("expected {} coefficient paths, got {}", basis.len(), temporal.len()),
            ));
        }
        let weights = Arc::new(
            basis
                .modes()
                .iter()
                .map(|m| weight(m.eigenvalue, config.regularity))
                .collect(),
        );
        Ok(Self::assemble(config, basis, weights, temporal))
    }

    fn assemble(
        config: LawDefiningConfig,
        basis: Arc<SpectralBasis>,
        weights: Arc<Vec<f64>>,
        temporal: Vec<TemporalSample>,
    ) -> Self {
        let bounds: Vec<f64> = basis
            .modes()
            .iter()
            .zip(weights.iter())
            .zip(&temporal)
            .map(|((m, w), z)| {
                let k = f64::from(m.kx).hypot(f64::from(m.ky));
                w * m.amplitude * z.sup_bound() * (1.0 + TAU * k)
            })
            .collect();
        let largest = bounds.iter().fold(0.0f64, |a, &b| a.max(b));
        let active: Vec<usize> = if largest > 0.0 {
            (0..bounds.len())
                .filter(|&i| bounds[i] > NEGLIGIBLE_RELATIVE * largest)
                .collect()
        } else {
            Vec::new()
        };
        let dim = active
            .iter()
            .map(|&i| basis.modes()[i].kx.max(basis.modes()[i].ky) as usize + 1)
            .max()
            .unwrap_or(0);
        let autonomous = temporal.iter().all(TemporalSample::is_constant);
        let mut h = RandomHamiltonian {
            config,
            basis,
            weights,
            temporal,
            active,
            dim,
            autonomous,
            frozen: None,
        };
        if autonomous {
            h.frozen = h.build_slice(0.0).ok();
        }
        h
    }

    pub fn config(&self) -> &LawDefiningConfig {
        &self.config
    }

    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn temporal(&self) -> &[TemporalSample] {
        &self.temporal
    }

    /// Count of modes retained in evaluation.
    pub fn active_modes(&self) -> usize {
        self.active.len()
    }

    fn build_slice(&self, t: f64) -> Result<SpatialSlice> {
        let mut slice = SpatialSlice::zeros(self.dim);
        let modes = self.basis.modes();
        let table = match self.config.kernel.tag {
            KernelTag::Periodic => Some(HarmonicTable::new(&self.config.kernel_kind(), t)),
            _ => None,
        };
        for &i in &self.active {
            let z = match (&table, &self.temporal[i].payload) {
                (Some(table), TemporalPayload::Periodic { .. }) => self.temporal[i].evaluate_with(table),
                _ => self.temporal[i].evaluate(t)?,
            };
            let m = &modes[i];
            slice.add(m.trig, m.kx, m.ky, self.weights[i] * m.amplitude * z);
        }
        Ok(slice)
    }

    /// Coefficient planes of `H(t, ·)`.
    pub fn slice(&self, t: f64) -> Result<Cow<'_, SpatialSlice>> {
        match &self.frozen {
            Some(s) => Ok(Cow::Borrowed(s)),
            None => self.build_slice(t).map(Cow::Owned),
        }
    }

    pub fn eval_h(&self, t: f64, p: TorusPoint) -> Result<f64> {
        self.value(t, p.as_lift())
    }

    pub fn eval_grad(&self, t: f64, p: TorusPoint) -> Result<Vec2> {
        self.gradient(t, p.as_lift())
    }

    pub fn eval_vector_field(&self, t: f64, p: TorusPoint) -> Result<Vec2> {
        self.vector_field(t, p.as_lift())
    }
}

impl Hamiltonian for RandomHamiltonian {
    fn value(&self, t: f64, p: Vec2) -> Result<f64> {
        Ok(self.slice(t)?.value_gradient(p, &mut SliceScratch::default()).0)
    }

    fn gradient(&self, t: f64, p: Vec2) -> Result<Vec2> {
        Ok(self.slice(t)?.value_gradient(p, &mut SliceScratch::default()).1)
    }

    fn vector_field_batch(&self, t: f64, points: &[Vec2], out: &mut [Vec2]) -> Result<()> {
        let slice = self.slice(t)?;
        let mut scratch = SliceScratch::default();
        for (p, o) in points.iter().zip(out.iter_mut()) {
            let g = slice.value_gradient(*p, &mut scratch).1;
            *o = [-g[1], g[0]];
        }
        Ok(())
    }

    fn lattice_values(&self, t: f64, n: usize, out: &mut Vec<f64>) -> Result<()> {
        self.slice(t)?.lattice(n, out);
        Ok(())
    }

    fn is_autonomous(&self) -> bool {
        self.autonomous
    }
}

/// Trapezoid-in-time average of `max H(t,·) - min H(t,·)` over a uniform
/// `spatial_grid²` lattice at `time_grid` equally spaced times.
pub fn osc_estimate<H: Hamiltonian + ?Sized>(
    h: &H,
    spatial_grid: usize,
    time_grid: usize,
) -> Result<f64> {
    if spatial_grid < 2 || time_grid < 2 {
        return Err(Error::validation("osc grid", "grids need at least 2 nodes"));
    }
    let mut buf = Vec::with_capacity(spatial_grid * spatial_grid);
    let mut total = 0.0;
    let dt = 1.0 / (time_grid - 1) as f64;
    for j in 0..time_grid {
        let t = j as f64 * dt;
        h.lattice_values(t, spatial_grid, &mut buf)?;
        let (lo, hi) = buf
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let w = if j == 0 || j == time_grid - 1 { 0.5 } else { 1.0 };
        total += w * (hi - lo);
    }
    Ok(total * dt)
}
