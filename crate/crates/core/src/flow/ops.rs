//! Group operations on generating Hamiltonians.
//!
//! * `F ♯ G (t, x) = F(t, x) + G(t, (φ_F^t)⁻¹(x))` generates `φ_F^t ∘ φ_G^t`;
//! * `F̄ (t, x) = -F(t, φ_F^t(x))` generates `(φ_F^t)⁻¹`;
//! * `F̂ (t, x) = -F(1 - t, x)` generates `φ_F^{1-t} ∘ (φ_F^1)⁻¹`;
//! * `Σ k β(kt - n + 1) H_n(x)` generates `φ_{H_k}^1 ∘ ⋯ ∘ φ_{H_1}^1` for
//!   autonomous `H_n` and a bump `β` of unit mass supported in `(0, 1)`.
//!
//! The ♯ and bar evaluators integrate the inner flow of `F` on demand for
//! every query and take gradients through a central-difference Jacobian of
//! that inner flow.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, SharedHamiltonian};
use crate::torus::Vec2;

use super::{flow_jacobian, integrate_lifts, FlowSettings};

const INNER_FD_STEP: f64 = 1e-6;

/// `β(t) = exp(-1 / ((t - δ)(1 - δ - t))) / Z` on `(δ, 1 - δ)`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpFunction {
    delta: f64,
    normalization: f64,
}

impl Default for BumpFunction {
    fn default() -> Self {
        Self::new(0.05).expect("default bump is valid")
    }
}

impl BumpFunction {
    pub const QUADRATURE_NODES: usize = 10_001;

    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::validation("delta", "must lie in (0, 0.5)"));
        }
        let raw = BumpFunction {
            delta,
            normalization: 1.0,
        };
        let z = raw.trapezoid(Self::QUADRATURE_NODES);
        Ok(BumpFunction {
            delta,
            normalization: z,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn value(&self, t: f64) -> f64 {
        // (t - δ)(1 - δ - t) rewritten around ½ so that β(½ + s) = β(½ - s)
        let u = t - 0.5;
        let half = 0.5 - self.delta;
        let q = half * half - u * u;
        if q <= 0.0 || u.abs() >= half {
            return 0.0;
        }
        (-1.0 / q).exp() / self.normalization
    }

    pub fn trapezoid(&self, nodes: usize) -> f64 {
        let h = 1.0 / (nodes - 1) as f64;
        let inner: f64 = (1..nodes - 1).map(|i| self.value(i as f64 * h)).sum();
        (inner + 0.5 * (self.value(0.0) + self.value(1.0))) * h
    }
}

/// Flow Jacobian transpose applied to a covector.
fn pull_back(j: &[[f64; 2]; 2], g: Vec2) -> Vec2 {
    [j[0][0] * g[0] + j[1][0] * g[1], j[0][1] * g[0] + j[1][1] * g[1]]
}

pub struct Sharp {
    f: SharedHamiltonian,
    g: SharedHamiltonian,
    steps: usize,
}

pub fn sharp(f: SharedHamiltonian, g: SharedHamiltonian, settings: &FlowSettings) -> Sharp {
    Sharp {
        f,
        g,
        steps: settings.steps,
    }
}

impl Sharp {
    fn inverse_f(&self, t: f64, x: Vec2) -> Result<Vec2> {
        let mut q = [x];
        integrate_lifts(self.f.as_ref(), &mut q, t, 0.0, self.steps)?;
        Ok(q[0])
    }
}

impl Hamiltonian for Sharp {
    fn value(&self, t: f64, x: Vec2) -> Result<f64> {
        Ok(self.f.value(t, x)? + self.g.value(t, self.inverse_f(t, x)?)?)
    }

    fn gradient(&self, t: f64, x: Vec2) -> Result<Vec2> {
        let gf = self.f.gradient(t, x)?;
        let y = self.inverse_f(t, x)?;
        let gg = self.g.gradient(t, y)?;
        let j = flow_jacobian(self.f.as_ref(), x, t, 0.0, INNER_FD_STEP, self.steps)?;
        let pulled = pull_back(&j, gg);
        Ok([gf[0] + pulled[0], gf[1] + pulled[1]])
    }

    fn stiffness(&self) -> usize {
        self.f.stiffness().max(self.g.stiffness())
    }
}

pub struct Bar {
    f: SharedHamiltonian,
    steps: usize,
}

pub fn bar(f: SharedHamiltonian, settings: &FlowSettings) -> Bar {
    Bar {
        f,
        steps: settings.steps,
    }
}

impl Hamiltonian for Bar {
    fn value(&self, t: f64, x: Vec2) -> Result<f64> {
        let mut q = [x];
        integrate_lifts(self.f.as_ref(), &mut q, 0.0, t, self.steps)?;
        Ok(-self.f.value(t, q[0])?)
    }

    fn gradient(&self, t: f64, x: Vec2) -> Result<Vec2> {
        let mut q = [x];
        integrate_lifts(self.f.as_ref(), &mut q, 0.0, t, self.steps)?;
        let g = self.f.gradient(t, q[0])?;
        let j = flow_jacobian(self.f.as_ref(), x, 0.0, t, INNER_FD_STEP, self.steps)?;
        let pulled = pull_back(&j, g);
        Ok([-pulled[0], -pulled[1]])
    }

    fn stiffness(&self) -> usize {
        self.f.stiffness()
    }
}

pub struct Hat {
    f: SharedHamiltonian,
}

pub fn hat(f: SharedHamiltonian) -> Hat {
    Hat { f }
}

impl Hamiltonian for Hat {
    fn value(&self, t: f64, x: Vec2) -> Result<f64> {
        Ok(-self.f.value(1.0 - t, x)?)
    }

    fn gradient(&self, t: f64, x: Vec2) -> Result<Vec2> {
        let g = self.f.gradient(1.0 - t, x)?;
        Ok([-g[0], -g[1]])
    }

    fn vector_field_batch(&self, t: f64, points: &[Vec2], out: &mut [Vec2]) -> Result<()> {
        self.f.vector_field_batch(1.0 - t, points, out)?;
        for v in out.iter_mut() {
            *v = [-v[0], -v[1]];
        }
        Ok(())
    }

    fn is_autonomous(&self) -> bool {
        self.f.is_autonomous()
    }

    fn stiffness(&self) -> usize {
        self.f.stiffness()
    }
}

/// Time-dependent Hamiltonian running autonomous flows one after another.
pub struct Concat {
    parts: Vec<SharedHamiltonian>,
    beta: BumpFunction,
}

pub fn concat_autonomous(parts: Vec<SharedHamiltonian>, beta: BumpFunction) -> Result<Concat> {
    if parts.iter().any(|h| !h.is_autonomous()) {
        return Err(Error::NotAutonomous);
    }
    Ok(Concat { parts, beta })
}

impl Concat {
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Nonzero `(n, k β(kt - n + 1))` pairs at time `t`, with `n` zero-based.
    fn factors(&self, t: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
        let k = self.parts.len() as f64;
        (0..self.parts.len()).filter_map(move |n| {
            let b = self.beta.value(k * t - n as f64);
            (b != 0.0).then_some((n, k * b))
        })
    }
}

impl Hamiltonian for Concat {
    fn value(&self, t: f64, x: Vec2) -> Result<f64> {
        let mut v = 0.0;
        for (n, c) in self.factors(t) {
            v += c * self.parts[n].value(t, x)?;
        }
        Ok(v)
    }

    fn gradient(&self, t: f64, x: Vec2) -> Result<Vec2> {
        let mut g = [0.0, 0.0];
        for (n, c) in self.factors(t) {
            let d = self.parts[n].gradient(t, x)?;
            g[0] += c * d[0];
            g[1] += c * d[1];
        }
        Ok(g)
    }

    fn vector_field_batch(&self, t: f64, points: &[Vec2], out: &mut [Vec2]) -> Result<()> {
        out.iter_mut().for_each(|o| *o = [0.0, 0.0]);
        let mut tmp = vec![[0.0; 2]; points.len()];
        for (n, c) in self.factors(t) {
            self.parts[n].vector_field_batch(t, points, &mut tmp)?;
            for (o, v) in out.iter_mut().zip(&tmp) {
                o[0] += c * v[0];
                o[1] += c * v[1];
            }
        }
        Ok(())
    }

    fn stiffness(&self) -> usize {
        let inner = self.parts.iter().map(|h| h.stiffness()).max().unwrap_or(1);
        self.parts.len().max(1) * inner
    }
}

impl From<Concat> for SharedHamiltonian {
    fn from(c: Concat) -> Self {
        Arc::new(c)
    }
}
