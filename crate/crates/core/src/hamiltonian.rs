//! The evaluator interface shared by sampled fields, analytic test fields, and
//! the group operations built on top of them.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::Result;
use crate::torus::Vec2;

/// A time-dependent Hamiltonian `H(t, x)` on `[0,1] × T²`, evaluated on planar lifts.
///
/// With `ω = dx ∧ dy` the Hamiltonian vector field is `X_H = (-∂H/∂y, ∂H/∂x)`.
pub trait Hamiltonian: Send + Sync {
    fn value(&self, t: f64, p: Vec2) -> Result<f64>;

    fn gradient(&self, t: f64, p: Vec2) -> Result<Vec2>;

    fn vector_field(&self, t: f64, p: Vec2) -> Result<Vec2> {
        let g = self.gradient(t, p)?;
        Ok([-g[1], g[0]])
    }

    /// Vector field at many points sharing one time.
    fn vector_field_batch(&self, t: f64, points: &[Vec2], out: &mut [Vec2]) -> Result<()> {
        for (p, o) in points.iter().zip(out.iter_mut()) {
            *o = self.vector_field(t, *p)?;
        }
        Ok(())
    }

    /// Values on the uniform `n × n` lattice `(i/n, j/n)`, row-major in `i`.
    fn lattice_values(&self, t: f64, n: usize, out: &mut Vec<f64>) -> Result<()> {
        out.clear();
        let h = 1.0 / n as f64;
        for i in 0..n {
            for j in 0..n {
                out.push(self.value(t, [i as f64 * h, j as f64 * h])?);
            }
        }
        Ok(())
    }

    fn is_autonomous(&self) -> bool {
        false
    }

    /// Multiplier on the integrator's step count.
    fn stiffness(&self) -> usize {
        1
    }
}

impl<H: Hamiltonian + ?Sized> Hamiltonian for Arc<H> {
    fn value(&self, t: f64, p: Vec2) -> Result<f64> {
        (**self).value(t, p)
    }
    fn gradient(&self, t: f64, p: Vec2) -> Result<Vec2> {
        (**self).gradient(t, p)
    }
    fn vector_field(&self, t: f64, p: Vec2) -> Result<Vec2> {
        (**self).vector_field(t, p)
    }
    fn vector_field_batch(&self, t: f64, points: &[Vec2], out: &mut [Vec2]) -> Result<()> {
        (**self).vector_field_batch(t, points, out)
    }
    fn lattice_values(&self, t: f64, n: usize, out: &mut Vec<f64>) -> Result<()> {
        (**self).lattice_values(t, n, out)
    }
    fn is_autonomous(&self) -> bool {
        (**self).is_autonomous()
    }
    fn stiffness(&self) -> usize {
        (**self).stiffness()
    }
}

impl<H: Hamiltonian + ?Sized> Hamiltonian for &H {
    fn value(&self, t: f64, p: Vec2) -> Result<f64> {
        (**self).value(t, p)
    }
    fn gradient(&self, t: f64, p: Vec2) -> Result<Vec2> {
        (**self).gradient(t, p)
    }
    fn vector_field(&self, t: f64, p: Vec2) -> Result<Vec2> {
        (**self).vector_field(t, p)
    }
    fn vector_field_batch(&self, t: f64, points: &[Vec2], out: &mut [Vec2]) -> Result<()> {
        (**self).vector_field_batch(t, points, out)
    }
    fn lattice_values(&self, t: f64, n: usize, out: &mut Vec<f64>) -> Result<()> {
        (**self).lattice_values(t, n, out)
    }
    fn is_autonomous(&self) -> bool {
        (**self).is_autonomous()
    }
    fn stiffness(&self) -> usize {
        (**self).stiffness()
    }
}

pub type SharedHamiltonian = Arc<dyn Hamiltonian>;

/// `H ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl Hamiltonian for Zero {
    fn value(&self, _t: f64, _p: Vec2) -> Result<f64> {
        Ok(0.0)
    }
    fn gradient(&self, _t: f64, _p: Vec2) -> Result<Vec2> {
        Ok([0.0, 0.0])
    }
    fn is_autonomous(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// `H = a/(2π) · sin(2π y)` (or the same in `x`), whose flow is an exact shear.
///
/// For `Axis::Y` the time-`t` map is `(x, y) ↦ (x - a t cos(2π y), y)`;
/// for `Axis::X` it is `(x, y) ↦ (x, y + a t cos(2π x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shear {
    pub axis: Axis,
    pub amplitude: f64,
}

impl Shear {
    pub fn horizontal(amplitude: f64) -> Self {
        Shear {
            axis: Axis::Y,
            amplitude,
        }
    }

    pub fn vertical(amplitude: f64) -> Self {
        Shear {
            axis: Axis::X,
            amplitude,
        }
    }

    /// Closed-form time-`t` map on lifts.
    pub fn exact_flow(&self, p: Vec2, t: f64) -> Vec2 {
        match self.axis {
            Axis::Y => [p[0] - self.amplitude * t * (2.0 * PI * p[1]).cos(), p[1]],
            Axis::X => [p[0], p[1] + self.amplitude * t * (2.0 * PI * p[0]).cos()],
        }
    }

    fn coord(&self, p: Vec2) -> f64 {
        match self.axis {
            Axis::X => p[0],
            Axis::Y => p[1],
        }
    }
}

impl Hamiltonian for Shear {
    fn value(&self, _t: f64, p: Vec2) -> Result<f64> {
        Ok(self.amplitude / (2.0 * PI) * (2.0 * PI * self.coord(p)).sin())
    }

    fn gradient(&self, _t: f64, p: Vec2) -> Result<Vec2> {
        let d = self.amplitude * (2.0 * PI * self.coord(p)).cos();
        Ok(match self.axis {
            Axis::X => [d, 0.0],
            Axis::Y => [0.0, d],
        })
    }

    fn is_autonomous(&self) -> bool {
        true
    }
}

type ValueFn = dyn Fn(f64, Vec2) -> f64 + Send + Sync;
type GradFn = dyn Fn(f64, Vec2) -> Vec2 + Send + Sync;

/// Hamiltonian from closures, for analytic fields.
pub struct FnHamiltonian {
    value: Box<ValueFn>,
    gradient: Box<GradFn>,
    autonomous: bool,
}

impl FnHamiltonian {
    pub fn new(
        value: impl Fn(f64, Vec2) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(f64, Vec2) -> Vec2 + Send + Sync + 'static,
    ) -> Self {
        FnHamiltonian {
            value: Box::new(value),
            gradient: Box::new(gradient),
            autonomous: false,
        }
    }

    /// A function of time alone; it generates the identity flow.
    pub fn time_only(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(move |t, _| f(t), |_, _| [0.0, 0.0])
    }

    pub fn autonomous(mut self) -> Self {
        self.autonomous = true;
        self
    }
}

impl fmt::Debug for FnHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnHamiltonian")
            .field("autonomous", &self.autonomous)
            .finish_non_exhaustive()
    }
}

impl Hamiltonian for FnHamiltonian {
    fn value(&self, t: f64, p: Vec2) -> Result<f64> {
        Ok((self.value)(t, p))
    }
    fn gradient(&self, t: f64, p: Vec2) -> Result<Vec2> {
        Ok((self.gradient)(t, p))
    }
    fn is_autonomous(&self) -> bool {
        self.autonomous
    }
}

/// Pointwise sum of Hamiltonians.
#[derive(Clone)]
pub struct Sum(pub Vec<SharedHamiltonian>);

impl Hamiltonian for Sum {
    fn value(&self, t: f64, p: Vec2) -> Result<f64> {
        self.0.iter().map(|h| h.value(t, p)).sum()
    }

    fn gradient(&self, t: f64, p: Vec2) -> Result<Vec2> {
        let mut g = [0.0, 0.0];
        for h in &self.0 {
            let d = h.gradient(t, p)?;
            g[0] += d[0];
            g[1] += d[1];
        }
        Ok(g)
    }

    fn vector_field_batch(&self, t: f64, points: &[Vec2], out: &mut [Vec2]) -> Result<()> {
        out.iter_mut().for_each(|o| *o = [0.0, 0.0]);
        let mut tmp = vec![[0.0, 0.0]; points.len()];
        for h in &self.0 {
            h.vector_field_batch(t, points, &mut tmp)?;
            for (o, v) in out.iter_mut().zip(&tmp) {
                o[0] += v[0];
                o[1] += v[1];
            }
        }
        Ok(())
    }

    fn is_autonomous(&self) -> bool {
        self.0.iter().all(|h| h.is_autonomous())
    }

    fn stiffness(&self) -> usize {
        self.0.iter().map(|h| h.stiffness()).max().unwrap_or(1)
    }
}
