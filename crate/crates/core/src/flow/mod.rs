//! Numerical Hamiltonian flows on the torus.
//!
//! All integration is fixed-step classical RK4 on planar lifts. A run from
//! `t0` to `t1` takes `ceil(|t1 - t0| · steps · stiffness)` equal steps, so
//! the step sequence depends only on the endpoints and Monte Carlo tables are
//! reproducible.

mod curve;
mod ops;

pub use curve::{advect_curve, LagrangianCurve};
pub use ops::{bar, concat_autonomous, hat, sharp, Bar, BumpFunction, Concat, Hat, Sharp};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::torus::{TorusPoint, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSettings {
    /// RK4 steps per unit time.
    pub steps: usize,
    /// Largest allowed lift distance between adjacent advected curve vertices.
    pub refinement_threshold: f64,
    pub max_refinement_depth: u32,
}

impl Default for FlowSettings {
    fn default() -> Self {
        FlowSettings {
            steps: 200,
            refinement_threshold: 0.01,
            max_refinement_depth: 12,
        }
    }
}

impl FlowSettings {
    pub fn with_steps(steps: usize) -> Self {
        FlowSettings {
            steps,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::validation("steps", "must be at least 1"));
        }
        if !(self.refinement_threshold > 0.0 && self.refinement_threshold < 0.5) {
            return Err(Error::validation("refinement_threshold", "must lie in (0, 0.5)"));
        }
        Ok(())
    }
}

/// Image of a point under a flow, with the unreduced lift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowImage {
    pub point: TorusPoint,
    pub lift: Vec2,
}

pub(crate) fn step_count(span: f64, steps: usize, stiffness: usize) -> usize {
    let raw = span.abs() * (steps * stiffness.max(1)) as f64;
    ((raw - 1e-9).ceil() as usize).max(1)
}

/// Advance lifts in place from `t0` to `t1` (backwards when `t1 < t0`).
pub fn integrate_lifts<H: Hamiltonian + ?Sized>(
    h: &H,
    points: &mut [Vec2],
    t0: f64,
    t1: f64,
    steps: usize,
) -> Result<()> {
    let span = t1 - t0;
    if span == 0.0 || points.is_empty() {
        return Ok(());
    }
    let n = step_count(span, steps, h.stiffness());
    let dt = span / n as f64;
    let len = points.len();
    let mut k1 = vec![[0.0; 2]; len];
    let mut k2 = vec![[0.0; 2]; len];
    let mut k3 = vec![[0.0; 2]; len];
    let mut k4 = vec![[0.0; 2]; len];
    let mut tmp = vec![[0.0; 2]; len];
    for i in 0..n {
        let t = t0 + span * (i as f64 / n as f64);
        let t_mid = t + 0.5 * dt;
        let t_end = t0 + span * ((i + 1) as f64 / n as f64);
        h.vector_field_batch(t, points, &mut k1)?;
        for j in 0..len {
            tmp[j] = [points[j][0] + 0.5 * dt * k1[j][0], points[j][1] + 0.5 * dt * k1[j][1]];
        }
        h.vector_field_batch(t_mid, &tmp, &mut k2)?;
        for j in 0..len {
            tmp[j] = [points[j][0] + 0.5 * dt * k2[j][0], points[j][1] + 0.5 * dt * k2[j][1]];
        }
        h.vector_field_batch(t_mid, &tmp, &mut k3)?;
        for j in 0..len {
            tmp[j] = [points[j][0] + dt * k3[j][0], points[j][1] + dt * k3[j][1]];
        }
        h.vector_field_batch(t_end, &tmp, &mut k4)?;
        for j in 0..len {
            for c in 0..2 {
                points[j][c] += dt / 6.0 * (k1[j][c] + 2.0 * k2[j][c] + 2.0 * k3[j][c] + k4[j][c]);
            }
        }
    }
    if points.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return Err(Error::NonFinite { t: t1 });
    }
    Ok(())
}

/// Time-`t1` image of `p` under the flow started at time `t0`.
pub fn integrate_point<H: Hamiltonian + ?Sized>(
    h: &H,
    p: TorusPoint,
    t0: f64,
    t1: f64,
    settings: &FlowSettings,
) -> Result<FlowImage> {
    let mut pts = [p.as_lift()];
    integrate_lifts(h, &mut pts, t0, t1, settings.steps)?;
    Ok(FlowImage {
        point: TorusPoint::from_lift(pts[0]),
        lift: pts[0],
    })
}

/// `(φ¹)⁻¹(p)`, by integrating from `t = 1` back to `t = 0`.
pub fn inverse_point<H: Hamiltonian + ?Sized>(
    h: &H,
    p: TorusPoint,
    settings: &FlowSettings,
) -> Result<FlowImage> {
    integrate_point(h, p, 1.0, 0.0, settings)
}

/// Central-difference Jacobian of the lift map `q ↦ φ(q)` flowing `t0 → t1`.
///
/// Differences are taken of the displacement `φ(q) - q`, so the identity flow
/// yields exactly the identity matrix.
pub(crate) fn flow_jacobian<H: Hamiltonian + ?Sized>(
    h: &H,
    p: Vec2,
    t0: f64,
    t1: f64,
    fd_step: f64,
    steps: usize,
) -> Result<[[f64; 2]; 2]> {
    let starts = [
        [p[0] + fd_step, p[1]],
        [p[0] - fd_step, p[1]],
        [p[0], p[1] + fd_step],
        [p[0], p[1] - fd_step],
    ];
    let mut ends = starts;
    integrate_lifts(h, &mut ends, t0, t1, steps)?;
    let disp = |i: usize, c: usize| ends[i][c] - starts[i][c];
    let mut j = [[0.0; 2]; 2];
    for row in 0..2 {
        j[row][0] = f64::from(row == 0) + (disp(0, row) - disp(1, row)) / (2.0 * fd_step);
        j[row][1] = f64::from(row == 1) + (disp(2, row) - disp(3, row)) / (2.0 * fd_step);
    }
    Ok(j)
}

/// Determinant of the differential of the time-`t` flow map at `p`.
pub fn jacobian_det<H: Hamiltonian + ?Sized>(
    h: &H,
    p: TorusPoint,
    t: f64,
    fd_step: f64,
    settings: &FlowSettings,
) -> Result<f64> {
    if !(fd_step > 0.0) {
        return Err(Error::validation("fd_step", "must be positive"));
    }
    let j = flow_jacobian(h, p.as_lift(), 0.0, t, fd_step, settings.steps)?;
    Ok(j[0][0] * j[1][1] - j[0][1] * j[1][0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Truncation;
    use crate::field::{sample_hamiltonian, LawDefiningConfig};
    use crate::hamiltonian::{Shear, Zero};
    use crate::rng;
    use crate::temporal::KernelTag;
    use crate::torus::torus_distance;
    use rand::Rng;

    fn draw(r: f64, n: u32, tag: KernelTag, seed: u64) -> crate::field::RandomHamiltonian {
        let cfg = LawDefiningConfig::new(
            r,
            Truncation {
                spatial_max: n,
                include_axis_modes: false,
                temporal_max: 4,
            },
            tag,
        );
        sample_hamiltonian(&cfg, &mut rng::derive(seed, &[])).unwrap()
    }

    #[test]
    fn step_counts() {
        assert_eq!(step_count(1.0, 200, 1), 200);
        assert_eq!(step_count(-0.25, 200, 1), 50);
        assert_eq!(step_count(0.3, 200, 3), 180);
        assert_eq!(step_count(1e-9, 200, 1), 1);
    }

    #[test]
    fn zero_field_is_identity() {
        let s = FlowSettings::default();
        let p = TorusPoint::new(0.3, 0.8);
        assert_eq!(integrate_point(&Zero, p, 0.0, 1.0, &s).unwrap().point, p);
        assert_eq!(inverse_point(&Zero, p, &s).unwrap().point, p);
        assert_eq!(jacobian_det(&Zero, p, 1.0, 1e-5, &s).unwrap(), 1.0);
    }

    #[test]
    fn shear_flow_matches_closed_form() {
        let h = Shear::horizontal(1.0);
        let s = FlowSettings::default();
        let img = integrate_point(&h, TorusPoint::new(0.3, 1.0 / 6.0), 0.0, 1.0, &s).unwrap();
        assert!(img.point.distance(TorusPoint::new(0.8, 1.0 / 6.0)) < 1e-10);
        let back = inverse_point(&h, TorusPoint::new(0.8, 1.0 / 6.0), &s).unwrap();
        assert!(back.point.distance(TorusPoint::new(0.3, 1.0 / 6.0)) < 1e-10);
        let det = jacobian_det(&h, TorusPoint::new(0.41, 0.13), 1.0, 1e-5, &s).unwrap();
        assert!((det - 1.0).abs() < 1e-9);
    }

    #[test]
    fn forward_backward_round_trip() {
        let h = draw(0.14, 5, KernelTag::Periodic, 1);
        let s = FlowSettings::default();
        let mut probe = rng::derive(2, &[]);
        for _ in 0..20 {
            let p = TorusPoint::new(probe.gen(), probe.gen());
            let (t0, t1) = (probe.gen::<f64>() * 0.5, 0.5 + probe.gen::<f64>() * 0.5);
            let fwd = integrate_point(&h, p, t0, t1, &s).unwrap();
            let back = integrate_point(&h, fwd.point, t1, t0, &s).unwrap();
            assert!(back.point.distance(p) < 1e-8, "{}", back.point.distance(p));
            let inv = inverse_point(&h, p, &s).unwrap();
            let round = integrate_point(&h, inv.point, 0.0, 1.0, &s).unwrap();
            assert!(round.point.distance(p) < 1e-8);
        }
    }

    #[test]
    fn energy_is_conserved_for_autonomous_draws() {
        let h = draw(0.1, 5, KernelTag::Autonomous, 3);
        let s = FlowSettings::with_steps(1000);
        let mut probe = rng::derive(4, &[]);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let p = [probe.gen::<f64>(), probe.gen::<f64>()];
            let e0 = h.value(0.0, p).unwrap();
            for t in [0.25, 0.5, 1.0] {
                let mut q = [p];
                integrate_lifts(&h, &mut q, 0.0, t, s.steps).unwrap();
                worst = worst.max((h.value(t, q[0]).unwrap() - e0).abs());
            }
        }
        assert!(worst <= 1e-6, "{worst}");
    }

    #[test]
    fn flows_preserve_area() {
        let h = draw(0.14, 6, KernelTag::Periodic, 5);
        let s = FlowSettings::with_steps(1000);
        let mut probe = rng::derive(6, &[]);
        for _ in 0..10 {
            let p = TorusPoint::new(probe.gen(), probe.gen());
            let det = jacobian_det(&h, p, 1.0, 1e-5, &s).unwrap();
            assert!((det - 1.0).abs() < 1e-5, "{det}");
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let h = draw(0.04, 5, KernelTag::Periodic, 7);
        let mut probe = rng::derive(8, &[]);
        let pts: Vec<Vec2> = (0..10).map(|_| [probe.gen(), probe.gen()]).collect();
        let run = |steps: usize| {
            let mut q = pts.clone();
            integrate_lifts(&h, &mut q, 0.0, 1.0, steps).unwrap();
            q
        };
        let reference = run(4000);
        let err = |q: &[Vec2]| {
            q.iter()
                .zip(&reference)
                .map(|(a, b)| torus_distance(*a, *b))
                .fold(0.0, f64::max)
        };
        let coarse = err(&run(50));
        let fine = err(&run(100));
        assert!(coarse / fine >= 8.0, "{coarse} {fine}");
    }
}
