//! Truncated Laplace–Beltrami eigenbasis of the flat torus `R^2 / Z^2`.
//!
//! Eigenfunctions are products `A · f(2π kx x) · g(2π ky y)` with `f, g ∈ {cos, sin}`
//! and eigenvalue `4π²(kx² + ky²)`. The amplitude `A` is 2 when both
//! wavenumbers are positive and √2 for axis modes, which makes every mode
//! unit-norm in `L²(T²)`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{TorusPoint, Vec2};

const TAU: f64 = 2.0 * PI;

/// Trig factors of a mode, x-factor first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Trig {
    CosCos,
    CosSin,
    SinCos,
    SinSin,
}

impl Trig {
    pub const ALL: [Trig; 4] = [Trig::CosCos, Trig::CosSin, Trig::SinCos, Trig::SinSin];

    pub fn x_is_sin(self) -> bool {
        matches!(self, Trig::SinCos | Trig::SinSin)
    }

    pub fn y_is_sin(self) -> bool {
        matches!(self, Trig::CosSin | Trig::SinSin)
    }

    /// Index into the four coefficient planes of a dense spatial slice.
    pub(crate) fn plane(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub kx: u32,
    pub ky: u32,
    pub trig: Trig,
    pub eigenvalue: f64,
    pub amplitude: f64,
}

/// `4π²(kx² + ky²)`.
pub fn eigenvalue(kx: u32, ky: u32) -> f64 {
    4.0 * PI * PI * f64::from(kx * kx + ky * ky)
}

impl Mode {
    pub fn new(kx: u32, ky: u32, trig: Trig) -> Result<Self> {
        if kx + ky == 0 {
            return Err(Error::validation("mode", "the constant mode is excluded"));
        }
        if (kx == 0 && trig.x_is_sin()) || (ky == 0 && trig.y_is_sin()) {
            return Err(Error::validation(
                "mode",
                format!("{trig:?} vanishes identically for wavenumbers ({kx}, {ky})"),
            ));
        }
        let amplitude = if kx >= 1 && ky >= 1 { 2.0 } else { SQRT_2 };
        Ok(Mode {
            kx,
            ky,
            trig,
            eigenvalue: eigenvalue(kx, ky),
            amplitude,
        })
    }

    fn factors(&self, p: TorusPoint) -> (f64, f64, f64, f64) {
        let (sx, cx) = (TAU * f64::from(self.kx) * p.x).sin_cos();
        let (sy, cy) = (TAU * f64::from(self.ky) * p.y).sin_cos();
        let (fx, dfx) = if self.trig.x_is_sin() { (sx, cx) } else { (cx, -sx) };
        let (fy, dfy) = if self.trig.y_is_sin() { (sy, cy) } else { (cy, -sy) };
        (fx, dfx, fy, dfy)
    }

    pub fn evaluate(&self, p: TorusPoint) -> f64 {
        let (fx, _, fy, _) = self.factors(p);
        self.amplitude * fx * fy
    }

    /// Analytic `(∂x, ∂y)` of [`Mode::evaluate`].
    pub fn gradient(&self, p: TorusPoint) -> Vec2 {
        let (fx, dfx, fy, dfy) = self.factors(p);
        [
            self.amplitude * TAU * f64::from(self.kx) * dfx * fy,
            self.amplitude * TAU * f64::from(self.ky) * fx * dfy,
        ]
    }

    fn sort_key(&self) -> (u32, u32, Trig) {
        (self.kx, self.ky, self.trig)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    /// Per-axis wavenumber cap.
    pub spatial_max: u32,
    /// Include modes with exactly one zero wavenumber.
    pub include_axis_modes: bool,
    /// Temporal Fourier cap of the periodic kernel.
    pub temporal_max: u32,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            spatial_max: 25,
            include_axis_modes: false,
            temporal_max: 10,
        }
    }
}

impl Truncation {
    pub fn validate(&self) -> Result<()> {
        if self.spatial_max < 1 {
            return Err(Error::validation("spatial_max", "must be at least 1"));
        }
        if self.temporal_max < 1 {
            return Err(Error::validation("temporal_max", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    modes: Vec<Mode>,
    truncation: Truncation,
}

impl SpectralBasis {
    pub fn new(truncation: Truncation) -> Result<Self> {
        truncation.validate()?;
        let n = truncation.spatial_max;
        let mut modes = Vec::new();
        for kx in 0..=n {
            for ky in 0..=n {
                let axis = kx == 0 || ky == 0;
                if kx + ky == 0 || (axis && !truncation.include_axis_modes) {
                    continue;
                }
                for trig in Trig::ALL {
                    if let Ok(mode) = Mode::new(kx, ky, trig) {
                        modes.push(mode);
                    }
                }
            }
        }
        modes.sort_by(|a, b| {
            a.eigenvalue
                .total_cmp(&b.eigenvalue)
                .then_with(|| a.sort_key().cmp(&b.sort_key()))
        });
        Ok(SpectralBasis { modes, truncation })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn basis(n: u32, axis: bool) -> SpectralBasis {
        SpectralBasis::new(Truncation {
            spatial_max: n,
            include_axis_modes: axis,
            temporal_max: 10,
        })
        .unwrap()
    }

    /// Counts admissible (kx, ky, trig) triples by brute force.
    fn enumerate_count(n: u32, axis: bool) -> usize {
        let mut count = 0;
        for kx in 0..=n {
            for ky in 0..=n {
                for xs in [false, true] {
                    for ys in [false, true] {
                        let zero_sin = (kx == 0 && xs) || (ky == 0 && ys);
                        let axis_mode = kx == 0 || ky == 0;
                        if kx + ky >= 1 && !zero_sin && (axis || !axis_mode) {
                            count += 1;
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn mode_counts_match_enumeration() {
        assert_eq!(enumerate_count(25, false), 2500);
        assert_eq!(basis(25, false).len(), 2500);
        assert_eq!(basis(25, true).len(), enumerate_count(25, true));
        assert_eq!(basis(25, true).len(), 2600);
        let b = basis(1, false);
        assert_eq!(b.len(), 4);
        assert!(b.modes().iter().all(|m| m.eigenvalue == 8.0 * PI * PI));
        assert_eq!(basis(1, true).len(), 8);
        assert_eq!(enumerate_count(1, true), 8);
    }

    #[test]
    fn ordering_and_uniqueness() {
        let b = basis(6, true);
        let mut seen = BTreeSet::new();
        for w in b.modes().windows(2) {
            assert!(w[0].eigenvalue <= w[1].eigenvalue);
            if w[0].eigenvalue == w[1].eigenvalue {
                assert!(w[0].sort_key() < w[1].sort_key());
            }
        }
        for m in b.modes() {
            assert!(seen.insert(m.sort_key()));
            assert_eq!(m.eigenvalue, eigenvalue(m.kx, m.ky));
        }
    }

    #[test]
    fn eigenvalue_examples() {
        assert!((eigenvalue(1, 0) - 39.4784).abs() < 1e-4);
        assert_eq!(eigenvalue(1, 1), 8.0 * PI * PI);
        assert!((eigenvalue(3, 4) - 100.0 * PI * PI).abs() < 1e-10);
        assert!((eigenvalue(3, 4) - 986.960).abs() < 1e-3);
    }

    #[test]
    fn invalid_modes_are_rejected() {
        assert!(Mode::new(0, 0, Trig::CosCos).is_err());
        assert!(Mode::new(0, 2, Trig::SinCos).is_err());
        assert!(Mode::new(2, 0, Trig::SinSin).is_err());
        assert_eq!(Mode::new(2, 0, Trig::SinCos).unwrap().amplitude, SQRT_2);
        assert_eq!(Mode::new(2, 3, Trig::SinCos).unwrap().amplitude, 2.0);
    }

    #[test]
    fn evaluate_examples() {
        let cc = Mode::new(1, 1, Trig::CosCos).unwrap();
        let ss = Mode::new(1, 1, Trig::SinSin).unwrap();
        assert_eq!(cc.evaluate(TorusPoint::new(0.0, 0.0)), 2.0);
        assert!((ss.evaluate(TorusPoint::new(0.25, 0.25)) - 2.0).abs() < 1e-15);
        for y in [0.0, 0.1, 0.37, 0.9] {
            assert!(cc.evaluate(TorusPoint::new(0.25, y)).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_examples() {
        let cc = Mode::new(1, 1, Trig::CosCos).unwrap();
        assert_eq!(cc.gradient(TorusPoint::new(0.0, 0.0)), [0.0, 0.0]);
        let axis = Mode::new(1, 0, Trig::SinCos).unwrap();
        let g = axis.gradient(TorusPoint::new(0.0, 0.0));
        assert!((g[0] - 2.0 * SQRT_2 * PI).abs() < 1e-14);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let h = 1e-6;
        let probes = [(0.13, 0.71), (0.5, 0.02), (0.88, 0.43), (0.31, 0.29)];
        for m in basis(4, true).modes() {
            for &(x, y) in &probes {
                let g = m.gradient(TorusPoint::new(x, y));
                let fx = (m.evaluate(TorusPoint::new(x + h, y))
                    - m.evaluate(TorusPoint::new(x - h, y)))
                    / (2.0 * h);
                let fy = (m.evaluate(TorusPoint::new(x, y + h))
                    - m.evaluate(TorusPoint::new(x, y - h)))
                    / (2.0 * h);
                let scale = g[0].abs().max(g[1].abs()).max(1.0);
                assert!((fx - g[0]).abs() <= 1e-6 * scale, "{m:?} {fx} {g:?}");
                assert!((fy - g[1]).abs() <= 1e-6 * scale, "{m:?} {fy} {g:?}");
            }
        }
    }

    /// Periodic trapezoid rule on an (n+1)^2 lattice that includes both endpoints.
    fn quadrature(n: usize, f: impl Fn(TorusPoint) -> f64) -> f64 {
        let h = 1.0 / n as f64;
        let mut sum = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let wi = if i == 0 || i == n { 0.5 } else { 1.0 };
                let wj = if j == 0 || j == n { 0.5 } else { 1.0 };
                sum += wi * wj * f(TorusPoint {
                    x: i as f64 * h,
                    y: j as f64 * h,
                });
            }
        }
        sum * h * h
    }

    #[test]
    fn orthonormal_and_mean_zero_under_exact_quadrature() {
        for n in [1u32, 3, 6] {
            let b = basis(n, true);
            let grid = 4 * n as usize;
            for (i, a) in b.modes().iter().enumerate() {
                assert!(quadrature(grid, |p| a.evaluate(p)).abs() < 1e-12);
                for (j, c) in b.modes().iter().enumerate().skip(i) {
                    let ip = quadrature(grid, |p| a.evaluate(p) * c.evaluate(p));
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - expected).abs() < 1e-10, "{a:?} {c:?} {ip}");
                }
            }
        }
    }

    #[test]
    fn laplacian_eigen_relation() {
        use rand::Rng;
        let mut rng = crate::rng::derive(11, &[]);
        let h = 1e-4;
        for m in basis(3, true).modes() {
            for _ in 0..20 {
                let (x, y) = (rng.gen::<f64>(), rng.gen::<f64>());
                let f = |dx: f64, dy: f64| m.evaluate(TorusPoint::new(x + dx, y + dy));
                let lap = (f(h, 0.0) + f(-h, 0.0) + f(0.0, h) + f(0.0, -h) - 4.0 * f(0.0, 0.0))
                    / (h * h);
                let expected = -m.eigenvalue * f(0.0, 0.0);
                let tol = 1e-3 * expected.abs().max(m.eigenvalue * 1e-3);
                assert!((lap - expected).abs() <= tol, "{m:?} {lap} {expected}");
            }
        }
    }
}
