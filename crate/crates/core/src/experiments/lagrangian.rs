use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::LagrangianCurve;
use crate::torus::{lift_distance, periodic_delta, Vec2};

/// Level values this close to zero count as positive.
const TIE: f64 = 1e-12;
/// Vertices closer than this are merged before counting.
const DEDUP: f64 = 1e-12;
/// A segment with both ends this close to the level set overlaps it.
const OVERLAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagrangianKind {
    /// `{c} × S¹`
    Vertical { c: f64 },
    /// `S¹ × {c}`
    Horizontal { c: f64 },
    /// The closed line `{(pα, qα) mod 1}`.
    Sloped { p: i64, q: i64 },
    Circle { center: Vec2, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestLagrangian {
    pub kind: LagrangianKind,
    pub label: String,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl TestLagrangian {
    pub fn new(kind: LagrangianKind, label: impl Into<String>) -> Result<Self> {
        match kind {
            LagrangianKind::Vertical { c } | LagrangianKind::Horizontal { c } => {
                if !(0.0..1.0).contains(&c) {
                    return Err(Error::validation("c", "must lie in [0, 1)"));
                }
            }
            LagrangianKind::Sloped { p, q } => {
                if p == 0 && q == 0 {
                    return Err(Error::validation("slope", "p and q cannot both be zero"));
                }
            }
            LagrangianKind::Circle { center, radius } => {
                if !(radius > 0.0 && radius < 0.5) {
                    return Err(Error::validation("radius", "must lie in (0, 0.5)"));
                }
                if !(center[0].is_finite() && center[1].is_finite()) {
                    return Err(Error::validation("center", "must be finite"));
                }
            }
        }
        Ok(TestLagrangian {
            kind,
            label: label.into(),
        })
    }

    /// `L1` … `L14` of the reference intersection table.
    pub fn standard(label: &str) -> Result<Self> {
        use LagrangianKind::*;
        let kind = match label {
            "L1" => Vertical { c: 0.3 },
            "L2" => Vertical { c: 0.5 },
            "L3" => Vertical { c: 0.7 },
            "L4" => Sloped { p: 1, q: 2 },
            "L5" => Sloped { p: 1, q: 3 },
            "L6" => Sloped { p: 1, q: 4 },
            "L7" => Horizontal { c: 0.3 },
            "L8" => Horizontal { c: 0.5 },
            "L9" => Horizontal { c: 0.7 },
            "L10" => Sloped { p: 2, q: 1 },
            "L11" => Sloped { p: 3, q: 1 },
            "L12" => Sloped { p: 4, q: 1 },
            "L13" => Circle { center: [0.5, 0.5], radius: 0.1 },
            "L14" => Circle { center: [0.5, 0.5], radius: 0.2 },
            _ => return Err(Error::validation("lagrangians", format!("unknown label {label:?}"))),
        };
        Self::new(kind, label)
    }

    pub fn standard_set() -> Vec<Self> {
        (1..=14)
            .map(|i| Self::standard(&format!("L{i}")).expect("reference labels are valid"))
            .collect()
    }

    /// Euclidean length on the torus.
    pub fn length(&self) -> f64 {
        match self.kind {
            LagrangianKind::Vertical { .. } | LagrangianKind::Horizontal { .. } => 1.0,
            LagrangianKind::Sloped { p, q } => {
                let g = gcd(p, q) as f64;
                (p as f64 / g).hypot(q as f64 / g)
            }
            LagrangianKind::Circle { radius, .. } => 2.0 * std::f64::consts::PI * radius,
        }
    }

    /// The Lagrangian itself as a closed curve with `n` segments.
    pub fn polyline(&self, n: usize) -> LagrangianCurve {
        match self.kind {
            LagrangianKind::Vertical { c } => LagrangianCurve::vertical(c, n),
            LagrangianKind::Horizontal { c } => LagrangianCurve::horizontal(c, n),
            LagrangianKind::Sloped { p, q } => {
                let g = gcd(p, q);
                let (p, q) = (p / g, q / g);
                let vertices = (0..=n)
                    .map(|i| {
                        let a = i as f64 / n as f64;
                        [p as f64 * a, q as f64 * a]
                    })
                    .collect();
                LagrangianCurve {
                    vertices,
                    closed: true,
                    winding: [p, q],
                }
            }
            LagrangianKind::Circle { center, radius } => LagrangianCurve::circle(center, radius, n),
        }
    }

    /// Level function whose zero set (mod 1 for lines) is the Lagrangian,
    /// together with the distance of `v` to that set.
    fn level(&self, v: Vec2) -> (f64, f64) {
        match self.kind {
            LagrangianKind::Vertical { c } => {
                let f = v[0] - c;
                (f, (f - f.round()).abs())
            }
            LagrangianKind::Horizontal { c } => {
                let f = v[1] - c;
                (f, (f - f.round()).abs())
            }
            LagrangianKind::Sloped { p, q } => {
                let g = gcd(p, q);
                let (p, q) = ((p / g) as f64, (q / g) as f64);
                let f = q * v[0] - p * v[1];
                (f, (f - f.round()).abs() / p.hypot(q))
            }
            LagrangianKind::Circle { center, radius } => {
                let f = periodic_delta(v[0], center[0]).hypot(periodic_delta(v[1], center[1])) - radius;
                (f, f.abs())
            }
        }
    }
}

/// Transverse crossings of a closed polyline with a test Lagrangian.
pub fn count_crossings(curve: &LagrangianCurve, l: &TestLagrangian) -> Result<u64> {
    let mut verts: Vec<Vec2> = Vec::with_capacity(curve.vertices.len());
    for &v in &curve.vertices {
        if verts.last().is_none_or(|&last| lift_distance(last, v) > DEDUP) {
            verts.push(v);
        }
    }
    if verts.len() < 2 {
        return Ok(0);
    }
    let levels: Vec<(f64, f64)> = verts.iter().map(|&v| l.level(v)).collect();
    let segments = levels.len() - 1;
    let overlapping = levels
        .windows(2)
        .filter(|w| w[0].1 <= OVERLAP && w[1].1 <= OVERLAP)
        .count();
    let fraction = overlapping as f64 / segments as f64;
    if fraction > 0.5 {
        return Err(Error::DegenerateOverlap {
            label: l.label.clone(),
            fraction,
        });
    }
    let count = match l.kind {
        LagrangianKind::Circle { .. } => levels
            .windows(2)
            .filter(|w| (w[0].0 > -TIE) != (w[1].0 > -TIE))
            .count() as u64,
        _ => {
            // crossings of the integer levels of f between consecutive lifts
            let sheet = |f: f64| (f + TIE).floor() as i64;
            levels
                .windows(2)
                .map(|w| (sheet(w[1].0) - sheet(w[0].0)).unsigned_abs())
                .sum()
        }
    };
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> LagrangianCurve {
        LagrangianCurve::horizontal(0.5, 100)
    }

    #[test]
    fn unflowed_reference_curve() {
        let count = |label: &str| count_crossings(&k(), &TestLagrangian::standard(label).unwrap());
        assert_eq!(count("L2").unwrap(), 1);
        assert_eq!(count("L1").unwrap(), 1);
        assert_eq!(count("L4").unwrap(), 2);
        assert_eq!(count("L5").unwrap(), 3);
        assert_eq!(count("L6").unwrap(), 4);
        assert_eq!(count("L7").unwrap(), 0);
        assert_eq!(count("L10").unwrap(), 1);
        assert_eq!(count("L13").unwrap(), 2);
        assert!(matches!(count("L8"), Err(Error::DegenerateOverlap { .. })));
    }

    #[test]
    fn circles_cross_lines_twice() {
        let c = LagrangianCurve::circle([0.5, 0.5], 0.25, 400);
        let count = |label: &str| count_crossings(&c, &TestLagrangian::standard(label).unwrap()).unwrap();
        assert_eq!(count("L2"), 2);
        assert_eq!(count("L8"), 2);
        assert_eq!(count("L1"), 2);
        assert_eq!(count("L13"), 0);
        let shifted = LagrangianCurve::circle([0.55, 0.5], 0.1, 400);
        assert_eq!(count_crossings(&shifted, &TestLagrangian::standard("L13").unwrap()).unwrap(), 2);
    }

    #[test]
    fn duplicate_vertices_are_ignored() {
        let mut c = k();
        let v = c.vertices[30];
        c.vertices.insert(30, v);
        assert_eq!(count_crossings(&c, &TestLagrangian::standard("L5").unwrap()).unwrap(), 3);
    }

    #[test]
    fn invalid_lagrangians() {
        assert!(TestLagrangian::new(LagrangianKind::Sloped { p: 0, q: 0 }, "x").is_err());
        assert!(TestLagrangian::new(LagrangianKind::Vertical { c: 1.0 }, "x").is_err());
        assert!(TestLagrangian::new(LagrangianKind::Circle { center: [0.5, 0.5], radius: 0.5 }, "x").is_err());
        assert!(TestLagrangian::standard("L15").is_err());
    }

    #[test]
    fn non_reduced_slopes_match_reduced_ones() {
        let a = TestLagrangian::new(LagrangianKind::Sloped { p: 2, q: 4 }, "a").unwrap();
        assert_eq!(count_crossings(&k(), &a).unwrap(), 2);
        assert_eq!(a.polyline(10).winding, [1, 2]);
    }

    #[test]
    fn lagrangian_polylines_cross_k_by_intersection_number() {
        for l in TestLagrangian::standard_set() {
            let poly = l.polyline(997);
            poly.validate().unwrap();
            if l.label == "L8" {
                continue;
            }
            let expected = count_crossings(&k(), &l).unwrap();
            let horizontal = TestLagrangian::new(LagrangianKind::Horizontal { c: 0.5 }, "K").unwrap();
            assert_eq!(count_crossings(&poly, &horizontal).unwrap(), expected, "{}", l.label);
        }
    }
}
