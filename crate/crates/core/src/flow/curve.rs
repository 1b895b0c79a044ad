use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::torus::{lift_distance, Vec2};

use super::{integrate_lifts, FlowSettings};

/// Polyline on the torus stored through planar lifts.
///
/// A closed curve repeats its first vertex at the end, shifted by the integer
/// `winding`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianCurve {
    pub vertices: Vec<Vec2>,
    pub closed: bool,
    pub winding: [i64; 2],
}

impl LagrangianCurve {
    /// `S¹ × {y}` sampled with `n` segments.
    pub fn horizontal(y: f64, n: usize) -> Self {
        let vertices = (0..=n).map(|i| [i as f64 / n as f64, y]).collect();
        LagrangianCurve {
            vertices,
            closed: true,
            winding: [1, 0],
        }
    }

    /// `{x} × S¹` sampled with `n` segments.
    pub fn vertical(x: f64, n: usize) -> Self {
        let vertices = (0..=n).map(|i| [x, i as f64 / n as f64]).collect();
        LagrangianCurve {
            vertices,
            closed: true,
            winding: [0, 1],
        }
    }

    /// Counterclockwise circle with `n` segments.
    pub fn circle(center: Vec2, radius: f64, n: usize) -> Self {
        let mut vertices: Vec<Vec2> = (0..n)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            })
            .collect();
        vertices.push(vertices[0]);
        LagrangianCurve {
            vertices,
            closed: true,
            winding: [0, 0],
        }
    }

    /// Closed curve from lifts whose last vertex is an integer translate of the first.
    pub fn closed_from_lifts(vertices: Vec<Vec2>) -> Result<Self> {
        let (first, last) = match (vertices.first(), vertices.last()) {
            (Some(f), Some(l)) if vertices.len() >= 3 => (*f, *l),
            _ => return Err(Error::validation("curve", "needs at least 3 vertices")),
        };
        let w = [last[0] - first[0], last[1] - first[1]];
        if w.iter().any(|c| c.fract() != 0.0) {
            return Err(Error::validation("curve", "closing vertex is not an integer translate"));
        }
        let curve = LagrangianCurve {
            vertices,
            closed: true,
            winding: [w[0] as i64, w[1] as i64],
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vertices.len() < 2 {
            return Err(Error::validation("curve", "needs at least 2 vertices"));
        }
        if self.closed {
            let (f, l) = (self.vertices[0], self.vertices[self.vertices.len() - 1]);
            if l[0] - f[0] != self.winding[0] as f64 || l[1] - f[1] != self.winding[1] as f64 {
                return Err(Error::validation("curve", "last lift minus first lift must equal the winding"));
            }
        }
        for w in self.vertices.windows(2) {
            if (w[1][0] - w[0][0]).abs() >= 0.5 || (w[1][1] - w[0][1]).abs() >= 0.5 {
                return Err(Error::validation("curve", "adjacent lifts must be within 0.5"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Euclidean length of the lifted polyline.
    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| lift_distance(w[0], w[1])).sum()
    }

    /// Signed shoelace area of the lifted polygon (meaningful for null-homologous curves).
    pub fn signed_area(&self) -> f64 {
        let v = &self.vertices;
        let mut a = 0.0;
        for w in v.windows(2) {
            a += w[0][0] * w[1][1] - w[1][0] * w[0][1];
        }
        0.5 * a
    }

    pub fn max_segment(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| lift_distance(w[0], w[1]))
            .fold(0.0, f64::max)
    }
}

/// Advect `curve` by the flow from time 0 to `t`, inserting source midpoints
/// wherever adjacent images drift farther apart than the refinement threshold.
pub fn advect_curve<H: Hamiltonian + ?Sized>(
    h: &H,
    curve: &LagrangianCurve,
    t: f64,
    settings: &FlowSettings,
) -> Result<LagrangianCurve> {
    curve.validate()?;
    settings.validate()?;
    // tolerance so that an exact spacing of η is not split by rounding
    let eta = settings.refinement_threshold * (1.0 + 1e-9);
    let advect = |pts: &mut [Vec2]| integrate_lifts(h, pts, 0.0, t, settings.steps);

    let mut source = curve.vertices.clone();
    let mut image = source.clone();
    let last = image.len() - 1;
    if curve.closed {
        advect(&mut image[..last])?;
        image[last] = [
            image[0][0] + curve.winding[0] as f64,
            image[0][1] + curve.winding[1] as f64,
        ];
    } else {
        advect(&mut image)?;
    }
    // depth[i] belongs to the segment (i, i + 1)
    let mut depth = vec![0u32; source.len() - 1];

    loop {
        let split: Vec<usize> = (0..depth.len())
            .filter(|&i| lift_distance(image[i], image[i + 1]) > eta)
            .collect();
        if split.is_empty() {
            break;
        }
        if split.iter().any(|&i| depth[i] >= settings.max_refinement_depth) {
            return Err(Error::RefinementOverflow {
                max_depth: settings.max_refinement_depth,
            });
        }
        let mids: Vec<Vec2> = split
            .iter()
            .map(|&i| {
                let (a, b) = (source[i], source[i + 1]);
                [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
            })
            .collect();
        let mut mid_images = mids.clone();
        advect(&mut mid_images)?;

        let grow = split.len();
        let mut new_source = Vec::with_capacity(source.len() + grow);
        let mut new_image = Vec::with_capacity(source.len() + grow);
        let mut new_depth = Vec::with_capacity(depth.len() + grow);
        let mut next = split.iter().peekable();
        let mut m = 0;
        for i in 0..depth.len() {
            new_source.push(source[i]);
            new_image.push(image[i]);
            if next.peek() == Some(&&i) {
                next.next();
                new_depth.push(depth[i] + 1);
                new_depth.push(depth[i] + 1);
                new_source.push(mids[m]);
                new_image.push(mid_images[m]);
                m += 1;
            } else {
                new_depth.push(depth[i]);
            }
        }
        new_source.push(source[depth.len()]);
        new_image.push(image[depth.len()]);
        source = new_source;
        image = new_image;
        depth = new_depth;
    }

    Ok(LagrangianCurve {
        vertices: image,
        closed: curve.closed,
        winding: curve.winding,
    })
}
