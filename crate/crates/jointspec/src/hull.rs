//! Planar convex hulls, support data, and exact Hausdorff distance between
//! convex polygons.
//!
//! Hull vertices are stored counter-clockwise starting from the
//! lexicographically smallest point, with collinear interior points removed.
//! The Hausdorff distance between two convex polygons is exact because the
//! directed distance sup_{x∈A} d(x, B) of a convex function over a polytope
//! is attained at a vertex of A.

use crate::error::{Error, Result};

/// Cross products below this magnitude count as collinear during hull
/// construction.
pub const HULL_TOL: f64 = 1e-12;

/// Convex polygon (possibly degenerate: a segment or a single point).
#[derive(Debug, Clone, PartialEq)]
pub struct Hull2D {
    vertices: Vec<[f64; 2]>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Monotone-chain convex hull. Accepts any non-empty point set; duplicates
/// and collinear runs collapse.
pub fn hull2(points: &[[f64; 2]]) -> Result<Hull2D> {
    if points.is_empty() {
        return Err(Error::InvalidParams("hull of empty point set".into()));
    }
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::NumericalFailure("non-finite point in hull input".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() == 1 {
        return Ok(Hull2D { vertices: pts });
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2
            && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= HULL_TOL
        {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2
            && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= HULL_TOL
        {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.is_empty() {
        // All points collinear: keep the two extremes.
        lower = vec![pts[0], *pts.last().unwrap()];
        lower.dedup();
    }
    Ok(Hull2D { vertices: lower })
}

impl Hull2D {
    /// Build directly from vertices already known to be convex and CCW.
    pub fn from_vertices(vertices: Vec<[f64; 2]>) -> Result<Self> {
        hull2(&vertices)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn is_degenerate(&self) -> bool {
        self.vertices.len() < 3
    }

    /// Support function h(u) = max over the hull of ⟨v, u⟩.
    pub fn support(&self, dir: [f64; 2]) -> f64 {
        self.vertices
            .iter()
            .map(|v| v[0] * dir[0] + v[1] * dir[1])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Euclidean distance from `p` to the hull; 0 when inside.
    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        match self.vertices.len() {
            1 => dist(p, self.vertices[0]),
            2 => segment_distance(p, self.vertices[0], self.vertices[1]),
            _ => {
                let inside = self
                    .edges()
                    .all(|(a, b)| cross(a, b, p) >= 0.0);
                if inside {
                    return 0.0;
                }
                self.edges()
                    .map(|(a, b)| segment_distance(p, a, b))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Membership with an additive margin: distance_to(p) ≤ tol.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        self.distance_to(p) <= tol
    }

    /// Boundary edges in vertex order, closing back to the first vertex.
    pub fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace area (0 for degenerate hulls).
    pub fn area(&self) -> f64 {
        if self.vertices.len() < 3 {
            return 0.0;
        }
        0.5 * self
            .edges()
            .map(|(a, b)| a[0] * b[1] - b[0] * a[1])
            .sum::<f64>()
    }

    /// Area centroid; falls back to the vertex average for (near-)degenerate
    /// hulls where the shoelace formula loses precision.
    pub fn centroid(&self) -> [f64; 2] {
        let n = self.vertices.len() as f64;
        let area = self.area();
        if area.abs() < 1e-15 {
            let mut c = [0.0, 0.0];
            for v in &self.vertices {
                c[0] += v[0] / n;
                c[1] += v[1] / n;
            }
            return c;
        }
        let mut cx = 0.0;
        let mut cy = 0.0;
        for (a, b) in self.edges() {
            let w = a[0] * b[1] - b[0] * a[1];
            cx += (a[0] + b[0]) * w;
            cy += (a[1] + b[1]) * w;
        }
        [cx / (6.0 * area), cy / (6.0 * area)]
    }

    /// Largest distance from any vertex of `self` to the other hull.
    pub fn directed_hausdorff(&self, other: &Hull2D) -> f64 {
        self.vertices
            .iter()
            .map(|&v| other.distance_to(v))
            .fold(0.0, f64::max)
    }
}

/// Symmetric Hausdorff distance between two convex polygons.
pub fn hausdorff(a: &Hull2D, b: &Hull2D) -> f64 {
    a.directed_hausdorff(b).max(b.directed_hausdorff(a))
}

fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Distance from `p` to the closed segment [a, b].
pub fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len_sq = ab[0] * ab[0] + ab[1] * ab[1];
    if len_sq == 0.0 {
        return dist(p, a);
    }
    let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / len_sq).clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}
