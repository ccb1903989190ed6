use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{floor, hypot, wrap_into};

pub type Point = [f64; 2];

/// Twice the signed shoelace area; positive for counterclockwise order.
fn shoelace2(v: &[Point]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum()
}

pub fn signed_area(v: &[Point]) -> f64 {
    0.5 * shoelace2(v)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// No two non-adjacent edges of the closed polyline touch.
pub fn is_simple(v: &[Point]) -> bool {
    let n = v.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in (i + 1)..n {
            // Skip the edge itself and its two neighbours.
            if j == i || (j + 1) % n == i || j == (i + 1) % n {
                continue;
            }
            let (c, d) = (v[j], v[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Shoelace area of a simple polygon.
pub fn polygon_area(v: &[Point]) -> Result<f64> {
    if v.len() < 3 {
        return Err(Error::InvalidArgument(
            "polygon needs at least three vertices",
        ));
    }
    if !is_simple(v) {
        return Err(Error::SelfIntersecting);
    }
    Ok(signed_area(v).abs())
}

/// Even-odd ray casting.
pub fn point_in_polygon(v: &[Point], p: Point) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let s = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    hypot(p[0] - (a[0] + s * dx), p[1] - (a[1] + s * dy))
}

/// Closed boundary of a (time-limited) region of attraction in the plane.
///
/// Vertices are stored unwrapped; angular coordinates listed in
/// `wrap_dims` are handled at query time by testing every period-shifted
/// copy of the query point that can reach the polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPolygon {
    vertices: Vec<Point>,
    seed_angles: Vec<f64>,
    horizon: f64,
    wrap_dims: Vec<(usize, f64)>,
}

impl BoundaryPolygon {
    pub const MIN_VERTICES: usize = 8;

    pub fn new(
        vertices: Vec<Point>,
        seed_angles: Vec<f64>,
        horizon: f64,
        wrap_dims: Vec<(usize, f64)>,
    ) -> Result<Self> {
        if vertices.len() < Self::MIN_VERTICES {
            return Err(Error::InvalidArgument(
                "boundary polygon needs at least 8 vertices",
            ));
        }
        if seed_angles.len() != vertices.len() {
            return Err(Error::DimensionMismatch {
                expected: vertices.len(),
                found: seed_angles.len(),
            });
        }
        if vertices
            .iter()
            .any(|p| !p[0].is_finite() || !p[1].is_finite())
        {
            return Err(Error::NonFiniteState { t: f64::NAN });
        }
        if wrap_dims.iter().any(|&(d, p)| d > 1 || !(p > 0.0)) {
            return Err(Error::InvalidArgument(
                "wrap dimension must be 0 or 1 with a positive period",
            ));
        }
        Ok(Self {
            vertices,
            seed_angles,
            horizon,
            wrap_dims,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Parameter angle on the seed ellipse that produced each vertex.
    pub fn seed_angles(&self) -> &[f64] {
        &self.seed_angles
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn wrap_dims(&self) -> &[(usize, f64)] {
        &self.wrap_dims
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn area(&self) -> Result<f64> {
        polygon_area(&self.vertices)
    }

    pub fn is_simple(&self) -> bool {
        is_simple(&self.vertices)
    }

    pub fn is_counterclockwise(&self) -> bool {
        self.signed_area() > 0.0
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                hypot(b[0] - a[0], b[1] - a[1])
            })
            .collect()
    }

    pub fn median_edge_length(&self) -> f64 {
        let mut e = self.edge_lengths();
        e.sort_by(|a, b| a.total_cmp(b));
        let n = e.len();
        if n % 2 == 1 {
            e[n / 2]
        } else {
            0.5 * (e[n / 2 - 1] + e[n / 2])
        }
    }

    pub fn perimeter(&self) -> f64 {
        self.edge_lengths().iter().sum()
    }

    /// Copies of `x` shifted by whole periods along wrapped dimensions that
    /// can fall inside the bounding box.
    fn shifted_queries(&self, x: Point) -> Vec<Point> {
        let (lo, hi) = self.bounding_box();
        let mut out = alloc::vec![x];
        for &(d, period) in &self.wrap_dims {
            let mut next = Vec::new();
            for q in &out {
                let base = wrap_into(q[d], -0.5 * period, period);
                let k_lo = floor((lo[d] - base) / period) as i64;
                let k_hi = floor((hi[d] - base) / period) as i64 + 1;
                for k in k_lo..=k_hi {
                    let mut s = *q;
                    s[d] = base + k as f64 * period;
                    next.push(s);
                }
            }
            out = next;
        }
        out
    }

    /// Even-odd containment after canonicalizing wrapped coordinates.
    pub fn contains(&self, x: Point) -> bool {
        if self.wrap_dims.is_empty() {
            return point_in_polygon(&self.vertices, x);
        }
        self.shifted_queries(x)
            .into_iter()
            .any(|q| point_in_polygon(&self.vertices, q))
    }

    /// Euclidean distance from `x` to the nearest edge over all wrapped copies.
    pub fn distance_to_boundary(&self, x: Point) -> f64 {
        let n = self.vertices.len();
        let queries = if self.wrap_dims.is_empty() {
            alloc::vec![x]
        } else {
            self.shifted_queries(x)
        };
        let mut best = f64::INFINITY;
        for q in queries {
            for i in 0..n {
                best = best.min(point_segment_distance(
                    q,
                    self.vertices[i],
                    self.vertices[(i + 1) % n],
                ));
            }
        }
        best
    }

    /// Vertex-set distance used in monotonicity checks: largest gap between
    /// consecutive vertices relative to the bounding-box diagonal.
    pub fn max_relative_gap(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        let diag = hypot(hi[0] - lo[0], hi[1] - lo[1]);
        self.edge_lengths().iter().copied().fold(0.0, f64::max) / diag.max(f64::MIN_POSITIVE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{cos, sin, PI, TAU};
    use alloc::vec;

    fn circle(n: usize, r: f64) -> Vec<Point> {
        (0..n)
            .map(|k| {
                let t = TAU * k as f64 / n as f64;
                [r * cos(t), r * sin(t)]
            })
            .collect()
    }

    #[test]
    fn unit_square_area() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert_eq!(polygon_area(&sq).unwrap(), 1.0);
        assert!(signed_area(&sq) > 0.0);
    }

    #[test]
    fn bowtie_is_rejected() {
        let bow = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(!is_simple(&bow));
        assert_eq!(polygon_area(&bow), Err(Error::SelfIntersecting));
    }

    #[test]
    fn circle_area_converges() {
        let a = polygon_area(&circle(1024, 1.0)).unwrap();
        assert!((a - PI).abs() / PI < 1e-3);
    }

    #[test]
    fn containment_with_wrap() {
        let c: Vec<Point> = circle(64, 0.5);
        let n = c.len();
        let poly = BoundaryPolygon::new(c, vec![0.0; n], 1.0, vec![(0, TAU)]).unwrap();
        assert!(poly.contains([0.0, 0.0]));
        assert!(poly.contains([TAU, 0.1]));
        assert!(poly.contains([-2.0 * TAU + 0.2, -0.1]));
        assert!(!poly.contains([PI, 0.0]));
        assert!(!poly.contains([0.0, 5.0]));
        assert!((poly.distance_to_boundary([TAU, 0.0]) - 0.5).abs() < 1e-2);
    }

    #[test]
    fn wide_polygon_consults_every_period_copy() {
        // Thin strip spanning three periods, away from the canonical band.
        let mut v: Vec<Point> = (0..10).map(|k| [2.0 + 2.0 * k as f64, 0.0]).collect();
        v.extend((0..10).rev().map(|k| [2.0 + 2.0 * k as f64, 1.0]));
        let n = v.len();
        let poly = BoundaryPolygon::new(v, vec![0.0; n], 1.0, vec![(0, TAU)]).unwrap();
        assert!(poly.contains([17.0, 0.5]));
        assert!(poly.contains([17.0 - TAU, 0.5]));
        assert!(poly.contains([17.0 - 3.0 * TAU, 0.5]));
        assert!(!poly.contains([17.0, 1.5]));
    }
}
