//! Two-dimensional rate regions: rectangles, pentagons, and their convex hull.

use serde::{Deserialize, Serialize};

pub const CONTAINS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 2]", from = "[f64; 2]")]
pub struct RatePoint {
    pub x: f64,
    pub y: f64,
}

impl From<RatePoint> for [f64; 2] {
    fn from(p: RatePoint) -> Self {
        [p.x, p.y]
    }
}

impl From<[f64; 2]> for RatePoint {
    fn from(a: [f64; 2]) -> Self {
        RatePoint { x: a[0], y: a[1] }
    }
}

impl RatePoint {
    pub fn new(x: f64, y: f64) -> Self {
        RatePoint { x, y }
    }

    /// Negative components set to zero.
    pub fn clamped(self) -> Self {
        RatePoint::new(self.x.max(0.0), self.y.max(0.0))
    }

    fn sub(self, o: RatePoint) -> RatePoint {
        RatePoint::new(self.x - o.x, self.y - o.y)
    }

    fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

fn cross(o: RatePoint, a: RatePoint, b: RatePoint) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// `lam p1 + (1 - lam) p2`.
pub fn timeshare(p1: RatePoint, p2: RatePoint, lam: f64) -> RatePoint {
    RatePoint::new(
        lam * p1.x + (1.0 - lam) * p2.x,
        lam * p1.y + (1.0 - lam) * p2.y,
    )
}

/// Corners of the rectangle `[0, p.x] x [0, p.y]` after clamping.
pub fn rectangle_corners(p: RatePoint) -> [RatePoint; 4] {
    let p = p.clamped();
    [
        RatePoint::new(0.0, 0.0),
        RatePoint::new(p.x, 0.0),
        RatePoint::new(0.0, p.y),
        p,
    ]
}

/// `{x <= a, y <= b, x + y <= s}` in the nonnegative quadrant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pentagon {
    pub a_cap: f64,
    pub b_cap: f64,
    pub sum_cap: f64,
}

/// A pentagon together with the raw caps it was built from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PentagonReport {
    pub pentagon: Pentagon,
    pub raw: [f64; 3],
    /// `sum > a + b` beyond tolerance in the raw caps; such inputs should not occur.
    pub sum_violation: bool,
    /// The sum constraint is inactive and the pentagon is a rectangle.
    pub degenerate: bool,
}

impl Pentagon {
    /// Clamps caps to be nonnegative; a sum cap at or above `a + b` is stored as `a + b`.
    pub fn new(a_cap: f64, b_cap: f64, sum_cap: f64) -> Self {
        Pentagon::report(a_cap, b_cap, sum_cap).pentagon
    }

    pub fn report(a_cap: f64, b_cap: f64, sum_cap: f64) -> PentagonReport {
        let a = a_cap.max(0.0);
        let b = b_cap.max(0.0);
        let s = sum_cap.max(0.0);
        let degenerate = s >= a + b;
        PentagonReport {
            pentagon: Pentagon {
                a_cap: a,
                b_cap: b,
                sum_cap: if degenerate { a + b } else { s },
            },
            raw: [a_cap, b_cap, sum_cap],
            sum_violation: sum_cap > a_cap + b_cap + CONTAINS_TOL,
            degenerate,
        }
    }

    /// Extreme points, counterclockwise from the origin, duplicates removed.
    pub fn vertices(&self) -> Vec<RatePoint> {
        let a = self.a_cap.min(self.sum_cap);
        let b = self.b_cap.min(self.sum_cap);
        let raw = [
            RatePoint::new(0.0, 0.0),
            RatePoint::new(a, 0.0),
            RatePoint::new(a, self.sum_cap - a),
            RatePoint::new(self.sum_cap - b, b),
            RatePoint::new(0.0, b),
        ];
        let mut out: Vec<RatePoint> = Vec::with_capacity(5);
        for p in raw {
            if out.last().is_none_or(|q| q.sub(p).norm() > 0.0) && out.first() != Some(&p) {
                out.push(p);
            }
        }
        out
    }

    pub fn contains(&self, p: RatePoint) -> bool {
        p.x >= -CONTAINS_TOL
            && p.y >= -CONTAINS_TOL
            && p.x <= self.a_cap + CONTAINS_TOL
            && p.y <= self.b_cap + CONTAINS_TOL
            && p.x + p.y <= self.sum_cap + CONTAINS_TOL
    }
}

/// Turns flatter than this angle count as collinear, so round-off in computed
/// rates does not leave spurious vertices.
const COLLINEAR_EPS: f64 = 1e-12;

/// `b` adds nothing to the chain `a, b, p`: a right turn, or a turn within
/// `COLLINEAR_EPS` radians with `b` lying between `a` and `p`.
fn redundant(a: RatePoint, b: RatePoint, p: RatePoint) -> bool {
    let c = cross(a, b, p);
    if c <= 0.0 {
        return true;
    }
    let (ab, ap) = (b.sub(a), p.sub(a));
    let t = ab.x * ap.x + ab.y * ap.y;
    c <= COLLINEAR_EPS * ab.norm() * ap.norm() && t > 0.0 && t < ap.x * ap.x + ap.y * ap.y
}

/// Andrew's monotone chain. Counterclockwise, no repeated or collinear vertices,
/// starting from the lowest-then-leftmost point.
pub fn convex_hull(points: &[RatePoint]) -> Vec<RatePoint> {
    let mut pts: Vec<RatePoint> = points
        .iter()
        .copied()
        .filter(|p| p.x.is_finite() && p.y.is_finite())
        .collect();
    pts.sort_by(|a, b| {
        a.x.partial_cmp(&b.x)
            .expect("finite")
            .then(a.y.partial_cmp(&b.y).expect("finite"))
    });
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<RatePoint> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && redundant(lower[lower.len() - 2], lower[lower.len() - 1], p) {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<RatePoint> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && redundant(upper[upper.len() - 2], upper[upper.len() - 1], p) {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn point_segment_distance(p: RatePoint, a: RatePoint, b: RatePoint) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.x * ab.x + ab.y * ab.y;
    if len2 == 0.0 {
        return p.sub(a).norm();
    }
    let t = (((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2).clamp(0.0, 1.0);
    p.sub(RatePoint::new(a.x + t * ab.x, a.y + t * ab.y)).norm()
}

fn edges(hull: &[RatePoint]) -> Vec<(RatePoint, RatePoint)> {
    match hull.len() {
        0 => Vec::new(),
        1 => vec![(hull[0], hull[0])],
        2 => vec![(hull[0], hull[1])],
        n => (0..n).map(|i| (hull[i], hull[(i + 1) % n])).collect(),
    }
}

fn distance_to_boundary(p: RatePoint, hull: &[RatePoint]) -> f64 {
    edges(hull)
        .into_iter()
        .map(|(a, b)| point_segment_distance(p, a, b))
        .fold(f64::INFINITY, f64::min)
}

/// Extreme-point cloud and its convex hull.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region2D {
    pub axes: [String; 2],
    pub points: Vec<RatePoint>,
    pub hull: Vec<RatePoint>,
}

impl Region2D {
    pub fn from_points(axes: [&str; 2], points: Vec<RatePoint>) -> Self {
        let hull = convex_hull(&points);
        Region2D {
            axes: [axes[0].to_string(), axes[1].to_string()],
            points,
            hull,
        }
    }

    /// Union of the rectangles `[0, R] x [0, Q]` spanned by the given corners.
    pub fn from_rectangles(axes: [&str; 2], corners: &[RatePoint]) -> Self {
        let points = corners.iter().flat_map(|&p| rectangle_corners(p)).collect();
        Region2D::from_points(axes, points)
    }

    pub fn from_pentagons(axes: [&str; 2], pentagons: &[Pentagon]) -> Self {
        let points = pentagons.iter().flat_map(Pentagon::vertices).collect();
        Region2D::from_points(axes, points)
    }

    /// Inside or on the hull, with outward slack `CONTAINS_TOL`.
    pub fn contains(&self, p: RatePoint) -> bool {
        match self.hull.len() {
            0 => false,
            1 | 2 => distance_to_boundary(p, &self.hull) <= CONTAINS_TOL,
            n => (0..n).all(|i| {
                let (a, b) = (self.hull[i], self.hull[(i + 1) % n]);
                let len = b.sub(a).norm();
                cross(a, b, p) / len >= -CONTAINS_TOL
            }),
        }
    }

    pub fn union(regions: &[Region2D]) -> Region2D {
        let axes = regions
            .first()
            .map(|r| r.axes.clone())
            .unwrap_or_else(|| ["x".to_string(), "y".to_string()]);
        let points: Vec<RatePoint> = regions.iter().flat_map(|r| r.points.clone()).collect();
        let hull = convex_hull(&points);
        Region2D { axes, points, hull }
    }

    /// Largest value of `w . p` over the hull.
    pub fn support(&self, w: (f64, f64)) -> f64 {
        self.hull
            .iter()
            .map(|p| w.0 * p.x + w.1 * p.y)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn area(&self) -> f64 {
        let n = self.hull.len();
        if n < 3 {
            return 0.0;
        }
        (0..n)
            .map(|i| {
                let (a, b) = (self.hull[i], self.hull[(i + 1) % n]);
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
            / 2.0
    }
}

/// Points spaced at most `step` apart along the hull boundary, vertices included.
fn boundary_samples(hull: &[RatePoint], step: f64) -> Vec<RatePoint> {
    let mut out = Vec::new();
    for (a, b) in edges(hull) {
        let n = ((b.sub(a).norm() / step).ceil() as usize).max(1);
        for i in 0..n {
            let t = i as f64 / n as f64;
            out.push(RatePoint::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
        }
        out.push(b);
    }
    out
}

/// Hausdorff distance between hull boundaries, by dense sampling of each
/// boundary against exact point-to-segment distances to the other. The
/// sampling error is at most half the spacing, 5e-5.
pub fn hausdorff(a: &Region2D, b: &Region2D) -> f64 {
    if a.hull.is_empty() || b.hull.is_empty() {
        return f64::INFINITY;
    }
    const STEP: f64 = 1e-4;
    let one_way = |from: &[RatePoint], to: &[RatePoint]| {
        boundary_samples(from, STEP)
            .into_iter()
            .map(|p| distance_to_boundary(p, to))
            .fold(0.0, f64::max)
    };
    one_way(&a.hull, &b.hull).max(one_way(&b.hull, &a.hull))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> RatePoint {
        RatePoint::new(x, y)
    }

    #[test]
    fn hull_of_square_with_interior_points() {
        let pts = vec![
            p(0.0, 0.0),
            p(1.0, 0.0),
            p(1.0, 1.0),
            p(0.0, 1.0),
            p(0.5, 0.5),
            p(0.5, 0.0),
        ];
        let h = convex_hull(&pts);
        assert_eq!(h, vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]);
    }

    #[test]
    fn pentagon_containment() {
        let pent = Pentagon::new(1.0, 1.0, 1.5);
        let r = Region2D::from_pentagons(["Qa", "Qb"], &[pent]);
        assert!(r.contains(p(0.9, 0.6)));
        assert!(!r.contains(p(0.9, 0.7)));
        assert!(!pent.contains(p(0.9, 0.7)));
        assert_eq!(r.hull.len(), 5);
    }

    #[test]
    fn degenerate_pentagon_is_rectangle() {
        let rep = Pentagon::report(1.0, 0.5, 2.0);
        assert!(rep.degenerate && rep.sum_violation);
        assert_eq!(rep.pentagon.sum_cap, 1.5);
        assert_eq!(rep.pentagon.vertices().len(), 4);
        let rep = Pentagon::report(-0.1, 0.5, 0.2);
        assert_eq!(rep.pentagon.a_cap, 0.0);
        assert!(!rep.degenerate && !rep.sum_violation);
        assert_eq!(
            rep.pentagon.vertices(),
            vec![RatePoint::new(0.0, 0.0), RatePoint::new(0.0, 0.2)]
        );
    }

    #[test]
    fn union_with_self() {
        let r = Region2D::from_rectangles(["R", "Q"], &[p(0.8, 0.5), p(0.2, 0.9)]);
        let u = Region2D::union(&[r.clone(), r.clone()]);
        assert_eq!(u.hull, r.hull);
    }

    #[test]
    fn timeshare_midpoint() {
        assert_eq!(timeshare(p(1.0, 0.0), p(0.0, 1.0), 0.5), p(0.5, 0.5));
    }

    #[test]
    fn hausdorff_of_shifted_squares() {
        let a = Region2D::from_rectangles(["x", "y"], &[p(1.0, 1.0)]);
        let b = Region2D::from_rectangles(["x", "y"], &[p(1.1, 1.0)]);
        assert!((hausdorff(&a, &b) - 0.1).abs() < 1e-9);
        assert_eq!(hausdorff(&a, &a), 0.0);
    }

    #[test]
    fn degenerate_hull_contains() {
        let seg = Region2D::from_points(["R", "Q"], vec![p(0.0, 0.0), p(0.0, 1.0)]);
        assert!(seg.contains(p(0.0, 0.5)));
        assert!(!seg.contains(p(0.01, 0.5)));
    }

    #[test]
    fn thin_cloud_keeps_its_extent() {
        // rates from a channel that ignores one sender: x is pure round-off
        let pts = [
            (0.0, 0.0),
            (0.0, 0.99996),
            (4e-16, 0.0),
            (4e-16, 0.99996),
            (3.5e-15, 0.0),
            (3.5e-15, 1.4e-6),
        ];
        let r = Region2D::from_points(
            ["R", "Q"],
            pts.iter().map(|&(x, y)| RatePoint::new(x, y)).collect(),
        );
        let top = r.hull.iter().map(|p| p.y).fold(0.0, f64::max);
        assert_eq!(top, 0.99996);
        for &(x, y) in &pts {
            assert!(r.contains(RatePoint::new(x, y)));
        }
    }
}
