//! Metric-space abstractions shared by every concrete space in the crate.

use crate::search;

/// A metric space with cheaply clonable points.
pub trait MetricSpace {
    type Point: Clone + Send + Sync;

    fn distance(&self, p: &Self::Point, q: &Self::Point) -> f64;
}

/// A uniquely geodesic metric space (at least on the scale the caller works
/// at): points along the segment between two points can be produced.
pub trait GeodesicSpace: MetricSpace {
    /// The point at arclength `t` from `p` on the geodesic segment `[p, q]`.
    fn segment_point(&self, p: &Self::Point, q: &Self::Point, t: f64) -> Self::Point;

    /// Upper bound on the perimeter of triangles whose geometry is faithfully
    /// captured by `segment_point` (for quotients: triangles that lift
    /// isometrically to the universal cover).
    fn lifting_threshold(&self, _triangle: &[Self::Point; 3]) -> f64 {
        f64::INFINITY
    }
}

/// Gromov product `(x, y)_w = ½(d(x,w) + d(y,w) − d(x,y))`.
pub fn gromov_product<S: MetricSpace>(space: &S, x: &S::Point, y: &S::Point, base: &S::Point) -> f64 {
    0.5 * (space.distance(x, base) + space.distance(y, base) - space.distance(x, y))
}

/// Four-point defect `min((x,z)_w, (z,y)_w) − (x,y)_w` of one ordered
/// quadruple. A space is δ-hyperbolic when this never exceeds δ.
pub fn four_point_defect<S: MetricSpace>(
    space: &S,
    x: &S::Point,
    y: &S::Point,
    z: &S::Point,
    w: &S::Point,
) -> f64 {
    let xz = gromov_product(space, x, z, w);
    let zy = gromov_product(space, z, y, w);
    let xy = gromov_product(space, x, y, w);
    xz.min(zy) - xy
}

/// Distance from `p` to the segment `[a, b]` together with the arclength of
/// the nearest point, found by golden-section on the convex distance profile.
pub fn distance_to_segment<S: GeodesicSpace>(space: &S, p: &S::Point, a: &S::Point, b: &S::Point, tol: f64) -> (f64, f64) {
    let len = space.distance(a, b);
    if len == 0.0 {
        return (0.0, space.distance(p, a));
    }
    let f = |t: f64| space.distance(p, &space.segment_point(a, b, t.clamp(0.0, len)));
    let t = search::golden_section(&f, 0.0, len, tol);
    // endpoints are not probed by the interior search
    [(t, f(t)), (0.0, f(0.0)), (len, f(len))]
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap()
}
