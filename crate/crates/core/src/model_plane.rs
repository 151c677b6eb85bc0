//! The model plane of constant curvature `χ < 0`, realised as the upper
//! half-plane. All trigonometry runs at curvature −1; lengths are rescaled by
//! `1/√(−χ)` on the way in and out.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::metric::{GeodesicSpace, MetricSpace};
use crate::search;

/// Length scale `1/√(−χ)` of the curvature-χ plane relative to the unit one.
pub fn curvature_scale(chi: f64) -> Result<f64> {
    if !chi.is_finite() || chi >= 0.0 {
        return Err(GeomError::BadCurvature(chi));
    }
    Ok(1.0 / (-chi).sqrt())
}

/// A point `x + iy` of the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    x: f64,
    y: f64,
}

impl ModelPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(GeomError::NonFinite("ModelPoint"));
        }
        if y <= 0.0 {
            return Err(GeomError::NotInHalfPlane(y));
        }
        Ok(Self { x, y })
    }

    /// The point `i`.
    pub const I: ModelPoint = ModelPoint { x: 0.0, y: 1.0 };

    pub(crate) fn raw(x: f64, y: f64) -> Self {
        debug_assert!(y > 0.0 && x.is_finite() && y.is_finite(), "({x}, {y})");
        Self { x, y }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// Distance at curvature −1.
    pub fn unit_distance(&self, other: &ModelPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let chord = (dx * dx + dy * dy).sqrt();
        2.0 * (chord / (2.0 * (self.y * other.y).sqrt())).asinh()
    }
}

/// Distance in the curvature-χ plane.
pub fn hp_distance(p: &ModelPoint, q: &ModelPoint, chi: f64) -> Result<f64> {
    let scale = curvature_scale(chi)?;
    for pt in [p, q] {
        if !pt.x.is_finite() || !pt.y.is_finite() {
            return Err(GeomError::NonFinite("hp_distance"));
        }
    }
    Ok(p.unit_distance(q) * scale)
}

/// An orientation-preserving isometry `z ↦ (az + b)/(cz + d)` with
/// `ad − bc = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusIsometry {
    m: [[f64; 2]; 2],
}

impl MobiusIsometry {
    pub const IDENTITY: MobiusIsometry = MobiusIsometry { m: [[1.0, 0.0], [0.0, 1.0]] };

    /// Normalises the matrix to determinant one. Fails for non-positive or
    /// non-finite determinants.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !det.is_finite() || det <= 0.0 {
            return Err(GeomError::InvalidParameter(format!("Möbius matrix with determinant {det}")));
        }
        let s = det.sqrt();
        Ok(Self { m: [[a / s, b / s], [c / s, d / s]] })
    }

    /// `z ↦ λ² z`, the matrix `diag(λ, 1/λ)`; translation length `2 ln λ`.
    pub fn diagonal(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(GeomError::InvalidParameter(format!("diagonal entry {lambda}")));
        }
        Ok(Self { m: [[lambda, 0.0], [0.0, 1.0 / lambda]] })
    }

    /// Rotation about `i` turning tangent vectors counter-clockwise by `angle`.
    pub fn rotation_about_i(angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Self { m: [[c, s], [-s, c]] }
    }

    /// Translation by unit-curvature distance `h` along the unit semicircle,
    /// moving `i` towards `+1`.
    pub fn translation_along_unit_circle(h: f64) -> Self {
        let (c, s) = ((0.5 * h).cosh(), (0.5 * h).sinh());
        Self { m: [[c, s], [s, c]] }
    }

    /// `z ↦ z + t`.
    pub fn horizontal(t: f64) -> Self {
        Self { m: [[1.0, t], [0.0, 1.0]] }
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        self.m
    }

    pub fn determinant(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn apply(&self, z: &ModelPoint) -> ModelPoint {
        let [[a, b], [c, d]] = self.m;
        let den_re = c * z.x + d;
        let den_im = c * z.y;
        let den = den_re * den_re + den_im * den_im;
        let num_re = a * z.x + b;
        let num_im = a * z.y;
        let x = (num_re * den_re + num_im * den_im) / den;
        let y = self.determinant() * z.y / den;
        ModelPoint::raw(x, y)
    }

    /// `self ∘ other`, renormalised to determinant one.
    pub fn compose(&self, other: &MobiusIsometry) -> MobiusIsometry {
        let p = self.m;
        let q = other.m;
        let m = [
            [p[0][0] * q[0][0] + p[0][1] * q[1][0], p[0][0] * q[0][1] + p[0][1] * q[1][1]],
            [p[1][0] * q[0][0] + p[1][1] * q[1][0], p[1][0] * q[0][1] + p[1][1] * q[1][1]],
        ];
        let s = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).sqrt();
        MobiusIsometry { m: [[m[0][0] / s, m[0][1] / s], [m[1][0] / s, m[1][1] / s]] }
    }

    pub fn inverse(&self) -> MobiusIsometry {
        let [[a, b], [c, d]] = self.m;
        MobiusIsometry { m: [[d, -b], [-c, a]] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IsometryKind {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsometryClass {
    pub kind: IsometryKind,
    pub translation_length: f64,
}

const TRACE_TOL: f64 = 1e-12;

/// Classifies by `|trace|`; the identity counts as elliptic.
pub fn classify_isometry(m: &MobiusIsometry, chi: f64) -> Result<IsometryClass> {
    let scale = curvature_scale(chi)?;
    let t = m.trace().abs();
    let class = if t > 2.0 + TRACE_TOL {
        IsometryClass {
            kind: IsometryKind::Hyperbolic,
            translation_length: 2.0 * (t / 2.0).acosh() * scale,
        }
    } else if t < 2.0 - TRACE_TOL {
        IsometryClass { kind: IsometryKind::Elliptic, translation_length: 0.0 }
    } else {
        let [[a, b], [c, d]] = m.matrix();
        let is_identity = b.abs() < TRACE_TOL && c.abs() < TRACE_TOL && (a - d).abs() < TRACE_TOL;
        let kind = if is_identity { IsometryKind::Elliptic } else { IsometryKind::Parabolic };
        IsometryClass { kind, translation_length: 0.0 }
    };
    Ok(class)
}

/// Unit-speed geodesic `t ↦ frame·(i e^{t√(−χ)})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneGeodesic {
    frame: MobiusIsometry,
    chi: f64,
}

impl PlaneGeodesic {
    pub fn from_frame(frame: MobiusIsometry, chi: f64) -> Result<Self> {
        curvature_scale(chi)?;
        Ok(Self { frame, chi })
    }

    /// The imaginary axis, oriented upwards, with `g(0) = i`.
    pub fn imaginary_axis(chi: f64) -> Result<Self> {
        Self::from_frame(MobiusIsometry::IDENTITY, chi)
    }

    pub fn frame(&self) -> &MobiusIsometry {
        &self.frame
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    fn scale(&self) -> f64 {
        1.0 / (-self.chi).sqrt()
    }

    pub fn eval(&self, t: f64) -> ModelPoint {
        let u = t / self.scale();
        self.frame.apply(&ModelPoint::raw(0.0, u.exp()))
    }

    /// The geodesic reparametrised by `t ↦ t + shift`.
    pub fn shifted(&self, shift: f64) -> PlaneGeodesic {
        let u = shift / self.scale();
        let d = MobiusIsometry::diagonal((0.5 * u).exp()).expect("finite shift");
        PlaneGeodesic { frame: self.frame.compose(&d), chi: self.chi }
    }

    /// Image under an isometry.
    pub fn transformed(&self, m: &MobiusIsometry) -> PlaneGeodesic {
        PlaneGeodesic { frame: m.compose(&self.frame), chi: self.chi }
    }
}

/// Unit-speed geodesic with `g(0) = p` and `g(d(p, q)) = q`.
pub fn geodesic_through(p: &ModelPoint, q: &ModelPoint, chi: f64) -> Result<PlaneGeodesic> {
    curvature_scale(chi)?;
    if p == q || p.unit_distance(q) == 0.0 {
        return Err(GeomError::DegenerateGeodesic);
    }
    let sy = p.y.sqrt();
    // z ↦ (z − x_p)/y_p sends p to i
    let to_i = MobiusIsometry { m: [[1.0 / sy, -p.x / sy], [0.0, sy]] };
    let q1 = to_i.apply(q);
    // Cayley transform of q1; rotating it onto the positive real axis puts q1
    // on the imaginary axis above i
    let (re, im) = {
        let (nr, ni) = (q1.x, q1.y - 1.0);
        let (dr, di) = (q1.x, q1.y + 1.0);
        let den = dr * dr + di * di;
        ((nr * dr + ni * di) / den, (ni * dr - nr * di) / den)
    };
    let rot = MobiusIsometry::rotation_about_i(-im.atan2(re));
    let frame = rot.compose(&to_i).inverse();
    PlaneGeodesic::from_frame(frame, chi)
}

/// Three vertices in the model plane realising prescribed side lengths.
///
/// Side `sides[k]` is opposite vertex `k`; `angles[k]` is the interior angle
/// at vertex `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTriangle {
    pub sides: [f64; 3],
    pub vertices: [ModelPoint; 3],
    pub angles: [f64; 3],
    pub chi: f64,
}

/// Interior angle opposite `opp` between sides `x` and `y` (unit curvature),
/// via the half-angle form of the hyperbolic law of cosines.
fn angle_between(x: f64, y: f64, opp: f64) -> f64 {
    if x == 0.0 || y == 0.0 {
        return 0.0;
    }
    let s = 0.5 * (x + y + opp);
    let num = ((s - x).max(0.0).sinh() * (s - y).max(0.0).sinh()).sqrt();
    let den = (s.sinh() * (s - opp).max(0.0).sinh()).sqrt();
    2.0 * num.atan2(den)
}

pub fn comparison_triangle(a: f64, b: f64, c: f64, chi: f64) -> Result<ComparisonTriangle> {
    let scale = curvature_scale(chi)?;
    if [a, b, c].iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(GeomError::TriangleInequality(a, b, c));
    }
    let tol = 1e-12 * (a + b + c).max(1.0);
    if a > b + c + tol || b > a + c + tol || c > a + b + tol {
        return Err(GeomError::TriangleInequality(a, b, c));
    }
    let (ua, ub, uc) = (a / scale, b / scale, c / scale);
    let angles = [angle_between(ub, uc, ua), angle_between(ua, uc, ub), angle_between(ua, ub, uc)];
    let vc = ModelPoint::I;
    let vb = ModelPoint::raw(0.0, ua.exp());
    let va = MobiusIsometry::rotation_about_i(angles[2]).apply(&ModelPoint::raw(0.0, ub.exp()));
    Ok(ComparisonTriangle { sides: [a, b, c], vertices: [va, vb, vc], angles, chi })
}

impl ComparisonTriangle {
    /// Length of the side joining vertices `i` and `j`.
    pub fn side_between(&self, i: usize, j: usize) -> f64 {
        assert!(i < 3 && j < 3 && i != j, "vertex indices ({i}, {j})");
        self.sides[3 - i - j]
    }

    /// The point at arclength `t` from vertex `from` on the side towards
    /// vertex `to`.
    pub fn comparison_point(&self, from: usize, to: usize, t: f64) -> Result<ModelPoint> {
        let len = self.side_between(from, to);
        let tol = 1e-12 * len.max(1.0);
        if !(t >= -tol && t <= len + tol) {
            return Err(GeomError::NotOnSide { t, len });
        }
        let (p, q) = (&self.vertices[from], &self.vertices[to]);
        if t <= 0.0 || len == 0.0 {
            return Ok(*p);
        }
        if t >= len {
            return Ok(*q);
        }
        Ok(geodesic_through(p, q, self.chi)?.eval(t))
    }
}

/// Nearest-point projection onto a geodesic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub s: f64,
    pub foot: ModelPoint,
    pub distance: f64,
}

/// Projection tolerance on the geodesic parameter.
pub const PROJECTION_TOL: f64 = 1e-10;

/// Projects `p` onto `g`: bracketing plus golden-section on the convex
/// profile `t ↦ d(p, g(t))`, then a bisection polish on
/// `d(p, g(t+1)) − d(p, g(t−1))`, which vanishes exactly at the foot because
/// the profile is symmetric about it and has non-zero slope there.
pub fn project_to_geodesic(p: &ModelPoint, g: &PlaneGeodesic) -> Result<Projection> {
    let scale = g.scale();
    let f = |t: f64| p.unit_distance(&g.eval(t));
    let (s0, _) = search::minimize_unimodal(&f, 0.0, scale, PROJECTION_TOL)?;
    let s = polish_symmetric(&f, s0, scale);
    let foot = g.eval(s);
    Ok(Projection { s, foot, distance: p.unit_distance(&foot) * scale })
}

fn polish_symmetric<F: Fn(f64) -> f64>(f: &F, s0: f64, scale: f64) -> f64 {
    let u = scale;
    let phi = |t: f64| f(t + u) - f(t - u);
    let width = 1e-6 * scale.max(s0.abs());
    let (mut lo, mut hi) = (s0 - width, s0 + width);
    if !(phi(lo) < 0.0 && phi(hi) > 0.0) {
        return s0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The model plane as a metric space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneSpace {
    pub chi: f64,
}

impl PlaneSpace {
    pub fn new(chi: f64) -> Result<Self> {
        curvature_scale(chi)?;
        Ok(Self { chi })
    }

    pub fn unit() -> Self {
        Self { chi: -1.0 }
    }

    /// A point at distance `r` from `i` in the direction `angle`.
    pub fn polar(&self, r: f64, angle: f64) -> ModelPoint {
        let u = r * (-self.chi).sqrt();
        MobiusIsometry::rotation_about_i(angle).apply(&ModelPoint::raw(0.0, u.exp()))
    }

    /// Uniformly-in-radius random point of the ball of radius `radius`
    /// about `i`.
    pub fn sample_ball<R: Rng>(&self, rng: &mut R, radius: f64) -> ModelPoint {
        let r = rng.gen_range(0.0..=radius);
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        self.polar(r, angle)
    }
}

impl MetricSpace for PlaneSpace {
    type Point = ModelPoint;

    fn distance(&self, p: &ModelPoint, q: &ModelPoint) -> f64 {
        p.unit_distance(q) / (-self.chi).sqrt()
    }
}

impl GeodesicSpace for PlaneSpace {
    fn segment_point(&self, p: &ModelPoint, q: &ModelPoint, t: f64) -> ModelPoint {
        match geodesic_through(p, q, self.chi) {
            Ok(g) => g.eval(t),
            Err(_) => *p,
        }
    }
}

/// Samples pairs of points on the sides of the geodesic triangle `triangle`
/// in `space` and returns the largest excess `d(p, q) − d(p̄, q̄)` over the
/// corresponding comparison points. A non-positive value (up to rounding)
/// certifies the comparison inequality on this triangle.
pub fn cat_inequality_check<S: GeodesicSpace>(
    space: &S,
    triangle: &[S::Point; 3],
    samples: usize,
    chi: f64,
    seed: u64,
) -> Result<f64> {
    let d = |i: usize, j: usize| space.distance(&triangle[i], &triangle[j]);
    let (a, b, c) = (d(1, 2), d(0, 2), d(0, 1));
    let perimeter = a + b + c;
    let threshold = space.lifting_threshold(triangle);
    if perimeter >= threshold {
        return Err(GeomError::AboveLiftingThreshold { perimeter, threshold });
    }
    let tri = comparison_triangle(a, b, c, chi)?;
    const SIDES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = if samples == 0 { 0.0 } else { f64::NEG_INFINITY };
    for _ in 0..samples {
        let (i1, j1) = SIDES[rng.gen_range(0..3)];
        let (i2, j2) = SIDES[rng.gen_range(0..3)];
        let t1 = rng.gen::<f64>() * tri.side_between(i1, j1);
        let t2 = rng.gen::<f64>() * tri.side_between(i2, j2);
        let p = space.segment_point(&triangle[i1], &triangle[j1], t1);
        let q = space.segment_point(&triangle[i2], &triangle[j2], t2);
        let pb = tri.comparison_point(i1, j1, t1)?;
        let qb = tri.comparison_point(i2, j2, t2)?;
        let excess = space.distance(&p, &q) - hp_distance(&pb, &qb, chi)?;
        worst = f64::max(worst, excess);
    }
    Ok(worst)
}
