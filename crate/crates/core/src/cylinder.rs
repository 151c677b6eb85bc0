//! Hyperbolic cylinders `H²/⟨φ⟩` in Fermi coordinates `(s, h)`: arclength
//! along the core and signed distance from it.
//!
//! The universal cover is the model plane with the core lifted to the
//! imaginary axis; `(s, h)` lifts to `e^s (tanh h + i sech h)` at unit
//! curvature, and the deck group is generated by `z ↦ e^ω z`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::approximation::{ClassRepresentation, ClosedGeodesic};
use crate::error::{GeomError, Result};
use crate::flow::{LocalGeodesic, SpaceHandle, SpacePoint};
use crate::metric::{GeodesicSpace, MetricSpace};
use crate::model_plane::{geodesic_through, MobiusIsometry, ModelPoint, PlaneGeodesic, PlaneSpace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderConfig {
    pub omega: f64,
    pub chi: f64,
}

/// Fermi coordinates with `s` canonicalised into `[0, ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FermiPoint {
    pub s: f64,
    pub h: f64,
}

impl CylinderConfig {
    pub fn new(omega: f64, chi: f64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(GeomError::InvalidParameter(format!("cylinder period {omega}")));
        }
        crate::model_plane::curvature_scale(chi)?;
        Ok(Self { omega, chi })
    }

    pub(crate) fn scale(&self) -> f64 {
        1.0 / (-self.chi).sqrt()
    }

    pub fn point(&self, s: f64, h: f64) -> FermiPoint {
        let mut s = s.rem_euclid(self.omega);
        if s >= self.omega {
            s = 0.0;
        }
        FermiPoint { s, h }
    }

    /// Lift of `(s, h)` with `s` taken literally (no reduction mod ω).
    pub fn lift(&self, s: f64, h: f64) -> ModelPoint {
        let (us, uh) = (s / self.scale(), h / self.scale());
        let e = us.exp();
        ModelPoint::raw(e * uh.tanh(), e / uh.cosh())
    }

    /// Unwrapped Fermi coordinates `(s, h)` of a plane point.
    pub fn unwrap_plane(&self, z: &ModelPoint) -> (f64, f64) {
        let s = z.x().hypot(z.y()).ln() * self.scale();
        let h = (z.x() / z.y()).asinh() * self.scale();
        (s, h)
    }

    pub fn from_plane(&self, z: &ModelPoint) -> FermiPoint {
        let (s, h) = self.unwrap_plane(z);
        self.point(s, h)
    }

    /// The generator `z ↦ e^ω z` of the deck group.
    pub fn deck_generator(&self) -> MobiusIsometry {
        MobiusIsometry::diagonal((0.5 * self.omega / self.scale()).exp()).expect("positive period")
    }

    /// Length of the shortest essential loop through a point at height `h`:
    /// `cosh L = 1 + cosh²h (cosh ω − 1)` at unit curvature.
    pub fn essential_loop_length(&self, h: f64) -> f64 {
        let (uw, uh) = (self.omega / self.scale(), h / self.scale());
        // cosh L − 1 = 2 sinh²(L/2) keeps small periods accurate
        let half = (uh.cosh() * (0.5 * uw).sinh()).asinh();
        2.0 * half * self.scale()
    }

    pub fn injectivity_radius(&self, h: f64) -> f64 {
        0.5 * self.essential_loop_length(h)
    }

    /// Three points within `radius` of a random centre at height at most
    /// `max_height` from the core.
    pub fn sample_triangle<R: Rng>(&self, rng: &mut R, radius: f64, max_height: f64) -> [FermiPoint; 3] {
        let s = rng.gen_range(0.0..self.omega) / self.scale();
        let h = rng.gen_range(-max_height..=max_height) / self.scale();
        let frame = MobiusIsometry::diagonal((0.5 * s).exp())
            .expect("finite s")
            .compose(&MobiusIsometry::translation_along_unit_circle(h));
        let plane = PlaneSpace { chi: self.chi };
        [(); 3].map(|_| {
            let r = rng.gen_range(0.0..=radius);
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            self.from_plane(&frame.apply(&plane.polar(r, angle)))
        })
    }

    /// Distance between the lift of `p` and the `k`-th translate of the lift
    /// of `q`.
    fn lift_distance(&self, p: &FermiPoint, q: &FermiPoint, k: i64) -> f64 {
        let zp = self.lift(0.0, p.h);
        let zq = self.lift(q.s - p.s + k as f64 * self.omega, q.h);
        zp.unit_distance(&zq) * self.scale()
    }

    /// Index of the translate of `q` nearest to `p`.
    fn nearest_lift(&self, p: &FermiPoint, q: &FermiPoint) -> (i64, f64) {
        let mut best = (0, self.lift_distance(p, q, 0));
        let d1 = self.lift_distance(p, q, -1);
        if d1 < best.1 {
            best = (-1, d1);
        }
        // translates with |Δs + kω| beyond the current best cannot win
        let window = (best.1 / self.omega).ceil() as i64 + 1;
        for k in -window..=window {
            let d = self.lift_distance(p, q, k);
            if d < best.1 {
                best = (k, d);
            }
        }
        best
    }
}

/// Intrinsic distance on the cylinder.
pub fn cyl_distance(p: &FermiPoint, q: &FermiPoint, cfg: &CylinderConfig) -> f64 {
    cfg.nearest_lift(p, q).1
}

/// Unit-speed geodesic on a cylinder, evaluated by flowing a lifted plane
/// geodesic and projecting back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylGeodesic {
    pub plane: PlaneGeodesic,
    pub cfg: CylinderConfig,
}

impl CylGeodesic {
    pub fn eval(&self, t: f64) -> FermiPoint {
        self.cfg.from_plane(&self.plane.eval(t))
    }

    /// Fermi coordinates without reducing `s`; the change in `s` over a
    /// closed loop measures its winding number.
    pub fn eval_unwrapped(&self, t: f64) -> (f64, f64) {
        self.cfg.unwrap_plane(&self.plane.eval(t))
    }

    pub fn to_local(&self) -> LocalGeodesic {
        let g = *self;
        LocalGeodesic::new(SpaceHandle::Cylinder(self.cfg), move |t| SpacePoint::Cylinder(g.eval(t)))
    }
}

/// Geodesic leaving `start` at `angle` from the core direction (`0`: along
/// increasing `s`; `π/2`: along increasing `h`).
pub fn cyl_geodesic(start: &FermiPoint, angle: f64, cfg: &CylinderConfig) -> CylGeodesic {
    let us = start.s / cfg.scale();
    let uh = start.h / cfg.scale();
    let frame = MobiusIsometry::diagonal((0.5 * us).exp())
        .expect("finite s")
        .compose(&MobiusIsometry::translation_along_unit_circle(uh))
        .compose(&MobiusIsometry::rotation_about_i(-angle));
    CylGeodesic {
        plane: PlaneGeodesic::from_frame(frame, cfg.chi).expect("validated curvature"),
        cfg: *cfg,
    }
}

/// The core `{h = 0}`, parametrised by `s`, with period `ω`.
pub fn core_geodesic(cfg: &CylinderConfig) -> ClosedGeodesic {
    let g = cyl_geodesic(&cfg.point(0.0, 0.0), 0.0, cfg);
    ClosedGeodesic::new(g.to_local(), cfg.omega, ClassRepresentation::CorePower(1))
}

/// Projection onto the core: the foot `(s, 0)` and the distance `|h|`.
pub fn project_to_core(p: &FermiPoint, cfg: &CylinderConfig) -> (FermiPoint, f64) {
    (cfg.point(p.s, 0.0), p.h.abs())
}

impl MetricSpace for CylinderConfig {
    type Point = FermiPoint;

    fn distance(&self, p: &FermiPoint, q: &FermiPoint) -> f64 {
        cyl_distance(p, q, self)
    }
}

impl GeodesicSpace for CylinderConfig {
    fn segment_point(&self, p: &FermiPoint, q: &FermiPoint, t: f64) -> FermiPoint {
        let (k, _) = self.nearest_lift(p, q);
        let zp = self.lift(p.s, p.h);
        let zq = self.lift(q.s + k as f64 * self.omega, q.h);
        match geodesic_through(&zp, &zq, self.chi) {
            Ok(g) => self.from_plane(&g.eval(t)),
            Err(_) => *p,
        }
    }

    /// A triangle of perimeter `P` stays above height
    /// `h_low = max(0, min|h_v| − P/2)`, and translates of any of its points
    /// are at least `L(h_low) − P/2` away, so it lifts isometrically when
    /// `P < L(h_low)`.
    fn lifting_threshold(&self, triangle: &[FermiPoint; 3]) -> f64 {
        let perimeter = self.distance(&triangle[0], &triangle[1])
            + self.distance(&triangle[1], &triangle[2])
            + self.distance(&triangle[2], &triangle[0]);
        let min_h = triangle.iter().map(|p| p.h.abs()).fold(f64::INFINITY, f64::min);
        let h_low = (min_h - 0.5 * perimeter).max(0.0);
        self.essential_loop_length(h_low)
    }
}
