//! From a recurrent geodesic to closed geodesics shadowing it: the closed
//! curve `γ_n` obtained by closing `γ|[0, t_n]` with a short segment, its
//! homotopy class, quasi-geodesic and stability certificates for its lift,
//! the straightened closed geodesic `c_n`, the alignment `c_n(0) = B_n` and
//! the error budget `2ε_n + 3d₀`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cylinder::{cyl_distance, cyl_geodesic, CylGeodesic, CylinderConfig};
use crate::error::{GeomError, Result};
use crate::flow::{detect_rose_recurrence, LocalGeodesic, Recurrence, SpacePoint};
use crate::metric::{distance_to_segment, four_point_defect, GeodesicSpace, MetricSpace};
use crate::model_plane::{project_to_geodesic, MobiusIsometry, PlaneGeodesic, PlaneSpace};
use crate::rose::{
    cyclic_reduce, project_to_axis, word_reduce, EdgeWord, RoseConfig, RoseGeodesic, RoseTree,
    SubstitutionRule, TreePos,
};

pub use crate::metric::gromov_product;

/// How a closed geodesic's free homotopy class is written down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassRepresentation {
    /// Cyclically reduced word on the rose.
    Word(EdgeWord),
    /// Signed power of a cylinder's core.
    CorePower(i64),
    /// Sequence of full turns around the cores of the glued complex.
    XCore { blocks: Vec<crate::counterexample::Piece> },
}

/// A periodic local geodesic.
#[derive(Debug, Clone)]
pub struct ClosedGeodesic {
    geodesic: LocalGeodesic,
    period: f64,
    class: ClassRepresentation,
}

impl ClosedGeodesic {
    pub fn new(geodesic: LocalGeodesic, period: f64, class: ClassRepresentation) -> Self {
        Self { geodesic, period, class }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn class(&self) -> &ClassRepresentation {
        &self.class
    }

    pub fn geodesic(&self) -> &LocalGeodesic {
        &self.geodesic
    }

    pub fn eval(&self, t: f64) -> SpacePoint {
        self.geodesic.at(t)
    }

    /// The same curve traversed `k` times per period.
    pub fn iterate(&self, k: u32) -> ClosedGeodesic {
        let class = match &self.class {
            ClassRepresentation::Word(w) => ClassRepresentation::Word(w.pow(k as i64)),
            ClassRepresentation::CorePower(n) => ClassRepresentation::CorePower(n * k as i64),
            ClassRepresentation::XCore { blocks } => ClassRepresentation::XCore { blocks: blocks.repeat(k as usize) },
        };
        ClosedGeodesic { geodesic: self.geodesic.clone(), period: self.period * k as f64, class }
    }
}

/// The deck transformation translating the lift of a closed curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HolonomyClass {
    Word(EdgeWord),
    /// `deck` is the `winding`-th power of the cylinder's generator.
    Winding { winding: i64, deck: MobiusIsometry },
}

impl HolonomyClass {
    pub fn is_trivial(&self) -> bool {
        match self {
            HolonomyClass::Word(w) => word_reduce(w).is_empty(),
            HolonomyClass::Winding { winding, .. } => *winding == 0,
        }
    }
}

/// A geodesic together with the lift machinery needed downstream.
#[derive(Debug, Clone)]
pub enum LiftableGeodesic {
    Rose(RoseGeodesic),
    Cylinder(CylGeodesic),
    /// No universal-cover model: association works, lifting steps do not.
    Other(LocalGeodesic),
}

impl LiftableGeodesic {
    pub fn local(&self) -> LocalGeodesic {
        match self {
            LiftableGeodesic::Rose(g) => g.to_local(),
            LiftableGeodesic::Cylinder(g) => g.to_local(),
            LiftableGeodesic::Other(g) => g.clone(),
        }
    }
}

/// `γ_n`: `γ` on `[0, t_n]` followed by the geodesic segment of length `ε_n`
/// from `γ(t_n)` back to `γ(0)` inside the convex neighbourhood.
#[derive(Debug, Clone)]
pub struct AssociatedClosedCurve {
    pub source: LiftableGeodesic,
    pub t_n: f64,
    pub eps_n: f64,
    pub u_radius: f64,
    pub holonomy: Option<HolonomyClass>,
}

impl AssociatedClosedCurve {
    pub fn period(&self) -> f64 {
        self.t_n + self.eps_n
    }
}

/// Default radius of the convex neighbourhood `U` around `γ(0)`.
pub fn default_u_radius(g: &LiftableGeodesic) -> f64 {
    match g {
        LiftableGeodesic::Rose(r) => 0.5 * r.cfg().shortest_petal(),
        LiftableGeodesic::Cylinder(c) => 0.25 * c.cfg.omega,
        LiftableGeodesic::Other(l) => match l.space() {
            crate::flow::SpaceHandle::ComplexX(x) => 0.25 * x.d_ab(),
            crate::flow::SpaceHandle::Cylinder(c) => 0.25 * c.omega,
            crate::flow::SpaceHandle::Rose(r) => 0.5 * r.shortest_petal(),
            crate::flow::SpaceHandle::Plane { .. } => f64::INFINITY,
        },
    }
}

/// The lift of `γ(0)` nearest to `x`, as the deck element `g` with
/// `g·y0` that lift, together with its distance from `x`.
fn nearest_translate(x: &TreePos, y0: &TreePos, cfg: &RoseConfig) -> Result<(EdgeWord, f64)> {
    let mut vertices = vec![x.vertex.clone()];
    if let Some((g, _)) = x.edge {
        vertices.push(x.vertex.mul(&EdgeWord::from_letters(vec![crate::rose::Letter { gen: g, inverse: false }])));
    }
    let mut best: Option<(EdgeWord, f64)> = None;
    for w in vertices {
        let cands = match y0.edge {
            None => vec![TreePos { vertex: w, edge: None }],
            Some((e, o)) => {
                let back = w.mul(&EdgeWord::from_letters(vec![crate::rose::Letter { gen: e, inverse: true }]));
                vec![TreePos { vertex: w, edge: Some((e, o)) }, TreePos { vertex: back, edge: Some((e, o)) }]
            }
        };
        for c in cands {
            let d = crate::rose::tree_distance(x, &c, cfg)?;
            if best.as_ref().map_or(true, |b| d < b.1) {
                best = Some((c.vertex.mul(&y0.vertex.inverse()), d));
            }
        }
    }
    Ok(best.expect("at least one candidate"))
}

fn cylinder_winding(g: &CylGeodesic, t_n: f64) -> (i64, f64) {
    let cfg = g.cfg;
    let (s0, h0) = cfg.unwrap_plane(&g.plane.eval(0.0));
    let end = g.plane.eval(t_n);
    let (s1, _) = cfg.unwrap_plane(&end);
    let guess = ((s1 - s0) / cfg.omega).round() as i64;
    (guess - 2..=guess + 2)
        .map(|k| (k, end.unit_distance(&cfg.lift(s0 + k as f64 * cfg.omega, h0)) * cfg.scale()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

fn deck_power(cfg: &CylinderConfig, k: i64) -> MobiusIsometry {
    MobiusIsometry::diagonal((0.5 * k as f64 * cfg.omega / cfg.scale()).exp()).expect("finite power")
}

/// Builds `γ_n` and, where a lift is available, its holonomy.
pub fn associate_closed_curve(gamma: &LiftableGeodesic, t_n: f64, u_radius: f64) -> Result<AssociatedClosedCurve> {
    if !(t_n > 0.0) {
        return Err(GeomError::InvalidParameter(format!("return time {t_n}")));
    }
    let local = gamma.local();
    let eps_n = local.space().distance(&local.at(0.0), &local.at(t_n))?;
    if eps_n >= u_radius {
        return Err(GeomError::OutsideConvexNeighbourhood { distance: eps_n, radius: u_radius });
    }
    let holonomy = match gamma {
        LiftableGeodesic::Rose(g) => {
            let (word, _) = nearest_translate(&g.lift(t_n)?, &g.lift(0.0)?, g.cfg())?;
            Some(HolonomyClass::Word(word))
        }
        LiftableGeodesic::Cylinder(g) => {
            let (k, _) = cylinder_winding(g, t_n);
            Some(HolonomyClass::Winding { winding: k, deck: deck_power(&g.cfg, k) })
        }
        LiftableGeodesic::Other(_) => None,
    };
    Ok(AssociatedClosedCurve { source: gamma.clone(), t_n, eps_n, u_radius, holonomy })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NontrivialityCheck {
    /// Distance between the endpoints `γ̃_n(0)` and `γ̃_n(t_n + ε_n)` of one
    /// period of the lift.
    pub separation: f64,
    /// `t_n − ε_n`.
    pub bound: f64,
    pub bound_holds: bool,
    pub pass: bool,
}

/// The lift of one period of `γ_n` has distinct endpoints iff `γ_n` is not
/// null-homotopic.
pub fn nontriviality_check(curve: &AssociatedClosedCurve) -> Result<NontrivialityCheck> {
    let hol = curve.holonomy.as_ref().ok_or(GeomError::Unsupported("no universal cover for this space"))?;
    let separation = match (&curve.source, hol) {
        (LiftableGeodesic::Rose(g), HolonomyClass::Word(w)) => {
            let x0 = g.lift(0.0)?;
            crate::rose::tree_distance(&x0, &x0.translate(&word_reduce(w)), g.cfg())?
        }
        (LiftableGeodesic::Cylinder(g), HolonomyClass::Winding { deck, .. }) => {
            let z0 = g.plane.eval(0.0);
            z0.unit_distance(&deck.apply(&z0)) * g.cfg.scale()
        }
        _ => return Err(GeomError::Unsupported("holonomy does not match the space")),
    };
    let bound = curve.t_n - curve.eps_n;
    Ok(NontrivialityCheck {
        separation,
        bound,
        bound_holds: separation >= bound - 1e-9,
        pass: separation > 0.0 && !hol.is_trivial(),
    })
}

/// `(λ, κ, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiParams {
    pub lambda: f64,
    pub kappa: f64,
    pub l: f64,
}

impl QuasiParams {
    pub fn new(lambda: f64, kappa: f64, l: f64) -> Result<Self> {
        if !(lambda >= 1.0) || !(kappa >= 0.0) || !(l > 0.0) {
            return Err(GeomError::InvalidParameter(format!("quasi-geodesic parameters ({lambda}, {kappa}, {l})")));
        }
        Ok(Self { lambda, kappa, l })
    }
}

/// A unit-speed path made of geodesic pieces meeting at `breakpoints`
/// (which include both ends).
pub struct PiecewisePath<P> {
    pub breakpoints: Vec<f64>,
    pub eval: Box<dyn Fn(f64) -> P + Send + Sync>,
}

impl<P> PiecewisePath<P> {
    pub fn new<F: Fn(f64) -> P + Send + Sync + 'static>(breakpoints: Vec<f64>, eval: F) -> Self {
        Self { breakpoints, eval: Box::new(eval) }
    }

    pub fn start(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Breakpoints plus `interior` evenly spaced points inside each piece.
    pub fn sample_times(&self, interior: usize) -> Vec<f64> {
        let mut out = Vec::new();
        for w in self.breakpoints.windows(2) {
            out.push(w[0]);
            for k in 1..=interior {
                out.push(w[0] + (w[1] - w[0]) * k as f64 / (interior + 1) as f64);
            }
        }
        out.push(self.end());
        out
    }
}

pub const INTERIOR_SAMPLES: usize = 32;
pub const CERT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiCertificate {
    pub params: QuasiParams,
    pub pass: bool,
    /// Subinterval with the largest `length − λ·d(endpoints)`.
    pub worst: (f64, f64),
    pub worst_defect: f64,
    pub pairs_checked: usize,
}

/// Checks `length ≤ λ·d(f(a′), f(b′)) + κ` over all subintervals of length
/// at most `L` whose ends are breakpoints or interior grid points.
pub fn quasi_geodesic_certificate<S: MetricSpace + Sync>(
    space: &S,
    path: &PiecewisePath<S::Point>,
    params: &QuasiParams,
) -> QuasiCertificate {
    let times = path.sample_times(INTERIOR_SAMPLES);
    let points: Vec<S::Point> = times.iter().map(|&t| (path.eval)(t)).collect();
    let (worst, worst_defect, pairs) = (0..times.len())
        .into_par_iter()
        .map(|i| {
            let mut local = ((times[i], times[i]), f64::NEG_INFINITY, 0usize);
            for j in i + 1..times.len() {
                let len = times[j] - times[i];
                if len > params.l + CERT_TOL {
                    break;
                }
                let defect = len - params.lambda * space.distance(&points[i], &points[j]);
                local.2 += 1;
                if defect > local.1 {
                    local = ((times[i], times[j]), defect, local.2);
                }
            }
            local
        })
        .reduce(
            || ((0.0, 0.0), f64::NEG_INFINITY, 0),
            |a, b| {
                let n = a.2 + b.2;
                if b.1 > a.1 { (b.0, b.1, n) } else { (a.0, a.1, n) }
            },
        );
    let worst_defect = worst_defect.max(0.0);
    QuasiCertificate { params: *params, pass: worst_defect <= params.kappa + CERT_TOL, worst, worst_defect, pairs_checked: pairs }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub c: f64,
    pub max_distance: f64,
    pub worst_t: f64,
    pub pass: bool,
}

/// Every sampled point of the path lies within `C` of the geodesic segment
/// joining its ends. Requires `L > 2C`.
pub fn stability_check<S: GeodesicSpace + Sync>(
    space: &S,
    path: &PiecewisePath<S::Point>,
    params: &QuasiParams,
    c: f64,
) -> Result<StabilityCertificate> {
    if !(params.l > 2.0 * c) {
        return Err(GeomError::InvalidParameter(format!("stability needs L > 2C, got L = {}, C = {c}", params.l)));
    }
    let a = (path.eval)(path.start());
    let b = (path.eval)(path.end());
    let (worst_t, max_distance) = path
        .sample_times(INTERIOR_SAMPLES)
        .into_par_iter()
        .map(|t| (t, distance_to_segment(space, &(path.eval)(t), &a, &b, 1e-12).1))
        .reduce(|| (0.0, 0.0), |x, y| if y.1 > x.1 { y } else { x });
    Ok(StabilityCertificate { c, max_distance, worst_t, pass: max_distance <= c + CERT_TOL })
}

/// The lift of `γ_n` to the tree, extended periodically by its holonomy.
#[derive(Debug, Clone)]
pub struct RoseCurveLift {
    gamma: RoseGeodesic,
    holonomy: EdgeWord,
    t_n: f64,
    eps_n: f64,
    arc_end: TreePos,
    closing_end: TreePos,
}

impl RoseCurveLift {
    pub fn new(curve: &AssociatedClosedCurve) -> Result<Self> {
        let (LiftableGeodesic::Rose(gamma), Some(HolonomyClass::Word(w))) = (&curve.source, &curve.holonomy) else {
            return Err(GeomError::Unsupported("rose lift of a non-rose curve"));
        };
        let g = word_reduce(w);
        Ok(Self {
            arc_end: gamma.lift(curve.t_n)?,
            closing_end: gamma.lift(0.0)?.translate(&g),
            gamma: gamma.clone(),
            holonomy: g,
            t_n: curve.t_n,
            eps_n: curve.eps_n,
        })
    }

    pub fn period(&self) -> f64 {
        self.t_n + self.eps_n
    }

    pub fn eval(&self, u: f64) -> TreePos {
        let p = self.period();
        let k = (u / p).floor();
        let r = u - k * p;
        let shift = self.holonomy.pow(k as i64);
        let local = if r <= self.t_n {
            self.gamma.lift(r).expect("within generated range")
        } else {
            RoseTree::new(*self.gamma.cfg()).segment_point(&self.arc_end, &self.closing_end, r - self.t_n)
        };
        local.translate(&shift)
    }

    /// Breakpoints of `periods` consecutive periods starting at 0.
    pub fn breakpoints(&self, periods: usize) -> Vec<f64> {
        let p = self.period();
        let mut out = Vec::new();
        for k in 0..periods {
            out.push(k as f64 * p);
            if self.eps_n > 0.0 {
                out.push(k as f64 * p + self.t_n);
            }
        }
        out.push(periods as f64 * p);
        out
    }

    pub fn path(&self, periods: usize) -> PiecewisePath<TreePos> {
        let me = self.clone();
        PiecewisePath::new(self.breakpoints(periods), move |u| me.eval(u))
    }
}

/// The closed geodesic in the free homotopy class of `γ_n`.
pub fn straighten(curve: &AssociatedClosedCurve) -> Result<ClosedGeodesic> {
    match (&curve.source, &curve.holonomy) {
        (LiftableGeodesic::Rose(g), Some(HolonomyClass::Word(w))) => {
            let reduced = cyclic_reduce(w);
            if reduced.is_empty() {
                return Err(GeomError::TrivialClass);
            }
            let period = reduced.length(g.cfg());
            let geo = RoseGeodesic::periodic(reduced.clone(), 0.0, *g.cfg())?;
            Ok(ClosedGeodesic::new(geo.to_local(), period, ClassRepresentation::Word(reduced)))
        }
        (LiftableGeodesic::Cylinder(g), Some(HolonomyClass::Winding { winding, .. })) => {
            if *winding == 0 {
                return Err(GeomError::TrivialClass);
            }
            let angle = if *winding > 0 { 0.0 } else { std::f64::consts::PI };
            let core = cyl_geodesic(&g.cfg.point(0.0, 0.0), angle, &g.cfg);
            Ok(ClosedGeodesic::new(core.to_local(), winding.unsigned_abs() as f64 * g.cfg.omega, ClassRepresentation::CorePower(*winding)))
        }
        _ => Err(GeomError::Unsupported("straightening is available on the rose and on cylinders")),
    }
}

/// Outcome of aligning `c_n` with `γ` and measuring how closely it shadows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproximationReport {
    pub n: usize,
    pub t_n: f64,
    pub eps_n: f64,
    pub s_n: f64,
    /// `d(γ̃(0), B̃_n)`.
    pub d0: f64,
    /// `2ε_n + 3d₀`.
    pub budget: f64,
    /// `sup_{s ∈ [0, s_n]} d(γ̃(s), c̃_n(s))` as measured.
    pub sup: f64,
    /// The true supremum exceeds `sup` by at most this much.
    pub sup_guard: f64,
    pub eps: f64,
    /// (uni): `d₀ < ε/5`.
    pub uni: bool,
    /// (eps): `ε_n < ε/5`.
    pub eps_ok: bool,
    /// (final): `sup < ε`.
    pub final_ok: bool,
    /// `sup ≤ budget`.
    pub budget_ok: bool,
    /// Same measurement with `c_n` shifted by `s_n/2`.
    pub control_sup: f64,
}

impl ApproximationReport {
    /// (uni) and (eps) together force (final).
    pub fn consistent(&self) -> bool {
        self.budget_ok && (!(self.uni && self.eps_ok) || self.final_ok)
    }
}

fn finish_report(curve: &AssociatedClosedCurve, s_n: f64, d0: f64, eps: f64, sup: f64, sup_guard: f64, control_sup: f64) -> ApproximationReport {
    let budget = 2.0 * curve.eps_n + 3.0 * d0;
    ApproximationReport {
        n: 0,
        t_n: curve.t_n,
        eps_n: curve.eps_n,
        s_n,
        d0,
        budget,
        sup,
        sup_guard,
        eps,
        uni: d0 < eps / 5.0,
        eps_ok: curve.eps_n < eps / 5.0,
        final_ok: sup + sup_guard < eps,
        budget_ok: sup + sup_guard <= budget + CERT_TOL,
        control_sup,
    }
}

/// Anchors `c_n` at the projection `B_n` of `γ(0)` onto its image (in the
/// universal cover, onto the axis of the holonomy), then measures
/// `sup_{s ∈ [0, s_n]} d(γ̃(s), c̃_n(s))`.
pub fn align_and_verify(curve: &AssociatedClosedCurve, c: &ClosedGeodesic, eps: f64) -> Result<ApproximationReport> {
    let s_n = c.period();
    match (&curve.source, &curve.holonomy, c.class()) {
        (LiftableGeodesic::Rose(g), Some(HolonomyClass::Word(h)), ClassRepresentation::Word(w)) => {
            let cfg = *g.cfg();
            let reduced = word_reduce(h);
            if cyclic_reduce(&reduced) != *w {
                return Err(GeomError::InvalidParameter(format!("closed geodesic {w} is not in the class of {reduced}")));
            }
            let k = (reduced.len() - w.len()) / 2;
            let u = EdgeWord::from_letters(reduced.letters()[..k].to_vec());
            let x0 = g.lift(0.0)?;
            let (sigma0, d0) = project_to_axis(&x0.translate(&u.inverse()), w, &cfg)?;
            let axis = RoseGeodesic::periodic(w.clone(), sigma0, cfg)?;
            let c_lift = |s: f64| axis.lift(s).map(|p| p.translate(&u));
            // distances between unit-speed tree paths are piecewise linear,
            // with maxima where one of the paths crosses a vertex
            let mut times = g.vertex_times(0.0, s_n)?;
            times.extend(axis.vertex_times(0.0, s_n)?);
            times.extend(axis.vertex_times(0.5 * s_n, 1.5 * s_n)?.into_iter().map(|t| t - 0.5 * s_n));
            times.extend((0..=512).map(|i| s_n * i as f64 / 512.0));
            let mut sup = 0.0f64;
            let mut control = 0.0f64;
            for &s in &times {
                let gs = g.lift(s)?;
                sup = sup.max(crate::rose::tree_distance(&gs, &c_lift(s)?, &cfg)?);
                control = control.max(crate::rose::tree_distance(&gs, &c_lift(s + 0.5 * s_n)?, &cfg)?);
            }
            Ok(finish_report(curve, s_n, d0, eps, sup, 0.0, control))
        }
        (LiftableGeodesic::Cylinder(g), Some(HolonomyClass::Winding { .. }), ClassRepresentation::CorePower(k)) => {
            let axis = PlaneGeodesic::imaginary_axis(g.cfg.chi)?;
            let axis = if *k < 0 { axis.transformed(&MobiusIsometry::rotation_about_i(std::f64::consts::PI)) } else { axis };
            let proj = project_to_geodesic(&g.plane.eval(0.0), &axis)?;
            let plane = PlaneSpace::new(g.cfg.chi)?;
            let step = (s_n / 1000.0).min(0.01);
            let n = (s_n / step).ceil() as usize;
            let (mut sup, mut control) = (0.0f64, 0.0f64);
            for i in 0..=n {
                let s = (i as f64 * step).min(s_n);
                let gs = g.plane.eval(s);
                sup = sup.max(plane.distance(&gs, &axis.eval(proj.s + s)));
                control = control.max(plane.distance(&gs, &axis.eval(proj.s + s + 0.5 * s_n)));
            }
            // s ↦ d(γ̃(s), c̃(s)) is convex in the plane and both ends are
            // sampled, so the grid maximum is the supremum
            Ok(finish_report(curve, s_n, proj.distance, eps, sup, 0.0, control))
        }
        _ => Err(GeomError::Unsupported("alignment needs a rose or cylinder curve and its straightening")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GromovRow {
    pub n: usize,
    pub t_n: f64,
    pub eps_n: f64,
    /// `(x_n, y_n)_{x₀}`.
    pub product: f64,
    /// `d(x₀, x_n′)` with `x_n′` the projection of `x_n` onto `[x₀, y_n]`.
    pub projection_depth: f64,
    /// `product ≥ d(x₀, x_n′) − C`.
    pub lemma_pass: bool,
    /// `product ≥ t_n − (ε_n + C)`.
    pub chain_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTable {
    pub c: f64,
    pub rows: Vec<GromovRow>,
    /// Products strictly increase along the table.
    pub increasing: bool,
    pub pass: bool,
}

/// Gromov products of `x_n = γ̃(t_n)` and `y_n = g_n^{far}·γ̃(0)` (a far point
/// on the lifted axis of `c_n`) at `x₀ = γ̃(0)`.
pub fn boundary_convergence_check(curves: &[AssociatedClosedCurve], c: f64, far: i64) -> Result<BoundaryTable> {
    let mut rows = Vec::with_capacity(curves.len());
    for (i, curve) in curves.iter().enumerate() {
        let (LiftableGeodesic::Rose(g), Some(HolonomyClass::Word(w))) = (&curve.source, &curve.holonomy) else {
            return Err(GeomError::Unsupported("boundary proxy is implemented on the rose tree"));
        };
        let tree = RoseTree::new(*g.cfg());
        let x0 = g.lift(0.0)?;
        let xn = g.lift(curve.t_n)?;
        let yn = x0.translate(&word_reduce(w).pow(far));
        let product = gromov_product(&tree, &xn, &yn, &x0);
        let (foot, _) = distance_to_segment(&tree, &xn, &x0, &yn, 1e-13);
        rows.push(GromovRow {
            n: i + 1,
            t_n: curve.t_n,
            eps_n: curve.eps_n,
            product,
            projection_depth: foot,
            lemma_pass: product >= foot - c - CERT_TOL,
            chain_pass: product >= curve.t_n - (curve.eps_n + c) - CERT_TOL,
        });
    }
    let increasing = rows.windows(2).all(|w| w[1].product > w[0].product);
    let pass = increasing && rows.iter().all(|r| r.lemma_pass && r.chain_pass);
    Ok(BoundaryTable { c, rows, increasing, pass })
}

/// `max(0, max over sampled quadruples of min((x,z)_w, (z,y)_w) − (x,y)_w)`.
pub fn delta_estimate<S, F>(space: &S, mut sample: F, n_samples: usize, seed: u64) -> f64
where
    S: MetricSpace,
    F: FnMut(&mut ChaCha8Rng) -> S::Point,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n_samples {
        let (x, y, z, w) = (sample(&mut rng), sample(&mut rng), sample(&mut rng), sample(&mut rng));
        worst = worst.max(four_point_defect(space, &x, &y, &z, &w));
    }
    worst
}

pub fn delta_estimate_plane(chi: f64, radius: f64, n_samples: usize, seed: u64) -> Result<f64> {
    let plane = PlaneSpace::new(chi)?;
    Ok(delta_estimate(&plane, |r| plane.sample_ball(r, radius), n_samples, seed))
}

pub fn delta_estimate_rose(cfg: RoseConfig, radius: f64, n_samples: usize, seed: u64) -> f64 {
    let tree = RoseTree::new(cfg);
    delta_estimate(&tree, |r| tree.sample(r, radius), n_samples, seed)
}

/// Parameters of the rose pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosePipelineConfig {
    pub rule: SubstitutionRule,
    pub la: f64,
    pub lb: f64,
    pub levels: usize,
    /// Substitution depth generating the bi-infinite word.
    pub depth: usize,
    /// Position of `γ(0)` inside letter 0.
    pub anchor: f64,
    /// Level `n` snaps return times to multiples of `grid_base·2^{−n}`.
    pub grid_base: f64,
    /// Target of the (final) inequality.
    pub eps: f64,
    /// Targets for the "eventually below" summary.
    pub eps_targets: Vec<f64>,
    pub u_radius: Option<f64>,
    /// Hyperbolicity constant used in `κ = 16δ + 2·max ε_n + 0.01`.
    pub delta: f64,
    /// Periods of `γ_n` lifted for the quasi-geodesic and stability checks.
    pub periods: usize,
    /// Power of the holonomy giving the far point `y_n`.
    pub far: i64,
}

impl Default for RosePipelineConfig {
    fn default() -> Self {
        let golden = RoseConfig::golden();
        Self {
            rule: SubstitutionRule::Fibonacci,
            la: golden.la,
            lb: golden.lb,
            levels: 10,
            depth: 12,
            anchor: 0.5,
            grid_base: 0.1,
            eps: 0.05,
            eps_targets: vec![0.2, 0.1, 0.05, 0.02],
            u_radius: None,
            delta: 0.0,
            periods: 3,
            far: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoseLevel {
    pub n: usize,
    pub recurrence: Recurrence,
    pub holonomy: String,
    pub class_word: String,
    pub nontriviality: NontrivialityCheck,
    pub quasi: QuasiCertificate,
    pub stability: StabilityCertificate,
    pub report: ApproximationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventuallyBelow {
    pub eps: f64,
    /// First level from which every measured sup is below `eps`.
    pub from_level: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosePipelineReport {
    pub config: RosePipelineConfig,
    pub kappa: f64,
    pub stability_constant: f64,
    /// (log): `ε_n < ½(κ − 16δ)` at every level.
    pub log_pass: bool,
    pub levels: Vec<RoseLevel>,
    pub boundary: BoundaryTable,
    pub eventually_below: Vec<EventuallyBelow>,
    pub pass: bool,
}

/// The whole chain on a substitutive geodesic of the rose: returns, closed
/// curves, certificates, straightening, alignment and the boundary proxy.
pub fn rose_pipeline(cfg: &RosePipelineConfig) -> Result<RosePipelineReport> {
    let rose = RoseConfig::new(cfg.la, cfg.lb)?;
    let gamma = RoseGeodesic::substitution(cfg.rule, cfg.depth, cfg.anchor, rose)?;
    let recs = detect_rose_recurrence(&gamma, cfg.levels, cfg.grid_base)?;
    if recs.is_empty() {
        return Err(GeomError::InvalidParameter("no recurrence found within the generated word".into()));
    }
    let source = LiftableGeodesic::Rose(gamma);
    let u_radius = cfg.u_radius.unwrap_or_else(|| default_u_radius(&source));
    let curves = recs
        .iter()
        .map(|r| associate_closed_curve(&source, r.t, u_radius))
        .collect::<Result<Vec<_>>>()?;
    let max_eps = curves.iter().map(|c| c.eps_n).fold(0.0, f64::max);
    let kappa = 16.0 * cfg.delta + 2.0 * max_eps + 0.01;
    let stability_constant = 0.5 * kappa;
    let log_pass = curves.iter().all(|c| c.eps_n < 0.5 * (kappa - 16.0 * cfg.delta));
    let tree = RoseTree::new(rose);
    let levels = recs
        .par_iter()
        .zip(curves.par_iter())
        .map(|(rec, curve)| -> Result<RoseLevel> {
            let nontriviality = nontriviality_check(curve)?;
            let lift = RoseCurveLift::new(curve)?;
            let path = lift.path(cfg.periods);
            let params = QuasiParams::new(1.0, kappa, curve.t_n)?;
            let quasi = quasi_geodesic_certificate(&tree, &path, &params);
            let stability = stability_check(&tree, &path, &params, stability_constant)?;
            let closed = straighten(curve)?;
            let mut report = align_and_verify(curve, &closed, cfg.eps)?;
            report.n = rec.n;
            let (holonomy, class_word) = match (&curve.holonomy, closed.class()) {
                (Some(HolonomyClass::Word(h)), ClassRepresentation::Word(w)) => (h.to_string(), w.to_string()),
                _ => unreachable!("rose curves carry word holonomy"),
            };
            Ok(RoseLevel { n: rec.n, recurrence: *rec, holonomy, class_word, nontriviality, quasi, stability, report })
        })
        .collect::<Result<Vec<_>>>()?;
    let boundary = boundary_convergence_check(&curves, stability_constant, cfg.far)?;
    let eventually_below = cfg
        .eps_targets
        .iter()
        .map(|&eps| {
            let from = (0..levels.len())
                .find(|&i| levels[i..].iter().all(|l| l.report.sup + l.report.sup_guard < eps))
                .map(|i| levels[i].n);
            EventuallyBelow { eps, from_level: from }
        })
        .collect::<Vec<_>>();
    let pass = log_pass
        && boundary.pass
        && eventually_below.iter().all(|e| e.from_level.is_some())
        && levels.iter().all(|l| {
            l.nontriviality.pass && l.nontriviality.bound_holds && l.quasi.pass && l.stability.pass && l.report.consistent()
        });
    Ok(RosePipelineReport { config: cfg.clone(), kappa, stability_constant, log_pass, levels, boundary, eventually_below, pass })
}

/// Associated closed curve and straightening on a cylinder: the returned
/// closed geodesic is the core taken `k` times, `k` the winding of `γ_n`.
pub fn cylinder_closed_geodesic(g: &CylGeodesic, t_n: f64, u_radius: Option<f64>) -> Result<(AssociatedClosedCurve, ClosedGeodesic)> {
    let source = LiftableGeodesic::Cylinder(*g);
    let u = u_radius.unwrap_or_else(|| default_u_radius(&source));
    let curve = associate_closed_curve(&source, t_n, u)?;
    let closed = straighten(&curve)?;
    Ok((curve, closed))
}

/// Cylinder distance between `γ(0)` and `γ(t)`.
pub fn cylinder_return_distance(g: &CylGeodesic, t: f64) -> f64 {
    cyl_distance(&g.eval(0.0), &g.eval(t), &g.cfg)
}
