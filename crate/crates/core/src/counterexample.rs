//! Two hyperbolic cylinders `C₁`, `C₂` with cores `c₁`, `c₂` of periods
//! `ω₁`, `ω₂`, glued along the strip `{0 ≤ s ≤ d(A,B), |h| ≤ w}` of Fermi
//! coordinates so that the cores share the segment from `B = c(0)` to
//! `A = c(d(A,B))`. The geodesic `γ` runs once around `c₁` and otherwise
//! along `c₂`; it is approximated by closed geodesics but is not recurrent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approximation::{ClassRepresentation, ClosedGeodesic};
use crate::cylinder::{cyl_distance, CylinderConfig, FermiPoint};
use crate::error::{GeomError, Result};
use crate::flow::{LocalGeodesic, SpaceHandle, SpacePoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XConfig {
    pub omega1: f64,
    pub omega2: f64,
    /// Half-width of the glued strip.
    pub width: f64,
    pub chi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Piece {
    One,
    Two,
}

/// A point of `X`; strip points are always stored on piece one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XPoint {
    pub piece: Piece,
    pub coords: FermiPoint,
}

impl XConfig {
    /// `d(A,B) = ω₁/2`; `width` defaults to `d(A,B)/4`.
    pub fn new(omega1: f64, omega2: f64, width: Option<f64>, chi: f64) -> Result<Self> {
        CylinderConfig::new(omega1, chi)?;
        CylinderConfig::new(omega2, chi)?;
        if omega2 < omega1 {
            return Err(GeomError::InvalidParameter(format!("ω₂ = {omega2} must be at least ω₁ = {omega1}")));
        }
        let d_ab = 0.5 * omega1;
        let width = width.unwrap_or(0.25 * d_ab);
        let cfg = Self { omega1, omega2, width, chi };
        // the strip must sit inside the embedded collar of the shorter core
        let collar = cfg.cylinder(Piece::One).injectivity_radius(0.0);
        if !(width > 0.0) || width >= collar.min(d_ab) {
            return Err(GeomError::InvalidParameter(format!("strip half-width {width} must lie in (0, {})", collar.min(d_ab))));
        }
        Ok(cfg)
    }

    /// `ω₁ = 2`, `ω₂ = 4`, so `d(A,B) = 1`.
    pub fn standard() -> Self {
        Self::new(2.0, 4.0, None, -1.0).expect("standard parameters are valid")
    }

    pub fn d_ab(&self) -> f64 {
        0.5 * self.omega1
    }

    pub fn cylinder(&self, piece: Piece) -> CylinderConfig {
        let omega = match piece {
            Piece::One => self.omega1,
            Piece::Two => self.omega2,
        };
        CylinderConfig { omega, chi: self.chi }
    }

    pub fn in_strip(&self, p: &FermiPoint) -> bool {
        p.s <= self.d_ab() && p.h.abs() <= self.width
    }

    pub fn point(&self, piece: Piece, s: f64, h: f64) -> XPoint {
        let coords = self.cylinder(piece).point(s, h);
        let piece = if self.in_strip(&coords) { Piece::One } else { piece };
        XPoint { piece, coords }
    }

    /// Point `A` (end of the shared core segment).
    pub fn a(&self) -> XPoint {
        self.point(Piece::One, self.d_ab(), 0.0)
    }

    /// Point `B = c₁(0) = c₂(0)`.
    pub fn b(&self) -> XPoint {
        self.point(Piece::One, 0.0, 0.0)
    }

    /// `c₁(t)` or `c₂(t)`.
    pub fn core_point(&self, piece: Piece, t: f64) -> XPoint {
        self.point(piece, t, 0.0)
    }
}

/// Shortest path crossing from `p` on piece one to `q` on piece two through
/// the strip: coarse 64×16 grid, then compass search down to 1e−6.
fn cross_distance(p: &FermiPoint, q: &FermiPoint, cfg: &XConfig) -> f64 {
    let (c1, c2) = (cfg.cylinder(Piece::One), cfg.cylinder(Piece::Two));
    let (d_ab, w) = (cfg.d_ab(), cfg.width);
    let cost = |s: f64, h: f64| {
        let z = FermiPoint { s: s.clamp(0.0, d_ab), h: h.clamp(-w, w) };
        cyl_distance(p, &z, &c1) + cyl_distance(&z, q, &c2)
    };
    const NS: usize = 64;
    const NH: usize = 16;
    let mut best = (0.0, 0.0, f64::INFINITY);
    for i in 0..=NS {
        let s = d_ab * i as f64 / NS as f64;
        for j in 0..=NH {
            let h = -w + 2.0 * w * j as f64 / NH as f64;
            let c = cost(s, h);
            if c < best.2 {
                best = (s, h, c);
            }
        }
    }
    let (mut s, mut h, mut c) = best;
    let mut ds = d_ab / NS as f64;
    let mut dh = 2.0 * w / NH as f64;
    while ds.max(dh) > 1e-6 {
        let mut moved = false;
        for (a, b) in [(ds, 0.0), (-ds, 0.0), (0.0, dh), (0.0, -dh)] {
            let (s2, h2) = ((s + a).clamp(0.0, d_ab), (h + b).clamp(-w, w));
            let c2 = cost(s2, h2);
            if c2 < c {
                (s, h, c) = (s2, h2, c2);
                moved = true;
            }
        }
        if !moved {
            ds *= 0.5;
            dh *= 0.5;
        }
    }
    c
}

/// A crossing path must at least climb from each point into the collar
/// `|h| ≤ w`.
pub fn cross_distance_lower_bound(p: &XPoint, q: &XPoint, cfg: &XConfig) -> f64 {
    if p.piece == q.piece {
        return 0.0;
    }
    (p.coords.h.abs() - cfg.width).max(0.0) + (q.coords.h.abs() - cfg.width).max(0.0)
}

/// Intrinsic distance in `X`. Points on the same piece (or one of them in
/// the strip) use that cylinder's distance; otherwise the path crosses the
/// strip once.
pub fn x_distance(p: &XPoint, q: &XPoint, cfg: &XConfig) -> f64 {
    let p = cfg.point(p.piece, p.coords.s, p.coords.h);
    let q = cfg.point(q.piece, q.coords.s, q.coords.h);
    let (p_strip, q_strip) = (cfg.in_strip(&p.coords), cfg.in_strip(&q.coords));
    let piece = if p.piece == q.piece || p_strip {
        Some(q.piece)
    } else if q_strip {
        Some(p.piece)
    } else {
        None
    };
    match piece {
        Some(piece) => cyl_distance(&p.coords, &q.coords, &cfg.cylinder(piece)),
        None => match p.piece {
            Piece::One => cross_distance(&p.coords, &q.coords, cfg),
            Piece::Two => cross_distance(&q.coords, &p.coords, cfg),
        },
    }
}

/// `γ(t) = c₂(t)` for `t ≤ 0`, `c₁(t)` on `[0, ω₁]`, `c₂(t − ω₁)` for `t ≥ ω₁`.
pub fn gamma_eval(t: f64, cfg: &XConfig) -> XPoint {
    if t < 0.0 {
        cfg.core_point(Piece::Two, t)
    } else if t <= cfg.omega1 {
        cfg.core_point(Piece::One, t)
    } else {
        cfg.core_point(Piece::Two, t - cfg.omega1)
    }
}

pub fn gamma_geodesic(cfg: &XConfig) -> LocalGeodesic {
    let c = *cfg;
    LocalGeodesic::new(SpaceHandle::ComplexX(c), move |t| SpacePoint::ComplexX(gamma_eval(t, &c)))
}

/// The core of one piece as a closed geodesic of `X`.
pub fn x_core(cfg: &XConfig, piece: Piece) -> ClosedGeodesic {
    let c = *cfg;
    let g = LocalGeodesic::new(SpaceHandle::ComplexX(c), move |t| SpacePoint::ComplexX(c.core_point(piece, t)));
    let period = cfg.cylinder(piece).omega;
    ClosedGeodesic::new(g, period, ClassRepresentation::XCore { blocks: vec![piece] })
}

/// The closed geodesic running through the cores in the order of `blocks`,
/// each block once around its core starting from `B`. Every switch happens at
/// `B` in the direction of the shared segment, so the loop is locally
/// geodesic.
pub fn x_loop(cfg: &XConfig, blocks: &[Piece]) -> Result<ClosedGeodesic> {
    if blocks.is_empty() {
        return Err(GeomError::TrivialClass);
    }
    let c = *cfg;
    let lens: Vec<f64> = blocks.iter().map(|&b| c.cylinder(b).omega).collect();
    let period: f64 = lens.iter().sum();
    let owned = blocks.to_vec();
    let g = LocalGeodesic::new(SpaceHandle::ComplexX(c), move |t| {
        let mut r = t.rem_euclid(period);
        for (b, l) in owned.iter().zip(&lens) {
            if r < *l {
                return SpacePoint::ComplexX(c.core_point(*b, r));
            }
            r -= l;
        }
        SpacePoint::ComplexX(c.b())
    });
    Ok(ClosedGeodesic::new(g, period, ClassRepresentation::XCore { blocks: blocks.to_vec() }))
}

fn expect_x(p: SpacePoint) -> XPoint {
    match p {
        SpacePoint::ComplexX(x) => x,
        _ => panic!("geodesic does not live in the glued complex"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesyCheck {
    pub t: f64,
    pub separation: f64,
    pub pass: bool,
}

pub const GEODESY_TOL: f64 = 1e-8;

/// `d(g(t−u), g(t+u)) = 2u` within `1e−8` at each requested time.
pub fn local_geodesy_check(g: &LocalGeodesic, times: &[f64], u: f64) -> Result<Vec<GeodesyCheck>> {
    if !(u > 0.0) {
        return Err(GeomError::InvalidParameter(format!("half-window u = {u}")));
    }
    times
        .iter()
        .map(|&t| {
            let separation = g.space().distance(&g.at(t - u), &g.at(t + u))?;
            Ok(GeodesyCheck { t, separation, pass: (separation - 2.0 * u).abs() <= GEODESY_TOL })
        })
        .collect()
}

/// Arrives at `B` backwards along `c₂` through the strip and leaves forwards
/// along `c₁`, retracing its steps.
pub fn backtrack_path(cfg: &XConfig) -> LocalGeodesic {
    let c = *cfg;
    LocalGeodesic::new(SpaceHandle::ComplexX(c), move |t| {
        let p = if t >= 0.0 { c.core_point(Piece::One, t) } else { c.core_point(Piece::Two, -t) };
        SpacePoint::ComplexX(p)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftRow {
    pub s: f64,
    /// `d(γ(s + t₀), γ(t₀))` for each base time, in the certificate's order.
    pub branches: [f64; 2],
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonRecurrenceCertificate {
    pub config: XConfig,
    pub eps: f64,
    pub base_times: [f64; 2],
    pub s_min: f64,
    pub s_max: f64,
    pub step: f64,
    pub grid_points: usize,
    /// `min_s max_{t₀} d(γ(s + t₀), γ(t₀))` over the grid.
    pub min_max: f64,
    pub argmin_s: f64,
    /// `min_max − 2·step`: a lower bound valid on the whole interval.
    pub certified_lower_bound: f64,
    /// certified_lower_bound ≥ ε.
    pub contradiction_pass: bool,
    /// Grid shifts with a near return at `t₀ = 0` whose second branch fails
    /// to exceed `d(A,B)/2`.
    pub branch_violations: usize,
    pub first_branch_violation: Option<f64>,
    pub branch_pass: bool,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub rows: Vec<ShiftRow>,
}

/// Grid certificate that no shift `s ∈ [s_min, s_max]` (`s > 0`) brings `γ`
/// within `ε` of itself at both base times `0` and `3ω₁/4`.
pub fn non_recurrence_certificate(
    eps: f64,
    s_min: f64,
    s_max: f64,
    step: f64,
    cfg: &XConfig,
    keep_rows: bool,
) -> Result<NonRecurrenceCertificate> {
    let half = 0.5 * cfg.d_ab();
    if !(eps > 0.0) || eps >= half {
        return Err(GeomError::InvalidParameter(format!("ε = {eps} must lie in (0, d(A,B)/2 = {half})")));
    }
    if !(step > 0.0) || !(s_max > s_min) || s_min < 0.0 {
        return Err(GeomError::InvalidParameter(format!("grid s ∈ [{s_min}, {s_max}] step {step}")));
    }
    let base_times = [0.0, 0.75 * cfg.omega1];
    let first = if s_min > 0.0 { 0 } else { 1 };
    let last = (s_max / step + 1e-9).floor() as usize;
    let start = (s_min / step - 1e-9).ceil() as usize;
    let rows: Vec<ShiftRow> = (start.max(first)..=last)
        .into_par_iter()
        .map(|k| {
            let s = k as f64 * step;
            let b = base_times.map(|t0| x_distance(&gamma_eval(s + t0, cfg), &gamma_eval(t0, cfg), cfg));
            ShiftRow { s, branches: b, max: b[0].max(b[1]) }
        })
        .collect();
    if rows.is_empty() {
        return Err(GeomError::InvalidParameter("empty shift grid".into()));
    }
    let argmin = rows.iter().min_by(|a, b| a.max.total_cmp(&b.max)).unwrap();
    let (min_max, argmin_s) = (argmin.max, argmin.s);
    let certified_lower_bound = min_max - 2.0 * step;
    let violations: Vec<f64> = rows
        .iter()
        .filter(|r| r.branches[0] < eps && r.branches[1] <= half)
        .map(|r| r.s)
        .collect();
    let contradiction_pass = certified_lower_bound >= eps;
    let branch_pass = violations.is_empty();
    Ok(NonRecurrenceCertificate {
        config: *cfg,
        eps,
        base_times,
        s_min,
        s_max,
        step,
        grid_points: rows.len(),
        min_max,
        argmin_s,
        certified_lower_bound,
        contradiction_pass,
        branch_violations: violations.len(),
        first_branch_violation: violations.first().copied(),
        branch_pass,
        pass: contradiction_pass && branch_pass,
        rows: if keep_rows { rows } else { Vec::new() },
    })
}

/// Result of shadowing `γ` from `t_x` by one closed geodesic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowResult {
    pub t_x: f64,
    pub eps: f64,
    pub blocks: Vec<Piece>,
    pub t_y: f64,
    pub period: f64,
    /// Largest sampled `d(c(t + t_y), γ(t + t_x))` over `t ∈ [0, period]`.
    pub max_distance: f64,
    pub step: f64,
    pub pass: bool,
}

pub const SHADOW_TOL: f64 = 1e-6;

/// Loops tried when shadowing: `c₂`, and `c₁ c₂^k` for `k = 0..=max_k`.
pub fn candidate_loops(max_k: usize) -> Vec<Vec<Piece>> {
    let mut out = vec![vec![Piece::Two]];
    for k in 0..=max_k {
        let mut b = vec![Piece::One];
        b.extend(std::iter::repeat(Piece::Two).take(k));
        out.push(b);
    }
    out
}

/// Parameters at which the loop `blocks` passes through `p` (a core point).
fn anchor_times(cfg: &XConfig, blocks: &[Piece], p: &XPoint) -> Vec<f64> {
    let mut out = Vec::new();
    let mut start = 0.0;
    for &b in blocks {
        if b == p.piece || cfg.in_strip(&p.coords) {
            out.push(start + p.coords.s);
        }
        start += cfg.cylinder(b).omega;
    }
    out
}

/// Best shadow of `γ` from `t_x` among `loops`, anchoring each loop at its
/// passages through `γ(t_x)`, sampled every `step` over one period.
pub fn shadow_gamma(cfg: &XConfig, t_x: f64, eps: f64, loops: &[Vec<Piece>], step: f64) -> Result<ShadowResult> {
    let target = gamma_eval(t_x, cfg);
    let mut best: Option<ShadowResult> = None;
    for blocks in loops {
        let c = x_loop(cfg, blocks)?;
        let period = c.period();
        let n = (period / step).ceil() as usize;
        for t_y in anchor_times(cfg, blocks, &target) {
            let mut max = 0.0f64;
            for k in 0..=n {
                let t = (k as f64 * step).min(period);
                let d = x_distance(&expect_x(c.eval(t + t_y)), &gamma_eval(t + t_x, cfg), cfg);
                max = max.max(d);
                if best.as_ref().is_some_and(|b| max >= b.max_distance) {
                    break;
                }
            }
            if best.as_ref().map_or(true, |b| max < b.max_distance) {
                best = Some(ShadowResult {
                    t_x,
                    eps,
                    blocks: blocks.clone(),
                    t_y,
                    period,
                    max_distance: max,
                    step,
                    pass: max < eps + SHADOW_TOL,
                });
            }
        }
    }
    best.ok_or_else(|| GeomError::InvalidParameter("no candidate loop passes through γ(t_x)".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximabilityReport {
    pub results: Vec<ShadowResult>,
    pub failures: usize,
    pub pass: bool,
}

/// Runs [`shadow_gamma`] for every `(ε, t_x)` pair.
pub fn approximability_check(cfg: &XConfig, eps_values: &[f64], base_points: &[f64], max_k: usize, step: f64) -> Result<ApproximabilityReport> {
    let loops = candidate_loops(max_k);
    let pairs: Vec<(f64, f64)> = eps_values.iter().flat_map(|&e| base_points.iter().map(move |&t| (e, t))).collect();
    let results = pairs
        .into_par_iter()
        .map(|(eps, t_x)| shadow_gamma(cfg, t_x, eps, &loops, step))
        .collect::<Result<Vec<_>>>()?;
    let failures = results.iter().filter(|r| !r.pass).count();
    Ok(ApproximabilityReport { failures, pass: failures == 0, results })
}
