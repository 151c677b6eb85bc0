//! The geodesic-flow layer: a uniform handle over the concrete spaces, local
//! geodesics as evaluable maps `ℝ → X`, the shift action
//! `(t·g)(s) = g(s + t)`, the compact-open distance and recurrence search.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counterexample::{x_distance, XConfig, XPoint};
use crate::cylinder::{cyl_distance, CylinderConfig, FermiPoint};
use crate::error::{GeomError, Result};
use crate::model_plane::{hp_distance, ModelPoint};
use crate::rose::{rose_distance, RoseConfig, RoseGeodesic, RosePoint};
use crate::search;

/// Which space a geodesic lives in, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "config", rename_all = "snake_case")]
pub enum SpaceHandle {
    Plane { chi: f64 },
    Cylinder(CylinderConfig),
    Rose(RoseConfig),
    ComplexX(XConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "point", rename_all = "snake_case")]
pub enum SpacePoint {
    Plane(ModelPoint),
    Cylinder(FermiPoint),
    Rose(RosePoint),
    ComplexX(XPoint),
}

impl SpaceHandle {
    pub fn distance(&self, p: &SpacePoint, q: &SpacePoint) -> Result<f64> {
        match (self, p, q) {
            (SpaceHandle::Plane { chi }, SpacePoint::Plane(a), SpacePoint::Plane(b)) => hp_distance(a, b, *chi),
            (SpaceHandle::Cylinder(c), SpacePoint::Cylinder(a), SpacePoint::Cylinder(b)) => Ok(cyl_distance(a, b, c)),
            (SpaceHandle::Rose(c), SpacePoint::Rose(a), SpacePoint::Rose(b)) => Ok(rose_distance(a, b, c)),
            (SpaceHandle::ComplexX(c), SpacePoint::ComplexX(a), SpacePoint::ComplexX(b)) => Ok(x_distance(a, b, c)),
            _ => Err(GeomError::SpaceMismatch),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SpaceHandle::Plane { .. } => "plane",
            SpaceHandle::Cylinder(_) => "cylinder",
            SpaceHandle::Rose(_) => "rose",
            SpaceHandle::ComplexX(_) => "complex_x",
        }
    }
}

type EvalFn = dyn Fn(f64) -> SpacePoint + Send + Sync;

/// A unit-speed local geodesic `ℝ → X`, stored as an evaluation closure and
/// a parameter offset so that shifting is free and composes exactly.
#[derive(Clone)]
pub struct LocalGeodesic {
    space: SpaceHandle,
    eval: Arc<EvalFn>,
    offset: f64,
}

impl fmt::Debug for LocalGeodesic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalGeodesic").field("space", &self.space).field("offset", &self.offset).finish()
    }
}

impl LocalGeodesic {
    pub fn new<F>(space: SpaceHandle, eval: F) -> Self
    where
        F: Fn(f64) -> SpacePoint + Send + Sync + 'static,
    {
        Self { space, eval: Arc::new(eval), offset: 0.0 }
    }

    pub fn at(&self, t: f64) -> SpacePoint {
        (self.eval)(t + self.offset)
    }

    /// `s ↦ g(s + t)`.
    pub fn shift(&self, t: f64) -> LocalGeodesic {
        Self { space: self.space, eval: Arc::clone(&self.eval), offset: self.offset + t }
    }

    pub fn space(&self) -> &SpaceHandle {
        &self.space
    }

    /// Total shift applied so far.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn distance_at(&self, other: &LocalGeodesic, t: f64) -> Result<f64> {
        if self.space != other.space {
            return Err(GeomError::SpaceMismatch);
        }
        self.space.distance(&self.at(t), &other.at(t))
    }
}

/// The flow action.
pub fn shift(g: &LocalGeodesic, t: f64) -> LocalGeodesic {
    g.shift(t)
}

/// Sampling window `[−T, T]` with spacing `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowWindow {
    pub half_width: f64,
    pub step: f64,
}

impl FlowWindow {
    pub fn new(half_width: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= half_width && half_width.is_finite()) {
            return Err(GeomError::InvalidParameter(format!("flow window T = {half_width}, step = {step}")));
        }
        Ok(Self { half_width, step })
    }

    /// Sample times ordered outwards from 0, so that early exits see the
    /// most telling samples first.
    pub fn samples(&self) -> Vec<f64> {
        let n = (self.half_width / self.step).floor() as usize;
        let mut out = vec![0.0];
        for k in 1..=n {
            let t = k as f64 * self.step;
            out.push(t);
            out.push(-t);
        }
        if (n as f64) * self.step < self.half_width {
            out.push(self.half_width);
            out.push(-self.half_width);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactOpenDistance {
    /// Largest sampled `d(g(t), g′(t))`.
    pub sampled_max: f64,
    /// The true supremum over the window exceeds `sampled_max` by at most
    /// this much (both maps are 1-Lipschitz).
    pub guard: f64,
}

/// `max_{t ∈ [−T, T]} d(g(t), g′(t))` on the window's sample grid.
pub fn compact_open_distance(g: &LocalGeodesic, h: &LocalGeodesic, win: &FlowWindow) -> Result<CompactOpenDistance> {
    let mut max = 0.0f64;
    for t in win.samples() {
        max = max.max(g.distance_at(h, t)?);
    }
    Ok(CompactOpenDistance { sampled_max: max, guard: 2.0 * win.step })
}

/// `true` iff every sample of the window is within `bound`; stops at the
/// first failure.
fn window_within(g: &LocalGeodesic, t: f64, win: &FlowWindow, bound: f64) -> bool {
    win.samples().into_iter().all(|s| {
        let d = g.space.distance(&g.at(s + t), &g.at(s)).unwrap_or(f64::INFINITY);
        d < bound
    })
}

/// One detected return `t_n·g ≈ g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recurrence {
    pub n: usize,
    pub t: f64,
    /// `d(g(0), g(t_n))`.
    pub eps: f64,
    /// Window half-width `T_n` over which `t_n·g` stays within the schedule's
    /// tolerance of `g`.
    pub window: f64,
    /// Sampled compact-open distance on that window.
    pub window_distance: f64,
}

/// Scans `t` upwards for returns of `g` to itself. Entry `n` looks at
/// `t ≥ max(t_{n−1}, T_n)`, past the stretch where the previous return still
/// passes the new test, on a grid of spacing `ε_n/10`. It accepts the first
/// `t` whose shift is `ε_n`-close to `g` on `[−T_n, T_n]` (sampled at the same
/// spacing), then slides `t` to a local minimum of `d(g(0), g(t))` within
/// `2ε_n` ahead when that keeps the window test. Stops at the first entry
/// with no return below `horizon`.
pub fn detect_recurrence(g: &LocalGeodesic, eps_schedule: &[f64], t_schedule: &[f64], horizon: f64) -> Result<Vec<Recurrence>> {
    if eps_schedule.len() != t_schedule.len() {
        return Err(GeomError::InvalidParameter("ε and T schedules differ in length".into()));
    }
    let mut out: Vec<Recurrence> = Vec::new();
    let mut prev = 0.0f64;
    for (n, (&eps, &big_t)) in eps_schedule.iter().zip(t_schedule).enumerate() {
        if !(eps > 0.0) || !(big_t > 0.0) {
            return Err(GeomError::InvalidParameter(format!("schedule entry ({eps}, {big_t})")));
        }
        let step = eps / 10.0;
        let win = FlowWindow::new(big_t, step.min(big_t))?;
        let mut start = prev.max(big_t);
        if !out.is_empty() {
            // leave the previous return before looking for the next one
            while start <= horizon && window_within(g, start, &win, eps) {
                start += step;
            }
        }
        if start > horizon {
            break;
        }
        let count = ((horizon - start) / step).floor() as usize + 1;
        let hit = (0..count)
            .into_par_iter()
            .map(|k| start + k as f64 * step)
            .find_first(|&t| window_within(g, t, &win, eps));
        let Some(t0) = hit else { break };
        let ret = |t: f64| g.space.distance(&g.at(0.0), &g.at(t)).unwrap_or(f64::INFINITY);
        let refined = search::golden_section(&ret, t0, t0 + 2.0 * eps, 1e-12);
        let t = if ret(refined) <= ret(t0) && window_within(g, refined, &win, eps) { refined } else { t0 };
        let window_distance = compact_open_distance(&g.shift(t), g, &win)?.sampled_max;
        out.push(Recurrence { n: n + 1, t, eps: ret(t), window: big_t, window_distance });
        prev = t;
    }
    Ok(out)
}

/// Recurrence of a rose geodesic read off its letters: level `n` takes the
/// central window of `n` letters on each side of letter 0, finds its first
/// later occurrence (shift `T` strictly beyond the previous level's), and
/// snaps `T` to the grid of spacing `grid_base·2^{−n}`. Snapping makes the
/// return inexact whenever `T` is not on the grid, which is what happens for
/// incommensurable petal lengths.
pub fn detect_rose_recurrence(g: &RoseGeodesic, levels: usize, grid_base: f64) -> Result<Vec<Recurrence>> {
    let cfg = *g.cfg();
    let mut out = Vec::new();
    // unsnapped shift of the previous level
    let mut prev = 0.0f64;
    for n in 1..=levels {
        let m = n as i64;
        let window = g.letters_between(-m, m)?;
        let left_time = -g.letter_start(-m).ok_or(GeomError::BeyondGeneratedRange(-(n as f64)))?;
        let right_time = g.letter_start(m).ok_or(GeomError::BeyondGeneratedRange(n as f64))?;
        let half = left_time.min(right_time);
        let mut found = None;
        let mut j = 1i64;
        while g.letter(j + m - 1).is_some() {
            let shift = g.letter_start(j).unwrap() - g.letter_start(0).unwrap();
            if shift > prev && g.letters_between(j - m, j + m)? == window {
                found = Some(shift);
                break;
            }
            j += 1;
        }
        let Some(exact) = found else { break };
        let h = grid_base * 0.5f64.powi(n as i32);
        let t = (exact / h).round() * h;
        let eps = rose_distance(&g.eval(0.0)?, &g.eval(t)?, &cfg);
        // exact letters agree on the window, so the shifted curve differs by
        // the snapping error throughout
        out.push(Recurrence { n, t, eps, window: half, window_distance: (t - exact).abs() });
        prev = exact;
    }
    Ok(out)
}
