//! The rose with two petals `a`, `b` of lengths `ℓ_a`, `ℓ_b`, the free group
//! on `{a, b}` coding its loops, and its universal cover, the 4-valent tree.
//!
//! Every distance in this module is a finite sum of edge lengths, so the tree
//! cover gives exact answers up to floating-point addition.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::flow::{LocalGeodesic, SpaceHandle, SpacePoint};
use crate::metric::{GeodesicSpace, MetricSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gen {
    A,
    B,
}

/// A generator or its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub gen: Gen,
    pub inverse: bool,
}

impl Letter {
    pub const A: Letter = Letter { gen: Gen::A, inverse: false };
    pub const B: Letter = Letter { gen: Gen::B, inverse: false };
    pub const A_INV: Letter = Letter { gen: Gen::A, inverse: true };
    pub const B_INV: Letter = Letter { gen: Gen::B, inverse: true };

    pub fn inv(self) -> Letter {
        Letter { inverse: !self.inverse, ..self }
    }

    pub fn cancels(self, other: Letter) -> bool {
        self.gen == other.gen && self.inverse != other.inverse
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match (self.gen, self.inverse) {
            (Gen::A, false) => 'a',
            (Gen::B, false) => 'b',
            (Gen::A, true) => 'A',
            (Gen::B, true) => 'B',
        };
        write!(f, "{c}")
    }
}

/// A word over `{a, a⁻¹, b, b⁻¹}`, written with capitals for inverses
/// (`"aB"` is `a·b⁻¹`). Constructors that promise reduction say so.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct EdgeWord(Vec<Letter>);

impl EdgeWord {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn from_letters(letters: Vec<Letter>) -> Self {
        Self(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Position of the first adjacent cancelling pair, if any.
    pub fn first_cancellation(&self) -> Option<usize> {
        self.0.windows(2).position(|w| w[0].cancels(w[1]))
    }

    pub fn is_reduced(&self) -> bool {
        self.first_cancellation().is_none()
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.is_reduced() && !(self.len() > 1 && self.0[0].cancels(self.0[self.len() - 1]))
    }

    pub fn inverse(&self) -> EdgeWord {
        EdgeWord(self.0.iter().rev().map(|l| l.inv()).collect())
    }

    /// Reduced product `self · other`.
    pub fn mul(&self, other: &EdgeWord) -> EdgeWord {
        let mut out = self.0.clone();
        for &l in &other.0 {
            push_reduced(&mut out, l);
        }
        EdgeWord(out)
    }

    pub fn pow(&self, k: i64) -> EdgeWord {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = EdgeWord::empty();
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    /// Total length of the edge path.
    pub fn length(&self, cfg: &RoseConfig) -> f64 {
        self.0.iter().map(|l| cfg.edge_length(l.gen)).sum()
    }

    pub fn is_positive(&self) -> bool {
        self.0.iter().all(|l| !l.inverse)
    }
}

fn push_reduced(out: &mut Vec<Letter>, l: Letter) {
    if out.last().is_some_and(|last| last.cancels(l)) {
        out.pop();
    } else {
        out.push(l);
    }
}

impl fmt::Display for EdgeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for l in &self.0 {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for EdgeWord {
    type Err = GeomError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "1" {
            return Ok(EdgeWord::empty());
        }
        s.chars()
            .map(|c| match c {
                'a' => Ok(Letter::A),
                'b' => Ok(Letter::B),
                'A' => Ok(Letter::A_INV),
                'B' => Ok(Letter::B_INV),
                other => Err(GeomError::InvalidParameter(format!("letter {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(EdgeWord)
    }
}

/// Freely reduces a word. The empty output is the trivial element.
pub fn word_reduce(w: &EdgeWord) -> EdgeWord {
    EdgeWord::empty().mul(w)
}

/// Cyclically reduced representative of the conjugacy class of `w`.
pub fn cyclic_reduce(w: &EdgeWord) -> EdgeWord {
    let r = word_reduce(w);
    let l = &r.0;
    let mut k = 0;
    while 2 * k + 1 < l.len() && l[k].cancels(l[l.len() - 1 - k]) {
        k += 1;
    }
    EdgeWord(l[k..l.len() - k].to_vec())
}

/// Petal lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoseConfig {
    pub la: f64,
    pub lb: f64,
}

impl RoseConfig {
    pub fn new(la: f64, lb: f64) -> Result<Self> {
        for l in [la, lb] {
            if !(l > 0.0) || !l.is_finite() {
                return Err(GeomError::InvalidParameter(format!("petal length {l}")));
            }
        }
        Ok(Self { la, lb })
    }

    /// `ℓ_a = 1`, `ℓ_b = (1 + √5)/2`.
    pub fn golden() -> Self {
        Self { la: 1.0, lb: 0.5 * (1.0 + 5f64.sqrt()) }
    }

    pub fn edge_length(&self, g: Gen) -> f64 {
        match g {
            Gen::A => self.la,
            Gen::B => self.lb,
        }
    }

    pub fn shortest_petal(&self) -> f64 {
        self.la.min(self.lb)
    }

    /// A point on petal `edge` at `offset` from the vertex, measured in the
    /// direction of the positive letter.
    pub fn point(&self, edge: Gen, offset: f64) -> Result<RosePoint> {
        let len = self.edge_length(edge);
        if !offset.is_finite() || offset < 0.0 || offset > len {
            return Err(GeomError::InvalidParameter(format!("offset {offset} on a petal of length {len}")));
        }
        Ok(self.point_unchecked(edge, offset))
    }

    fn point_unchecked(&self, edge: Gen, offset: f64) -> RosePoint {
        if offset <= 0.0 || offset >= self.edge_length(edge) {
            RosePoint::VERTEX
        } else {
            RosePoint { edge, offset }
        }
    }

    pub fn vertex(&self) -> RosePoint {
        RosePoint::VERTEX
    }
}

/// A point of the rose; the vertex is stored as `(A, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RosePoint {
    pub edge: Gen,
    pub offset: f64,
}

impl RosePoint {
    pub const VERTEX: RosePoint = RosePoint { edge: Gen::A, offset: 0.0 };

    pub fn is_vertex(&self) -> bool {
        self.offset == 0.0
    }
}

fn to_vertex(p: &RosePoint, cfg: &RoseConfig) -> f64 {
    p.offset.min(cfg.edge_length(p.edge) - p.offset)
}

/// Shortest route: within the petal when both points share it, otherwise
/// through the vertex.
pub fn rose_distance(p: &RosePoint, q: &RosePoint, cfg: &RoseConfig) -> f64 {
    let via_vertex = to_vertex(p, cfg) + to_vertex(q, cfg);
    if !p.is_vertex() && !q.is_vertex() && p.edge == q.edge {
        via_vertex.min((p.offset - q.offset).abs())
    } else {
        via_vertex
    }
}

impl MetricSpace for RoseConfig {
    type Point = RosePoint;

    fn distance(&self, p: &RosePoint, q: &RosePoint) -> f64 {
        rose_distance(p, q, self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubstitutionRule {
    /// `a → ab`, `b → a`.
    Fibonacci,
    /// `a → ab`, `b → ba`.
    ThueMorse,
}

impl SubstitutionRule {
    fn image(self, g: Gen) -> &'static [Letter] {
        match (self, g) {
            (_, Gen::A) => &[Letter::A, Letter::B],
            (SubstitutionRule::Fibonacci, Gen::B) => &[Letter::A],
            (SubstitutionRule::ThueMorse, Gen::B) => &[Letter::B, Letter::A],
        }
    }

    pub fn apply(self, w: &EdgeWord) -> EdgeWord {
        EdgeWord(w.0.iter().flat_map(|l| self.image(l.gen).iter().copied()).collect())
    }

    /// Seed `(left, right)` of the two-sided fixed point of the squared
    /// substitution.
    fn two_sided_seed(self) -> (Letter, Letter) {
        match self {
            SubstitutionRule::Fibonacci => (Letter::B, Letter::A),
            SubstitutionRule::ThueMorse => (Letter::A, Letter::A),
        }
    }
}

impl FromStr for SubstitutionRule {
    type Err = GeomError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fib" | "fibonacci" => Ok(Self::Fibonacci),
            "tm" | "thue_morse" | "thue-morse" => Ok(Self::ThueMorse),
            other => Err(GeomError::InvalidParameter(format!("substitution rule {other:?}"))),
        }
    }
}

/// The `depth`-fold image of `a`.
pub fn substitution_word(rule: SubstitutionRule, depth: usize) -> EdgeWord {
    (0..depth).fold(EdgeWord(vec![Letter::A]), |w, _| rule.apply(&w))
}

/// All (possibly overlapping) start indices of `pattern` in `word`.
pub fn occurrences(word: &EdgeWord, pattern: &EdgeWord) -> Vec<usize> {
    occurrences_in(&word.0, &pattern.0)
}

pub(crate) fn occurrences_in(word: &[Letter], pattern: &[Letter]) -> Vec<usize> {
    if pattern.is_empty() {
        return (0..=word.len()).collect();
    }
    if pattern.len() > word.len() {
        return Vec::new();
    }
    word.windows(pattern.len())
        .enumerate()
        .filter(|(_, w)| *w == pattern)
        .map(|(i, _)| i)
        .collect()
}

/// A point of the tree cover: the vertex reached by the reduced word
/// `vertex`, or a point on the edge from `vertex` to `vertex·g` at distance
/// `offset ∈ (0, ℓ_g)` from `vertex`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreePos {
    pub vertex: EdgeWord,
    pub edge: Option<(Gen, f64)>,
}

/// One step of a path from the base vertex: a letter traversed for `len`
/// (the full edge length except possibly the last step).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Step {
    letter: Letter,
    len: f64,
    partial: bool,
}

impl TreePos {
    pub fn base() -> Self {
        TreePos { vertex: EdgeWord::empty(), edge: None }
    }

    pub fn at_vertex(vertex: EdgeWord) -> Result<Self> {
        if let Some(i) = vertex.first_cancellation() {
            return Err(GeomError::NotReduced(i));
        }
        Ok(TreePos { vertex, edge: None })
    }

    /// The point at distance `offset` from `vertex` along the edge labelled
    /// `letter`. `vertex` must be reduced.
    pub fn on_letter(vertex: EdgeWord, letter: Letter, offset: f64, cfg: &RoseConfig) -> Self {
        let len = cfg.edge_length(letter.gen);
        if offset <= 0.0 {
            return TreePos { vertex, edge: None };
        }
        if offset >= len {
            return TreePos { vertex: vertex.mul(&EdgeWord(vec![letter])), edge: None };
        }
        if letter.inverse {
            TreePos { vertex: vertex.mul(&EdgeWord(vec![letter])), edge: Some((letter.gen, len - offset)) }
        } else {
            TreePos { vertex, edge: Some((letter.gen, offset)) }
        }
    }

    /// Image in the rose.
    pub fn project(&self, cfg: &RoseConfig) -> RosePoint {
        match self.edge {
            None => RosePoint::VERTEX,
            Some((g, o)) => cfg.point_unchecked(g, o),
        }
    }

    /// Left translation by the deck transformation `g`.
    pub fn translate(&self, g: &EdgeWord) -> TreePos {
        TreePos { vertex: g.mul(&self.vertex), edge: self.edge }
    }

    fn steps(&self, cfg: &RoseConfig) -> Result<Vec<Step>> {
        if let Some(i) = self.vertex.first_cancellation() {
            return Err(GeomError::NotReduced(i));
        }
        let mut letters = self.vertex.0.clone();
        let partial = match self.edge {
            None => None,
            Some((g, o)) => {
                let fwd = Letter { gen: g, inverse: false };
                if letters.last().is_some_and(|l| l.cancels(fwd)) {
                    letters.pop();
                    Some(Step { letter: fwd.inv(), len: cfg.edge_length(g) - o, partial: true })
                } else {
                    Some(Step { letter: fwd, len: o, partial: true })
                }
            }
        };
        let mut steps: Vec<Step> = letters
            .into_iter()
            .map(|l| Step { letter: l, len: cfg.edge_length(l.gen), partial: false })
            .collect();
        steps.extend(partial);
        Ok(steps)
    }

    /// Distance from the base vertex.
    pub fn depth(&self, cfg: &RoseConfig) -> Result<f64> {
        Ok(self.steps(cfg)?.iter().map(|s| s.len).sum())
    }
}

fn steps_distance(s1: &[Step], s2: &[Step], cfg: &RoseConfig) -> f64 {
    let c = s1.iter().zip(s2).take_while(|(x, y)| x.letter == y.letter).count();
    let tail = |s: &[Step]| -> f64 { s[c..].iter().map(|x| x.len).sum() };
    if c == 0 {
        return tail(s1) + tail(s2);
    }
    let (a, b) = (&s1[c - 1], &s2[c - 1]);
    let full = cfg.edge_length(a.letter.gen);
    match (a.partial, b.partial) {
        (true, true) => (a.len - b.len).abs(),
        (true, false) => (full - a.len) + tail(s2),
        (false, true) => (full - b.len) + tail(s1),
        (false, false) => tail(s1) + tail(s2),
    }
}

/// Distance in the tree cover via cancellation of the longest common prefix.
pub fn tree_distance(p: &TreePos, q: &TreePos, cfg: &RoseConfig) -> Result<f64> {
    Ok(steps_distance(&p.steps(cfg)?, &q.steps(cfg)?, cfg))
}

/// The point at arclength `t` along the edge path spelled by `letters` from
/// the base vertex (clamped to the path's ends).
pub fn path_point(letters: &[Letter], t: f64, cfg: &RoseConfig) -> TreePos {
    let mut vertex = EdgeWord::empty();
    let t = t.max(0.0);
    // cumulative ends, summed in the same order as `EdgeWord::length`
    let mut start = 0.0;
    for &l in letters {
        let end = start + cfg.edge_length(l.gen);
        if t < end {
            return TreePos::on_letter(vertex, l, t - start, cfg);
        }
        start = end;
        push_reduced(&mut vertex.0, l);
    }
    TreePos { vertex, edge: None }
}

fn steps_point(steps: &[Step], t: f64, cfg: &RoseConfig) -> TreePos {
    let letters: Vec<Letter> = steps.iter().map(|s| s.letter).collect();
    path_point(&letters, t, cfg)
}

/// The tree cover of a rose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoseTree {
    pub cfg: RoseConfig,
}

impl RoseTree {
    pub fn new(cfg: RoseConfig) -> Self {
        Self { cfg }
    }

    /// Random point within distance `radius` of the base vertex (roughly:
    /// the last edge may overshoot by less than one petal).
    pub fn sample<R: Rng>(&self, rng: &mut R, radius: f64) -> TreePos {
        const ALPHABET: [Letter; 4] = [Letter::A, Letter::A_INV, Letter::B, Letter::B_INV];
        let target = rng.gen_range(0.0..=radius);
        let mut letters: Vec<Letter> = Vec::new();
        let mut len = 0.0;
        loop {
            let l = loop {
                let l = ALPHABET[rng.gen_range(0..4)];
                if !letters.last().is_some_and(|last| last.cancels(l)) {
                    break l;
                }
            };
            let el = self.cfg.edge_length(l.gen);
            if len + el > target {
                let vertex = EdgeWord(letters);
                return TreePos::on_letter(vertex, l, target - len, &self.cfg);
            }
            len += el;
            letters.push(l);
        }
    }
}

impl MetricSpace for RoseTree {
    type Point = TreePos;

    fn distance(&self, p: &TreePos, q: &TreePos) -> f64 {
        tree_distance(p, q, &self.cfg).expect("tree positions are kept reduced")
    }
}

impl GeodesicSpace for RoseTree {
    /// Walks back from `p` to the branch point, then out towards `q`.
    fn segment_point(&self, p: &TreePos, q: &TreePos, t: f64) -> TreePos {
        let s1 = p.steps(&self.cfg).expect("reduced");
        let s2 = q.steps(&self.cfg).expect("reduced");
        let d1: f64 = s1.iter().map(|s| s.len).sum();
        let d2: f64 = s2.iter().map(|s| s.len).sum();
        let d = steps_distance(&s1, &s2, &self.cfg);
        let branch = 0.5 * (d1 + d2 - d);
        if t <= d1 - branch {
            steps_point(&s1, d1 - t, &self.cfg)
        } else {
            steps_point(&s2, branch + (t - (d1 - branch)), &self.cfg)
        }
    }
}

/// Point at arclength `sigma` on the axis of the cyclically reduced word `g`
/// (the bi-infinite path `…g g g…` through the base vertex).
pub fn axis_point(g: &EdgeWord, sigma: f64, cfg: &RoseConfig) -> TreePos {
    let period = g.length(cfg);
    let q = (sigma / period).floor();
    let r = sigma - q * period;
    let start = g.pow(q as i64);
    path_point(&g.0, r, cfg).translate(&start)
}

/// Nearest-point projection onto the axis of a cyclically reduced, non-empty
/// `g`: returns `(sigma, distance)` with the foot at `axis_point(g, sigma)`.
pub fn project_to_axis(p: &TreePos, g: &EdgeWord, cfg: &RoseConfig) -> Result<(f64, f64)> {
    if g.is_empty() || !g.is_cyclically_reduced() {
        return Err(GeomError::InvalidParameter(format!("axis word {g} is not cyclically reduced")));
    }
    let steps = p.steps(cfg)?;
    let depth: f64 = steps.iter().map(|s| s.len).sum();
    let period = g.length(cfg);
    // rays of the axis out of the base vertex, long enough to outrun p
    let reps = ((depth / period).ceil() as usize) + 2;
    let fwd: Vec<Step> = g.pow(reps as i64).0.iter().map(|&l| Step { letter: l, len: cfg.edge_length(l.gen), partial: false }).collect();
    let bwd: Vec<Step> = g.pow(-(reps as i64)).0.iter().map(|&l| Step { letter: l, len: cfg.edge_length(l.gen), partial: false }).collect();
    let shared = |ray: &[Step]| -> f64 {
        // arclength along the ray shared with the path to p
        let mut s = 0.0;
        for (a, b) in steps.iter().zip(ray) {
            if a.letter != b.letter {
                break;
            }
            s += a.len;
        }
        s
    };
    let (f, b) = (shared(&fwd), shared(&bwd));
    let sigma = if f > 0.0 { f } else { -b };
    let dist = depth - f.max(b);
    Ok((sigma, dist))
}

/// How a rose geodesic's letters extend in both directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WordShape {
    /// `…w w w…`, with letter 0 the first letter of `w`.
    Periodic(EdgeWord),
    /// `left · right` with letter 0 the first letter of `right`; defined only
    /// over the generated letters.
    BiInfinite { left: EdgeWord, right: EdgeWord },
}

/// A unit-speed local geodesic on the rose coded by a reduced letter sequence;
/// parameter 0 sits `anchor` units after the start of letter 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoseGeodesic {
    shape: WordShape,
    anchor: f64,
    cfg: RoseConfig,
    /// Start arclength of each right/periodic letter (plus the total).
    right_starts: Vec<f64>,
    /// Start arclength (negative) of each left letter, indexed from the end.
    left_starts: Vec<f64>,
}

fn cumulative(letters: &[Letter], cfg: &RoseConfig) -> Vec<f64> {
    let mut acc = Vec::with_capacity(letters.len() + 1);
    let mut s = 0.0;
    acc.push(0.0);
    for l in letters {
        s += cfg.edge_length(l.gen);
        acc.push(s);
    }
    acc
}

impl RoseGeodesic {
    pub fn periodic(word: EdgeWord, anchor: f64, cfg: RoseConfig) -> Result<Self> {
        if word.is_empty() || !word.is_cyclically_reduced() {
            return Err(GeomError::InvalidParameter(format!("closed rose geodesic needs a cyclically reduced word, got {word}")));
        }
        let right_starts = cumulative(&word.0, &cfg);
        Ok(Self { shape: WordShape::Periodic(word), anchor, cfg, right_starts, left_starts: Vec::new() })
    }

    pub fn bi_infinite(left: EdgeWord, right: EdgeWord, anchor: f64, cfg: RoseConfig) -> Result<Self> {
        let joined = EdgeWord([left.0.as_slice(), right.0.as_slice()].concat());
        if let Some(i) = joined.first_cancellation() {
            return Err(GeomError::NotReduced(i));
        }
        let right_starts = cumulative(&right.0, &cfg);
        let rev: Vec<Letter> = left.0.iter().rev().copied().collect();
        let left_starts = cumulative(&rev, &cfg).into_iter().skip(1).map(|s| -s).collect();
        Ok(Self { shape: WordShape::BiInfinite { left, right }, anchor, cfg, right_starts, left_starts })
    }

    /// Central part of the two-sided fixed point of `rule²`, obtained by
    /// applying `rule` `depth` times to the seed pair (`b.a` for Fibonacci,
    /// `a.a` for Thue–Morse). Even depths give nested windows.
    pub fn substitution(rule: SubstitutionRule, depth: usize, anchor: f64, cfg: RoseConfig) -> Result<Self> {
        let (l, r) = rule.two_sided_seed();
        let mut left = EdgeWord(vec![l]);
        let mut right = EdgeWord(vec![r]);
        for _ in 0..depth {
            left = rule.apply(&left);
            right = rule.apply(&right);
        }
        Self::bi_infinite(left, right, anchor, cfg)
    }

    pub fn cfg(&self) -> &RoseConfig {
        &self.cfg
    }

    pub fn shape(&self) -> &WordShape {
        &self.shape
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn period(&self) -> Option<f64> {
        match &self.shape {
            WordShape::Periodic(_) => Some(*self.right_starts.last().unwrap()),
            WordShape::BiInfinite { .. } => None,
        }
    }

    /// Parameter range over which the geodesic is defined.
    pub fn range(&self) -> (f64, f64) {
        match &self.shape {
            WordShape::Periodic(_) => (f64::NEG_INFINITY, f64::INFINITY),
            WordShape::BiInfinite { .. } => {
                let lo = self.left_starts.last().copied().unwrap_or(0.0);
                (lo - self.anchor, self.right_starts.last().unwrap() - self.anchor)
            }
        }
    }

    /// Letter with signed index `i` (0 = first right letter).
    pub fn letter(&self, i: i64) -> Option<Letter> {
        match &self.shape {
            WordShape::Periodic(w) => Some(w.0[i.rem_euclid(w.len() as i64) as usize]),
            WordShape::BiInfinite { left, right } => {
                if i >= 0 {
                    right.0.get(i as usize).copied()
                } else {
                    let k = left.len() as i64 + i;
                    (k >= 0).then(|| left.0[k as usize])
                }
            }
        }
    }

    /// Parameter at which letter `i` starts.
    pub fn letter_start(&self, i: i64) -> Option<f64> {
        let a = match &self.shape {
            WordShape::Periodic(_) => {
                let n = (self.right_starts.len() - 1) as i64;
                let period = *self.right_starts.last().unwrap();
                i.div_euclid(n) as f64 * period + self.right_starts[i.rem_euclid(n) as usize]
            }
            WordShape::BiInfinite { .. } => {
                if i >= 0 {
                    *self.right_starts.get(i as usize)?
                } else {
                    *self.left_starts.get((-i - 1) as usize)?
                }
            }
        };
        Some(a - self.anchor)
    }

    /// Index of the letter containing parameter `t` and the offset into it.
    fn locate(&self, t: f64) -> Result<(i64, f64)> {
        let a = t + self.anchor;
        match &self.shape {
            WordShape::Periodic(_) => {
                let period = *self.right_starts.last().unwrap();
                let n = (self.right_starts.len() - 1) as i64;
                let q = (a / period).floor();
                let r = a - q * period;
                let k = self.right_starts.partition_point(|&s| s <= r).saturating_sub(1).min(n as usize - 1);
                Ok((q as i64 * n + k as i64, r - self.right_starts[k]))
            }
            WordShape::BiInfinite { .. } => {
                let (lo, hi) = self.range();
                if !(t >= lo && t <= hi) {
                    return Err(GeomError::BeyondGeneratedRange(t));
                }
                if a >= 0.0 {
                    let n = self.right_starts.len() - 1;
                    let k = self.right_starts.partition_point(|&s| s <= a).saturating_sub(1).min(n - 1);
                    Ok((k as i64, a - self.right_starts[k]))
                } else {
                    let k = self.left_starts.partition_point(|&s| s > a).min(self.left_starts.len() - 1);
                    Ok((-(k as i64) - 1, a - self.left_starts[k]))
                }
            }
        }
    }

    pub fn eval(&self, t: f64) -> Result<RosePoint> {
        let (i, off) = self.locate(t)?;
        let l = self.letter(i).ok_or(GeomError::BeyondGeneratedRange(t))?;
        let len = self.cfg.edge_length(l.gen);
        let offset = if l.inverse { len - off } else { off };
        Ok(self.cfg.point_unchecked(l.gen, offset))
    }

    /// Word spelled by letters `from..to` (signed indices).
    pub fn letters_between(&self, from: i64, to: i64) -> Result<EdgeWord> {
        (from..to)
            .map(|i| self.letter(i).ok_or_else(|| GeomError::BeyondGeneratedRange(i as f64)))
            .collect::<Result<Vec<_>>>()
            .map(EdgeWord)
    }

    /// Lift to the tree with letter 0 starting at the base vertex.
    pub fn lift(&self, t: f64) -> Result<TreePos> {
        let (i, off) = self.locate(t)?;
        let l = self.letter(i).ok_or(GeomError::BeyondGeneratedRange(t))?;
        let vertex = if i >= 0 {
            match &self.shape {
                WordShape::Periodic(w) => {
                    let n = w.len() as i64;
                    w.pow(i.div_euclid(n)).mul(&EdgeWord(w.0[..i.rem_euclid(n) as usize].to_vec()))
                }
                WordShape::BiInfinite { right, .. } => EdgeWord(right.0[..i as usize].to_vec()),
            }
        } else {
            self.letters_between(i, 0)?.inverse()
        };
        Ok(TreePos::on_letter(vertex, l, off, &self.cfg))
    }

    /// Parameters in `[t0, t1]` at which the geodesic crosses the vertex.
    pub fn vertex_times(&self, t0: f64, t1: f64) -> Result<Vec<f64>> {
        let (i0, _) = self.locate(t0)?;
        let mut out = Vec::new();
        let mut i = i0;
        while let Some(s) = self.letter_start(i) {
            if s > t1 {
                break;
            }
            if s >= t0 {
                out.push(s);
            }
            i += 1;
        }
        Ok(out)
    }

    pub fn to_local(&self) -> LocalGeodesic {
        let g = self.clone();
        LocalGeodesic::new(SpaceHandle::Rose(self.cfg), move |t| {
            SpacePoint::Rose(g.eval(t).unwrap_or_else(|e| panic!("rose geodesic evaluated outside its range: {e}")))
        })
    }
}
