//! Circle points, PL circle homeomorphisms given by their lifts, and free
//! S¹-actions stored through a conjugator to the rigid rotation.
//!
//! The circle is ℝ/ℤ with unit equal to one full turn. A free S¹-action is
//! kept as `ψ^t = g ∘ R_t ∘ g⁻¹`, so the group law and the period-one property
//! come from the lift arithmetic rather than from any approximation.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default comparison tolerance for circle distances.
pub const CIRCLE_TOL: f64 = 1e-9;

/// Minimal gap between consecutive PL nodes.
pub const NODE_GAP: f64 = 1e-12;

/// Reduces a real number to its canonical representative in `[0, 1)`.
pub fn wrap(v: f64) -> f64 {
    let r = v - v.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Circle distance `min(|a-b|, 1-|a-b|)` between two reals read mod 1.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = wrap(a - b);
    d.min(1.0 - d)
}

/// Point of ℝ/ℤ, always stored in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct CirclePoint(f64);

impl CirclePoint {
    pub fn new(value: f64) -> Self {
        Self(wrap(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn dist(self, other: CirclePoint) -> f64 {
        circle_dist(self.0, other.0)
    }

    /// Rigid rotation `R_a`.
    pub fn rotate(self, a: f64) -> Self {
        Self::new(self.0 + a)
    }
}

impl From<f64> for CirclePoint {
    fn from(v: f64) -> Self {
        CirclePoint::new(v)
    }
}

impl From<CirclePoint> for f64 {
    fn from(p: CirclePoint) -> f64 {
        p.0
    }
}

impl fmt::Display for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Greedy clustering of circle points into arcs of length at most
/// `diameter`; returns the arc midpoints in increasing order of the arc start.
///
/// Clustering starts after the largest gap so that a cluster straddling 0 is
/// not split in two.
pub fn cluster_points(points: &[CirclePoint], diameter: f64) -> Vec<CirclePoint> {
    if points.is_empty() {
        return Vec::new();
    }
    let mut v: Vec<f64> = points.iter().map(|p| p.value()).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let start = (0..n)
        .max_by(|&i, &j| {
            let gi = wrap(v[i] - v[(i + n - 1) % n]);
            let gj = wrap(v[j] - v[(j + n - 1) % n]);
            gi.total_cmp(&gj).then(j.cmp(&i))
        })
        .unwrap_or(0);
    let mut reps = Vec::new();
    let mut anchor = v[start];
    let mut span = 0.0;
    for k in 1..n {
        let x = v[(start + k) % n];
        let d = wrap(x - anchor);
        if d <= diameter {
            span = d;
        } else {
            reps.push(CirclePoint::new(anchor + span / 2.0));
            anchor = x;
            span = 0.0;
        }
    }
    reps.push(CirclePoint::new(anchor + span / 2.0));
    reps
}

/// Largest gap between consecutive points of a finite subset of the circle.
///
/// An empty set has gap 1 as does a single point.
pub fn max_circle_gap(points: &[CirclePoint]) -> f64 {
    if points.len() < 2 {
        return 1.0;
    }
    let mut v: Vec<f64> = points.iter().map(|p| p.value()).collect();
    v.sort_by(f64::total_cmp);
    let wrap_gap = 1.0 - v[v.len() - 1] + v[0];
    v.windows(2).map(|w| w[1] - w[0]).fold(wrap_gap, f64::max)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PlHomeoSpec {
    nodes: Vec<[f64; 2]>,
}

/// Orientation preserving PL homeomorphism of the circle, given by the nodes
/// of its lift over one period: `(u_0, v_0), …, (u_0 + 1, v_0 + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlHomeoSpec", into = "PlHomeoSpec")]
pub struct PlHomeo {
    nodes: Vec<(f64, f64)>,
}

impl TryFrom<PlHomeoSpec> for PlHomeo {
    type Error = Error;

    fn try_from(spec: PlHomeoSpec) -> Result<Self> {
        PlHomeo::new(spec.nodes.into_iter().map(|[u, v]| (u, v)).collect())
    }
}

impl From<PlHomeo> for PlHomeoSpec {
    fn from(h: PlHomeo) -> Self {
        PlHomeoSpec {
            nodes: h.nodes.into_iter().map(|(u, v)| [u, v]).collect(),
        }
    }
}

impl PlHomeo {
    /// Validates and normalizes the node list of one period of a lift.
    pub fn new(mut nodes: Vec<(f64, f64)>) -> Result<Self> {
        if nodes.iter().any(|(u, v)| !u.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidHomeo("non-finite node".into()));
        }
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        nodes.dedup_by(|b, a| (b.0 - a.0).abs() < NODE_GAP && (b.1 - a.1).abs() < NODE_GAP);
        if nodes.len() < 2 {
            return Err(Error::InvalidHomeo("need at least two nodes".into()));
        }
        for w in nodes.windows(2) {
            if w[1].0 - w[0].0 < NODE_GAP || w[1].1 - w[0].1 < NODE_GAP {
                return Err(Error::InvalidHomeo(format!(
                    "nodes {:?} and {:?} are not strictly increasing",
                    w[0], w[1]
                )));
            }
        }
        let (u0, v0) = nodes[0];
        let last = nodes.len() - 1;
        let (u1, v1) = nodes[last];
        if (u1 - u0 - 1.0).abs() > NODE_GAP || (v1 - v0 - 1.0).abs() > NODE_GAP {
            return Err(Error::InvalidHomeo(format!(
                "endpoints ({u0}, {v0}) and ({u1}, {v1}) do not span one period"
            )));
        }
        nodes[last] = (u0 + 1.0, v0 + 1.0);
        Ok(Self { nodes })
    }

    pub fn identity() -> Self {
        Self {
            nodes: vec![(0.0, 0.0), (1.0, 1.0)],
        }
    }

    /// Random PL homeomorphism fixing 0 with `breaks` interior nodes.
    ///
    /// Segment lengths are drawn from `[0.25, 1]` before normalization, which
    /// keeps every slope within `[1/4, 4]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, breaks: usize) -> Self {
        let cumulative = |rng: &mut R| {
            let w: Vec<f64> = (0..=breaks).map(|_| rng.gen_range(0.25..1.0)).collect();
            let total: f64 = w.iter().sum();
            let mut acc = 0.0;
            let mut out = vec![0.0];
            for wi in &w[..breaks] {
                acc += wi / total;
                out.push(acc);
            }
            out.push(1.0);
            out
        };
        let us = cumulative(rng);
        let vs = cumulative(rng);
        Self::new(us.into_iter().zip(vs).collect()).expect("random nodes are monotone")
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    /// True when the lift is a translation, i.e. the map is a rotation.
    pub fn is_translation(&self) -> bool {
        let (u0, v0) = self.nodes[0];
        self.nodes
            .iter()
            .all(|(u, v)| ((v - u) - (v0 - u0)).abs() < NODE_GAP)
    }

    fn eval_periodic(nodes: &[(f64, f64)], u: f64, swap: bool) -> f64 {
        let key = |n: &(f64, f64)| if swap { (n.1, n.0) } else { *n };
        let (a0, _) = key(&nodes[0]);
        let k = (u - a0).floor();
        let r = u - k;
        let idx = nodes
            .partition_point(|n| key(n).0 <= r)
            .clamp(1, nodes.len() - 1);
        let (a, b) = key(&nodes[idx - 1]);
        let (c, d) = key(&nodes[idx]);
        b + (d - b) * (r - a) / (c - a) + k
    }

    /// The lift `g̃: ℝ → ℝ` with `g̃(u + 1) = g̃(u) + 1`.
    pub fn lift(&self, u: f64) -> f64 {
        Self::eval_periodic(&self.nodes, u, false)
    }

    pub fn lift_inv(&self, v: f64) -> f64 {
        Self::eval_periodic(&self.nodes, v, true)
    }

    pub fn apply(&self, x: CirclePoint) -> CirclePoint {
        CirclePoint::new(self.lift(x.value()))
    }

    pub fn apply_inv(&self, x: CirclePoint) -> CirclePoint {
        CirclePoint::new(self.lift_inv(x.value()))
    }
}

/// Free S¹-action `ψ^t = g ∘ R_t ∘ g⁻¹` on the circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleAction {
    conjugator: PlHomeo,
}

impl CircleAction {
    pub fn new(conjugator: PlHomeo) -> Self {
        Self { conjugator }
    }

    pub fn rotation() -> Self {
        Self::new(PlHomeo::identity())
    }

    /// Seeded random non-rotation action.
    pub fn random_pl<R: Rng + ?Sized>(rng: &mut R, breaks: usize) -> Self {
        Self::new(PlHomeo::random(rng, breaks.max(1)))
    }

    pub fn conjugator(&self) -> &PlHomeo {
        &self.conjugator
    }

    pub fn is_rotation(&self) -> bool {
        self.conjugator.is_translation()
    }

    /// Lift `ψ̃^t(u) = g̃(g̃⁻¹(u) + t)`.
    ///
    /// The integer part of `t` is applied as a deck translation, so
    /// `ψ̃^{t+1} = ψ̃^t + 1` holds without rounding.
    pub fn lift_map(&self, t: f64, u: f64) -> f64 {
        let whole = t.floor();
        let frac = t - whole;
        if frac == 0.0 {
            return u + whole;
        }
        self.conjugator.lift(self.conjugator.lift_inv(u) + frac) + whole
    }

    pub fn act(&self, t: f64, x: CirclePoint) -> CirclePoint {
        if t == t.floor() {
            return x;
        }
        CirclePoint::new(self.lift_map(t, x.value()))
    }

    /// Oscillation `max_u(ψ̃^t(u) - u) - min_u(ψ̃^t(u) - u)` of the lift
    /// displacement, evaluated on the breakpoints of the composed PL lift.
    pub fn lift_displacement_osc(&self, t: f64) -> f64 {
        let frac = t - t.floor();
        if frac == 0.0 {
            return 0.0;
        }
        let g = &self.conjugator;
        let candidates = g
            .nodes()
            .iter()
            .flat_map(|&(u, v)| [v, g.lift(u - frac)]);
        let (lo, hi) = candidates.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), u| {
            let d = self.lift_map(frac, u) - u;
            (lo.min(d), hi.max(d))
        });
        hi - lo
    }

    /// Sampled `sup d(ψ^t(x + c), ψ^t(x) + c)` together with the worst `(t, x)`.
    pub fn rotation_commutator_residual(&self, c: f64) -> (f64, f64, f64) {
        const T_SAMPLES: usize = 64;
        const X_SAMPLES: usize = 256;
        let mut worst = (0.0, 0.0, 0.0);
        for i in 0..T_SAMPLES {
            let t = i as f64 / T_SAMPLES as f64;
            for j in 0..X_SAMPLES {
                let x = CirclePoint::new(j as f64 / X_SAMPLES as f64);
                let lhs = self.act(t, x.rotate(c));
                let rhs = self.act(t, x).rotate(c);
                let r = lhs.dist(rhs);
                if r > worst.0 {
                    worst = (r, t, x.value());
                }
            }
        }
        worst
    }

    /// Whether `ψ^t ∘ R_c = R_c ∘ ψ^t` on the sample grid, within `tol`.
    pub fn commutes_with_rotation(&self, c: CirclePoint, tol: f64) -> bool {
        self.rotation_commutator_residual(c.value()).0 <= tol
    }
}
