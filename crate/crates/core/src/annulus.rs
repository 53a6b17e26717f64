//! The quotient annulus `A = B/⟨h⟩`.
//!
//! Interior points are stored in chart-0 coordinates `(x, y) = (π_0, p)`;
//! `π_1` is derived through the band gluing, so `π_0 - π_1 = f∘p (mod 1)` is a
//! checked identity rather than stored data. Boundary points carry the chart
//! angle of their own boundary circle only.

use std::fmt;
use std::fmt::Write;
use std::sync::Arc;

use rand::Rng;

use crate::band::{transition, BandPoint, Chart};
use crate::circle::{circle_dist, wrap, CircleAction, CirclePoint};
use crate::error::{Error, Result};
use crate::examples::GluedAction;
use crate::profile::{height_of, level_of, Profile};
use crate::report::{VerificationReport, Worst};
use crate::roots::bisect;
use crate::svg::Plot;

/// Initial brackets per circle for the horizontal-point search.
pub const HORIZONTAL_BRACKETS: usize = 512;

/// Bisection tolerance in `x` for the horizontal-point search.
pub const HORIZONTAL_XTOL: f64 = 1e-10;

/// Maximal `t`-step used when unwrapping `π_0 - π_1` along an orbit.
pub const UNWRAP_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnnulusPoint {
    Interior { x: CirclePoint, y: f64 },
    Boundary { side: Chart, x: CirclePoint },
}

impl AnnulusPoint {
    pub fn interior(x: f64, y: f64) -> Self {
        AnnulusPoint::Interior {
            x: CirclePoint::new(x),
            y,
        }
    }

    pub fn boundary(side: Chart, x: f64) -> Self {
        AnnulusPoint::Boundary {
            side,
            x: CirclePoint::new(x),
        }
    }

    /// The level `p(ξ)`; zero on both boundary circles.
    pub fn level(&self) -> f64 {
        match *self {
            AnnulusPoint::Interior { y, .. } => y,
            AnnulusPoint::Boundary { .. } => 0.0,
        }
    }

    /// `max(d(x, x'), |y - y'|)`; infinite between points on different pieces.
    pub fn distance(&self, other: &AnnulusPoint) -> f64 {
        match (*self, *other) {
            (AnnulusPoint::Interior { x: a, y: b }, AnnulusPoint::Interior { x: c, y: d }) => {
                a.dist(c).max((b - d).abs())
            }
            (AnnulusPoint::Boundary { side: s, x: a }, AnnulusPoint::Boundary { side: t, x: c })
                if s == t =>
            {
                a.dist(c)
            }
            _ => f64::INFINITY,
        }
    }
}

/// `(p, π_0, π_1)`; a boundary point exposes only its own angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projections {
    pub p: f64,
    pub pi0: Option<CirclePoint>,
    pub pi1: Option<CirclePoint>,
}

pub fn projections(pt: &AnnulusPoint, profile: &Profile) -> Result<Projections> {
    match *pt {
        AnnulusPoint::Interior { x, y } => {
            let chart1 = transition(profile, BandPoint::new(Chart::Zero, x.value(), y))?;
            Ok(Projections {
                p: y,
                pi0: Some(x),
                pi1: Some(CirclePoint::new(chart1.x)),
            })
        }
        AnnulusPoint::Boundary { side: Chart::Zero, x } => Ok(Projections {
            p: 0.0,
            pi0: Some(x),
            pi1: None,
        }),
        AnnulusPoint::Boundary { side: Chart::One, x } => Ok(Projections {
            p: 0.0,
            pi0: None,
            pi1: Some(x),
        }),
    }
}

type InteriorFn = dyn Fn(f64, CirclePoint, f64) -> (CirclePoint, f64) + Send + Sync;

/// An action given by an arbitrary interior evaluator and two boundary
/// circle actions. Nothing forces the pieces to fit together.
#[derive(Clone)]
pub struct CustomPair {
    interior: Arc<InteriorFn>,
    boundary: [CircleAction; 2],
}

impl fmt::Debug for CustomPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPair")
            .field("boundary", &self.boundary)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum ActionKind {
    HorizontalRotation,
    Glued(GluedAction),
    CustomPair(CustomPair),
}

/// An S¹-action on `A`, evaluable in chart-0 coordinates.
#[derive(Debug, Clone)]
pub struct AnnulusAction {
    kind: ActionKind,
    profile: Profile,
}

impl AnnulusAction {
    /// The action `{Φ^t}` of the realized flow, `(x, y) ↦ (x + t, y)`.
    pub fn horizontal_rotation(profile: Profile) -> Self {
        Self {
            kind: ActionKind::HorizontalRotation,
            profile,
        }
    }

    pub(crate) fn glued(glued: GluedAction, profile: Profile) -> Self {
        Self {
            kind: ActionKind::Glued(glued),
            profile,
        }
    }

    pub fn custom_pair<F>(profile: Profile, interior: F, psi0: CircleAction, psi1: CircleAction) -> Self
    where
        F: Fn(f64, CirclePoint, f64) -> (CirclePoint, f64) + Send + Sync + 'static,
    {
        Self {
            kind: ActionKind::CustomPair(CustomPair {
                interior: Arc::new(interior),
                boundary: [psi0, psi1],
            }),
            profile,
        }
    }

    /// Custom pair whose interior evaluator moves points along the vertical
    /// foliation by `ψ_0`, leaving `p` fixed.
    pub fn vertical_pair(profile: Profile, psi0: CircleAction, psi1: CircleAction) -> Self {
        let inner = psi0.clone();
        Self::custom_pair(profile, move |t, x, y| (inner.act(t, x), y), psi0, psi1)
    }

    pub fn kind(&self) -> &ActionKind {
        &self.kind
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// `φ^t(ξ)`.
    pub fn act_eval(&self, xi: &AnnulusPoint, t: f64) -> Result<AnnulusPoint> {
        if t == t.floor() {
            return Ok(*xi);
        }
        match *xi {
            AnnulusPoint::Boundary { side, x } => Ok(AnnulusPoint::Boundary {
                side,
                x: self.boundary_action(side).act(t, x),
            }),
            AnnulusPoint::Interior { x, y } => {
                self.profile.eval_f(y)?;
                let (x, y) = match &self.kind {
                    ActionKind::HorizontalRotation => (x.rotate(t), y),
                    ActionKind::Glued(g) => g.eval_interior(&self.profile, t, x, y)?,
                    ActionKind::CustomPair(c) => (c.interior)(t, x, y),
                };
                Ok(AnnulusPoint::Interior { x, y })
            }
        }
    }

    /// The action `φ_i^t` with `φ_i^t ∘ π_i = π_i ∘ φ^t` on `∂_i A`.
    pub fn boundary_action(&self, side: Chart) -> CircleAction {
        match &self.kind {
            ActionKind::HorizontalRotation => CircleAction::rotation(),
            ActionKind::Glued(g) => g.psi().clone(),
            ActionKind::CustomPair(c) => c.boundary[side.index() as usize].clone(),
        }
    }
}

fn angle_difference(a: &AnnulusAction, xi: &AnnulusPoint) -> Result<f64> {
    let pr = projections(xi, a.profile())?;
    match (pr.pi0, pr.pi1) {
        (Some(p0), Some(p1)) => Ok(wrap(p0.value() - p1.value())),
        _ => Err(boundary_error(xi, "delta")),
    }
}

fn boundary_error(xi: &AnnulusPoint, what: &'static str) -> Error {
    let boundary = match xi {
        AnnulusPoint::Boundary { side, .. } => side.index(),
        AnnulusPoint::Interior { .. } => 0,
    };
    Error::BoundaryPoint { boundary, what }
}

/// `δ(ξ) = (π_0 φ^s ξ - π_1 φ^s ξ) - (π_0 ξ - π_1 ξ)` as a real number, the
/// lift of `π_0 - π_1` being followed continuously along the orbit segment.
pub fn delta(a: &AnnulusAction, xi: &AnnulusPoint, step: f64) -> Result<f64> {
    if let AnnulusPoint::Boundary { .. } = xi {
        return Err(boundary_error(xi, "delta"));
    }
    let pieces = ((step.abs() / UNWRAP_STEP).ceil() as usize).max(1);
    let mut prev = angle_difference(a, xi)?;
    let mut total = 0.0;
    for k in 1..=pieces {
        let t = step * k as f64 / pieces as f64;
        let image = a.act_eval(xi, t)?;
        let cur = angle_difference(a, &image)?;
        let mut inc = cur - prev;
        inc -= inc.round();
        total += inc;
        prev = cur;
    }
    Ok(total)
}

/// Points `x` on the circle `p⁻¹(y)` with `p(φ^step(x, y)) = y`.
///
/// Samples `HORIZONTAL_BRACKETS` equally spaced angles, keeps samples where
/// the level is preserved to within `1e-12 · y`, and bisects every sign change
/// of `p∘φ^step - y` to `HORIZONTAL_XTOL`.
pub fn find_horizontal_points(a: &AnnulusAction, y: f64, step: f64) -> Result<Vec<CirclePoint>> {
    a.profile().eval_f(y)?;
    let level_gap = |x: f64| -> f64 {
        match a.act_eval(&AnnulusPoint::interior(x, y), step) {
            Ok(AnnulusPoint::Interior { y: y1, .. }) => y1 - y,
            _ => f64::NAN,
        }
    };
    let h = 1.0 / HORIZONTAL_BRACKETS as f64;
    let values: Vec<f64> = (0..HORIZONTAL_BRACKETS)
        .map(|j| level_gap(j as f64 * h))
        .collect();
    let zero = 1e-12 * y;
    let mut roots = Vec::new();
    for j in 0..HORIZONTAL_BRACKETS {
        let (g0, g1) = (values[j], values[(j + 1) % HORIZONTAL_BRACKETS]);
        let x0 = j as f64 * h;
        if g0.abs() <= zero {
            roots.push(x0);
        } else if g1.abs() > zero && g0.signum() != g1.signum() {
            if let Some(r) = bisect(level_gap, x0, x0 + h, HORIZONTAL_XTOL) {
                roots.push(r);
            }
        }
    }
    if roots.is_empty() {
        let min_residual = values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        return Err(Error::NoHorizontalPoint { y, min_residual });
    }
    let mut pts: Vec<CirclePoint> = roots.into_iter().map(CirclePoint::new).collect();
    pts.sort_by(|a, b| a.value().total_cmp(&b.value()));
    pts.dedup_by(|b, a| b.dist(*a) < 1e-9);
    Ok(pts)
}

/// Outcome of a commutation sweep `d(R_α φ_1^t x, φ_0^t R_α x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutationReport {
    pub residual: f64,
    pub worst_t: f64,
    pub worst_x: f64,
    pub alpha: f64,
}

impl CommutationReport {
    pub fn to_report(&self, tol: f64) -> VerificationReport {
        VerificationReport::new(
            "commutation",
            self.residual,
            [("t", self.worst_t), ("x", self.worst_x), ("alpha", self.alpha)],
            tol,
        )
    }
}

/// Sweeps `t ∈ {i/samples} ∪ {1, 1/2, 1/4}` and `x ∈ {j/samples}`.
pub fn verify_commutation(a: &AnnulusAction, alpha: CirclePoint, samples: usize) -> CommutationReport {
    let samples = samples.max(1);
    let phi0 = a.boundary_action(Chart::Zero);
    let phi1 = a.boundary_action(Chart::One);
    let times = (0..samples)
        .map(|i| i as f64 / samples as f64)
        .chain([1.0, 0.5, 0.25]);
    let mut report = CommutationReport {
        residual: 0.0,
        worst_t: 0.0,
        worst_x: 0.0,
        alpha: alpha.value(),
    };
    for t in times {
        for j in 0..samples {
            let x = CirclePoint::new(j as f64 / samples as f64);
            let lhs = phi1.act(t, x).rotate(alpha.value());
            let rhs = phi0.act(t, x.rotate(alpha.value()));
            let r = lhs.dist(rhs);
            if r > report.residual {
                report.residual = r;
                report.worst_t = t;
                report.worst_x = x.value();
            }
        }
    }
    report
}

/// `J_i = R_{α_i}⁻¹ ∘ φ_i^{1/2} ∘ R_{α_i}` evaluated at `x`.
pub fn j_map(a: &AnnulusAction, side: Chart, alpha_i: f64, x: CirclePoint) -> CirclePoint {
    a.boundary_action(side)
        .act(0.5, x.rotate(alpha_i))
        .rotate(-alpha_i)
}

/// Sampled `max d(J_i(J_i(x)), x)`.
pub fn involution_residual(a: &AnnulusAction, side: Chart, alpha_i: f64, samples: usize) -> f64 {
    (0..samples.max(1))
        .map(|j| {
            let x = CirclePoint::new(j as f64 / samples.max(1) as f64);
            j_map(a, side, alpha_i, j_map(a, side, alpha_i, x)).dist(x)
        })
        .fold(0.0, f64::max)
}

fn random_interior<R: Rng + ?Sized>(p: &Profile, rng: &mut R) -> AnnulusPoint {
    let u = rng.gen_range(0.0..=p.u_max().min(1000.0));
    AnnulusPoint::interior(rng.gen_range(0.0..1.0), height_of(u).max(p.y_min()))
}

/// Residual of `π_0 - π_1 = f∘p (mod 1)` over random interior points.
pub fn pi_identity_sweep<R: Rng + ?Sized>(p: &Profile, samples: usize, rng: &mut R, tol: f64) -> Result<VerificationReport> {
    let mut worst = Worst::default();
    for _ in 0..samples {
        let xi = random_interior(p, rng);
        let pr = projections(&xi, p)?;
        let (pi0, pi1) = (pr.pi0.unwrap(), pr.pi1.unwrap());
        let f = p.eval_f(pr.p)?;
        let r = circle_dist(pi0.value() - pi1.value(), f);
        worst.offer(r, &[("x", pi0.value()), ("y", pr.p)]);
    }
    Ok(worst.into_report("pi-identity", tol))
}

/// Residual of `φ^s φ^t ξ = φ^{s+t} ξ` over random `(s, t, ξ)` with
/// `s, t ∈ [-1, 1]`, plus period one on the same points.
pub fn group_law_sweep<R: Rng + ?Sized>(a: &AnnulusAction, triples: usize, rng: &mut R, tol: f64) -> Result<VerificationReport> {
    let mut worst = Worst::default();
    for _ in 0..triples {
        let xi = random_interior(a.profile(), rng);
        let s = rng.gen_range(-1.0..1.0);
        let t = rng.gen_range(-1.0..1.0);
        let lhs = a.act_eval(&a.act_eval(&xi, t)?, s)?;
        let rhs = a.act_eval(&xi, s + t)?;
        let near_one = a.act_eval(&a.act_eval(&xi, t)?, 1.0 - t)?;
        let r = lhs.distance(&rhs).max(near_one.distance(&xi));
        worst.offer(r, &[("s", s), ("t", t), ("x", pi0_of(&xi)), ("y", xi.level())]);
    }
    Ok(worst.into_report("group-law", tol))
}

fn pi0_of(xi: &AnnulusPoint) -> f64 {
    match *xi {
        AnnulusPoint::Interior { x, .. } | AnnulusPoint::Boundary { x, .. } => x.value(),
    }
}

/// Level-coordinate interval of `V_n`, the component of
/// `W_n = {f∘p > f(y_n) - σ/3}` that contains `p⁻¹(y_n)`.
pub fn vn_interval(p: &Profile, u_peak: f64, sigma: f64) -> (f64, f64) {
    let cut = p.f_at_level(u_peak) - sigma / 3.0;
    let nodes = p.nodes();
    let i = nodes.partition_point(|n| n.u < u_peak);
    let mut lo = 0.0;
    for j in (0..i).rev() {
        if nodes[j].f <= cut {
            let (a, b) = (nodes[j], nodes[j + 1]);
            lo = a.u + (cut - a.f) / (b.f - a.f) * (b.u - a.u);
            break;
        }
    }
    let mut hi = p.u_max();
    for j in (i + 1)..nodes.len() {
        if nodes[j].f <= cut {
            let (a, b) = (nodes[j - 1], nodes[j]);
            hi = a.u + (cut - a.f) / (b.f - a.f) * (b.u - a.u);
            break;
        }
    }
    (lo, hi)
}

/// Where `φ^{1/2}` sends the circle of a peak level, relative to `V_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VnReport {
    pub n: usize,
    pub samples: usize,
    /// `V_n` in level coordinates.
    pub vn_levels: (f64, f64),
    /// `min (u(y_n') - u(p φ^{1/2} ξ_n(x)))`; positive means strictly above `y_n'`.
    pub min_margin_to_trough: f64,
    pub all_in_vn: bool,
    pub all_above_trough: bool,
}

/// Images `φ^{1/2}(ξ_n(x))` of the points `ξ_n(x) = ξ_n(0) + x` on `p⁻¹(y_n)`,
/// where `ξ_n(0)` is the first horizontally going point found there.
pub fn check_vn(a: &AnnulusAction, n: usize, samples: usize) -> Result<VnReport> {
    let p = a.profile();
    let seq = p.extract_osc_seq(n)?;
    let pair = seq.pairs[n - 1];
    let sigma = p.sigma().value();
    let vn = vn_interval(p, pair.u_peak, sigma);
    let y_n = pair.y_peak();
    let start = find_horizontal_points(a, y_n, 0.5)?[0];
    let mut margin = f64::INFINITY;
    let mut all_in = true;
    for j in 0..samples.max(1) {
        let x = start.value() + j as f64 / samples.max(1) as f64;
        let image = a.act_eval(&AnnulusPoint::interior(x, y_n), 0.5)?;
        let AnnulusPoint::Interior { y, .. } = image else {
            return Err(Error::Structural("half-turn image left the interior".into()));
        };
        let u = level_of(y);
        margin = margin.min(pair.u_trough - u);
        all_in &= u > vn.0 && u < vn.1;
    }
    Ok(VnReport {
        n,
        samples,
        vn_levels: vn,
        min_margin_to_trough: margin,
        all_in_vn: all_in,
        all_above_trough: margin > 0.0,
    })
}

/// Plot window of [`foliation_svg`]: `x` across, `-u` upwards.
pub fn foliation_plot(p: &Profile) -> Plot {
    Plot::new((0.0, 1.0), (-p.u_max(), 0.0))
}

/// Leaves `π_1 = c`, i.e. `x = f(y) + c (mod 1)`, drawn in `(x, -log2(1/y))`
/// together with the grid circles `p⁻¹(y_n)` where they become tangent to the
/// vertical foliation.
pub fn foliation_svg(p: &Profile, leaves: usize, peak_levels: &[f64]) -> String {
    let mut plot = foliation_plot(p);
    let steps = 400 * p.u_max().ceil().max(1.0) as usize / 4;
    let steps = steps.clamp(200, 20_000);
    for &u in peak_levels {
        plot.hline(-u, "firebrick");
    }
    for c in 0..leaves.max(1) {
        let offset = c as f64 / leaves.max(1) as f64;
        let mut piece: Vec<(f64, f64)> = Vec::new();
        let mut last_x: Option<f64> = None;
        for k in 0..=steps {
            let u = p.u_max() * k as f64 / steps as f64;
            let x = wrap(p.f_at_level(u) + offset);
            if let Some(prev) = last_x {
                if (x - prev).abs() > 0.5 {
                    plot.polyline(&piece, "steelblue", 0.8);
                    piece.clear();
                }
            }
            piece.push((x, -u));
            last_x = Some(x);
        }
        plot.polyline(&piece, "steelblue", 0.8);
    }
    let mut title = String::from("pi_1 leaves x = f(y) + c");
    let _ = write!(title, " ({leaves} leaves)");
    plot.finish(&title)
}
