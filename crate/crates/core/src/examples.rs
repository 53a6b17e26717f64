//! Glued actions realizing prescribed boundary actions, and the rigidity
//! analysis of their obstruction.

use serde::Serialize;

use crate::annulus::AnnulusAction;
use crate::circle::{cluster_points, max_circle_gap, CircleAction, CirclePoint};
use crate::error::{Error, Result};
use crate::profile::{height_of, level_of, Family, Profile};

/// Overshoot of `Δ` beyond a block's `f`-range that is treated as rounding.
pub const DELTA_SLACK: f64 = 1e-12;

/// Distance from an integer below which a block endpoint counts as integral.
pub const INTEGER_TOL: f64 = 1e-9;

pub fn example1_profile(depth: usize) -> Result<Profile> {
    Profile::example1(depth)
}

pub fn example2_profile(beta: f64, depth: usize) -> Result<Profile> {
    Profile::example2(beta, depth)
}

/// A maximal level interval on which `f` is strictly monotone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlueBlock {
    /// Index of the first profile node of the block.
    pub first: usize,
    /// Index of the last profile node of the block.
    pub last: usize,
    pub u_lo: f64,
    pub u_hi: f64,
    pub f_lo_end: f64,
    pub f_hi_end: f64,
    pub increasing: bool,
}

impl GlueBlock {
    pub fn y_lo(&self) -> f64 {
        height_of(self.u_hi)
    }

    pub fn y_hi(&self) -> f64 {
        height_of(self.u_lo)
    }

    /// `(min f, max f)` on the block.
    pub fn f_range(&self) -> (f64, f64) {
        let (a, b) = (self.f_lo_end, self.f_hi_end);
        (a.min(b), a.max(b))
    }
}

/// Splits the profile at its turning nodes.
pub fn glue_blocks(p: &Profile) -> Result<Vec<GlueBlock>> {
    let nodes = p.nodes();
    let mut blocks = Vec::new();
    let mut first = 0;
    let mut dir: Option<bool> = None;
    for i in 1..nodes.len() {
        let step = nodes[i].f - nodes[i - 1].f;
        if step == 0.0 {
            return Err(Error::FlatSegment { u: nodes[i - 1].u });
        }
        let up = step > 0.0;
        match dir {
            Some(d) if d != up => {
                blocks.push(block(p, first, i - 1, d));
                first = i - 1;
            }
            _ => {}
        }
        dir = Some(up);
    }
    if let Some(d) = dir {
        blocks.push(block(p, first, nodes.len() - 1, d));
    }
    Ok(blocks)
}

fn block(p: &Profile, first: usize, last: usize, increasing: bool) -> GlueBlock {
    let nodes = p.nodes();
    GlueBlock {
        first,
        last,
        u_lo: nodes[first].u,
        u_hi: nodes[last].u,
        f_lo_end: nodes[first].f,
        f_hi_end: nodes[last].f,
        increasing,
    }
}

/// Solution of `f(u') = Δ` inside one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSolve {
    pub u: f64,
    /// Set when `Δ` fell outside the block's range by at most [`DELTA_SLACK`]
    /// and was moved onto the endpoint.
    pub clamped: bool,
}

/// Interior data of a glued action: the boundary action `ψ` and the blocks of
/// the profile.
#[derive(Debug, Clone, PartialEq)]
pub struct GluedAction {
    psi: CircleAction,
    blocks: Vec<GlueBlock>,
}

impl GluedAction {
    pub fn psi(&self) -> &CircleAction {
        &self.psi
    }

    pub fn blocks(&self) -> &[GlueBlock] {
        &self.blocks
    }

    /// The block containing level `u`; endpoints belong to the upper block.
    pub fn block_of(&self, u: f64) -> &GlueBlock {
        let i = self.blocks.partition_point(|b| b.u_hi < u);
        &self.blocks[i.min(self.blocks.len() - 1)]
    }

    /// `Δ = ψ̃^t(x̃) - ψ̃^t(x̃ - s)`.
    pub fn delta(&self, t: f64, x: f64, s: f64) -> f64 {
        self.psi.lift_map(t, x) - self.psi.lift_map(t, x - s)
    }

    /// Inverts `f` on `block` at the value `delta`.
    pub fn delta_solve(&self, p: &Profile, block: &GlueBlock, delta: f64) -> Result<DeltaSolve> {
        let (lo, hi) = block.f_range();
        if delta < lo - DELTA_SLACK || delta > hi + DELTA_SLACK || delta.is_nan() {
            return Err(Error::Structural(format!(
                "delta {delta} outside block range [{lo}, {hi}] at u in [{}, {}]",
                block.u_lo, block.u_hi
            )));
        }
        let clamped = delta < lo || delta > hi;
        let target = delta.clamp(lo, hi);
        let nodes = &p.nodes()[block.first..=block.last];
        // Index of the first node at or past the target in block order.
        let k = if block.increasing {
            nodes.partition_point(|n| n.f < target)
        } else {
            nodes.partition_point(|n| n.f > target)
        };
        let u = if k == 0 {
            nodes[0].u
        } else if k >= nodes.len() {
            nodes[nodes.len() - 1].u
        } else if nodes[k].f == target {
            nodes[k].u
        } else {
            let (a, b) = (nodes[k - 1], nodes[k]);
            a.u + (target - a.f) / (b.f - a.f) * (b.u - a.u)
        };
        Ok(DeltaSolve { u, clamped })
    }

    /// `φ^t(x, y)` for an interior point.
    pub fn eval_interior(&self, p: &Profile, t: f64, x: CirclePoint, y: f64) -> Result<(CirclePoint, f64)> {
        let u = level_of(y);
        let f = p.f_at_level(u);
        let block = self.block_of(u);
        let d = self.delta(t, x.value(), f);
        let solved = self.delta_solve(p, block, d)?;
        let y1 = if solved.u == u { y } else { height_of(solved.u) };
        Ok((self.psi.act(t, x), y1))
    }
}

/// Integer check on block endpoints; returns the first offending endpoint.
fn first_violation(p: &Profile, blocks: &[GlueBlock]) -> Option<(f64, f64)> {
    blocks
        .iter()
        .flat_map(|b| [(b.u_lo, b.f_lo_end), (b.u_hi, b.f_hi_end)])
        .find(|&(_, f)| (f - f.round()).abs() > INTEGER_TOL)
        .map(|(u, f)| (height_of(u).max(p.y_min()), f))
}

/// Builds the glued action with both boundary actions equal to `ψ`.
pub fn build_example1_action(psi: CircleAction, p: Profile) -> Result<AnnulusAction> {
    let blocks = glue_blocks(&p)?;
    if let Some((y, value)) = first_violation(&p, &blocks) {
        return Err(Error::GlueConstraintViolation {
            y,
            value,
            constraint: CirclePoint::new(value),
        });
    }
    Ok(AnnulusAction::glued(GluedAction { psi, blocks }, p))
}

/// `{f(y_n) mod 1, f(y_n') mod 1 : n ≤ N}`.
pub fn glue_constraints(p: &Profile, count: usize) -> Result<Vec<CirclePoint>> {
    if count > p.depth() {
        return Err(Error::InsufficientDepth {
            requested: count,
            available: p.depth(),
        });
    }
    let values: Vec<f64> = match p.family() {
        Family::Monotone => Vec::new(),
        Family::Example1 | Family::Example2 { .. } => (1..=count)
            .filter_map(|n| p.generator_pair(n))
            .flat_map(|g| [g.f_peak, g.f_trough])
            .collect(),
        Family::Custom => match p.extract_osc_seq(count) {
            Ok(seq) => seq.pairs.iter().flat_map(|q| [q.f_peak, q.f_trough]).collect(),
            Err(Error::StandardProfile) => Vec::new(),
            Err(e) => return Err(e),
        },
    };
    let mut out: Vec<CirclePoint> = values.into_iter().map(CirclePoint::new).collect();
    out.sort_by(|a, b| a.value().total_cmp(&b.value()));
    out.dedup_by(|b, a| b.dist(*a) < INTEGER_TOL);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ForcedToRotations,
    RotationConjugate,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::ForcedToRotations => "forced-to-rotations",
            Verdict::RotationConjugate => "rotation-conjugate",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidityReport {
    pub constraints: Vec<CirclePoint>,
    pub max_gap: f64,
    pub alpha_clusters: Vec<CirclePoint>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<CirclePoint>,
    pub resolution: f64,
    pub count: usize,
}

impl RigidityReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn rigidity_report(p: &Profile, count: usize, resolution: f64) -> Result<RigidityReport> {
    if p.sigma().is_standard() {
        return Err(Error::StandardProfile);
    }
    let constraints = glue_constraints(p, count)?;
    let alpha_clusters = p.alpha_accumulation(count, resolution)?;
    let mut all: Vec<CirclePoint> = constraints.iter().chain(&alpha_clusters).copied().collect();
    all.sort_by(|a, b| a.value().total_cmp(&b.value()));
    let max_gap = max_circle_gap(&all);
    let single = cluster_points(&all, resolution);
    let (verdict, alpha) = if max_gap < resolution {
        (Verdict::ForcedToRotations, None)
    } else if single.len() == 1 {
        (Verdict::RotationConjugate, Some(single[0]))
    } else {
        (Verdict::Inconclusive, None)
    };
    Ok(RigidityReport {
        constraints,
        max_gap,
        alpha_clusters,
        verdict,
        alpha,
        resolution,
        count,
    })
}
