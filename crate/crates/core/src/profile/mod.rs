//! Transit-time profiles `f` together with the oscillation functional
//! `f*(y) = max(f|[y,1]) - f(y)`, the invariant `σ(f) = limsup_{y→0} f*(y)`,
//! oscillation sequences and their accumulation data.
//!
//! Profiles are piecewise linear in the level coordinate `u = log2(1/y)`.
//! On the default grid `y_n = 2^(1-2n)`, `y_n' = 2^(-2n)` every node sits at
//! an integer `u`, so node arithmetic is exact in floating point and deep
//! levels stay representable long after `y` itself would underflow.

mod witness;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circle::{cluster_points, CirclePoint};
use crate::error::{Error, Result};

pub use witness::{apply_witness, local_identity_threshold, WitnessH, WitnessK};

/// Relative tolerance below which two numeric σ estimates count as equal.
pub const SIGMA_CONVERGENCE_TOL: f64 = 1e-9;

/// Values of σ at or below this are treated as zero (standard profile).
pub const SIGMA_ZERO_TOL: f64 = 1e-12;

/// Level coordinate `u = log2(1/y)`.
pub fn level_of(y: f64) -> f64 {
    -y.log2()
}

/// Inverse of [`level_of`].
pub fn height_of(u: f64) -> f64 {
    (-u).exp2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Monotone,
    Example1,
    Example2 { beta: f64 },
    Custom,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Monotone => "monotone",
            Family::Example1 => "example1",
            Family::Example2 { .. } => "example2",
            Family::Custom => "custom",
        }
    }
}

/// PL node `(u, f(u))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub u: f64,
    pub f: f64,
}

impl Node {
    pub fn y(&self) -> f64 {
        height_of(self.u)
    }
}

/// Generator values at the `n`-th grid pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorPair {
    pub n: usize,
    pub u_peak: f64,
    pub u_trough: f64,
    pub f_peak: f64,
    pub f_trough: f64,
}

/// A transit-time function `f ∈ E`, restricted to `[y_min, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    family: Family,
    f0: f64,
    depth: usize,
    nodes: Vec<Node>,
    prefix_max: Vec<f64>,
}

/// `σ(f)`, either from the block generator or estimated from tail nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Sigma {
    Exact {
        value: f64,
    },
    /// Tail estimate: `hi` is the max of `f*` over nodes below half the
    /// depth, `lo` the same max below three quarters of the depth.
    Estimate {
        value: f64,
        lo: f64,
        hi: f64,
        converged: bool,
    },
    Unbounded,
}

impl Sigma {
    pub fn value(&self) -> f64 {
        match *self {
            Sigma::Exact { value } | Sigma::Estimate { value, .. } => value,
            Sigma::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_standard(&self) -> bool {
        self.value() <= SIGMA_ZERO_TOL
    }

    /// True for interval estimates and the infinity flag.
    pub fn is_flagged(&self) -> bool {
        match self {
            Sigma::Exact { .. } => false,
            Sigma::Estimate { converged, .. } => !converged,
            Sigma::Unbounded => true,
        }
    }
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Sigma::Exact { value } => write!(f, "{value}"),
            Sigma::Estimate {
                value,
                converged: true,
                ..
            } => write!(f, "{value}"),
            Sigma::Estimate { lo, hi, .. } => write!(f, "[{lo}, {hi}] (not converged)"),
            Sigma::Unbounded => write!(f, "inf"),
        }
    }
}

/// `β = p/q` detected with a small denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RationalBeta {
    pub p: i64,
    pub q: i64,
}

impl Profile {
    /// `f(y) = f0 + log2(1/y)`, a standard profile.
    pub fn monotone(depth: usize) -> Result<Self> {
        Self::from_family(Family::Monotone, 0.0, depth)
    }

    /// `f(y_n) = n`, `f(y_n') = n - 1`.
    pub fn example1(depth: usize) -> Result<Self> {
        Self::from_family(Family::Example1, 0.0, depth)
    }

    /// `f(y_n) = nβ`, `f(y_n') = nβ - 1`.
    pub fn example2(beta: f64, depth: usize) -> Result<Self> {
        Self::from_family(Family::Example2 { beta }, 0.0, depth)
    }

    pub fn from_family(family: Family, f0: f64, depth: usize) -> Result<Self> {
        if depth < 1 {
            return Err(Error::InvalidProfile("depth must be at least 1".into()));
        }
        if !f0.is_finite() {
            return Err(Error::InvalidProfile("anchor f0 must be finite".into()));
        }
        match family {
            Family::Custom => {
                return Err(Error::InvalidProfile(
                    "custom profiles are built from explicit nodes".into(),
                ))
            }
            Family::Example2 { beta } if !(beta > 0.0 && beta < 1.0) => {
                return Err(Error::OutOfRange {
                    what: "beta",
                    value: beta,
                    lo: 0.0,
                    hi: 1.0,
                })
            }
            _ => {}
        }
        let mut nodes = Vec::with_capacity(2 * depth + 1);
        nodes.push(Node { u: 0.0, f: f0 });
        for n in 1..=depth {
            let g = generator(family, f0, n).expect("family has a generator");
            nodes.push(Node {
                u: g.u_peak,
                f: g.f_peak,
            });
            nodes.push(Node {
                u: g.u_trough,
                f: g.f_trough,
            });
        }
        Ok(Self::assemble(family, depth, nodes))
    }

    /// Custom profile from `(y, f(y))` pairs, `y` strictly decreasing from 1.
    pub fn custom(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidProfile("need at least two nodes".into()));
        }
        if points[0].0 != 1.0 {
            return Err(Error::InvalidProfile(format!(
                "first node must sit at y = 1, got {}",
                points[0].0
            )));
        }
        let mut nodes = Vec::with_capacity(points.len());
        for &(y, f) in points {
            if !(y > 0.0 && y <= 1.0) || !f.is_finite() {
                return Err(Error::InvalidProfile(format!("bad node ({y}, {f})")));
            }
            nodes.push(Node { u: level_of(y), f });
        }
        Self::from_level_nodes(nodes)
    }

    /// Custom profile from nodes already in level coordinates.
    pub fn from_level_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.len() < 2 || nodes[0].u != 0.0 {
            return Err(Error::InvalidProfile(
                "need at least two nodes, the first at u = 0".into(),
            ));
        }
        for w in nodes.windows(2) {
            if !(w[1].u > w[0].u) {
                return Err(Error::InvalidProfile(format!(
                    "levels must strictly decrease: y = {} then y = {}",
                    w[0].y(),
                    w[1].y()
                )));
            }
        }
        if nodes.iter().any(|n| !n.f.is_finite() || !n.u.is_finite()) {
            return Err(Error::InvalidProfile("non-finite node".into()));
        }
        let depth = ((nodes[nodes.len() - 1].u / 2.0).floor() as usize).max(1);
        Ok(Self::assemble(Family::Custom, depth, nodes))
    }

    fn assemble(family: Family, depth: usize, nodes: Vec<Node>) -> Self {
        let prefix_max = nodes
            .iter()
            .scan(f64::NEG_INFINITY, |m, n| {
                *m = m.max(n.f);
                Some(*m)
            })
            .collect();
        Self {
            family,
            f0: nodes[0].f,
            depth,
            nodes,
            prefix_max,
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Deepest level coordinate of the domain.
    pub fn u_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].u
    }

    /// Smallest `y` in the domain (may underflow to 0 at large depth).
    pub fn y_min(&self) -> f64 {
        height_of(self.u_max())
    }

    /// Whether the running maximum of `f` still increases over the deepest
    /// half of the domain, the finite-data stand-in for `f → ∞`.
    pub fn appears_divergent(&self) -> bool {
        let half = self.u_max() / 2.0;
        let idx = self.nodes.partition_point(|n| n.u < half).max(1);
        self.prefix_max[self.prefix_max.len() - 1] > self.prefix_max[idx - 1]
    }

    /// Grid pair `n` of a generated family; `None` for custom profiles or
    /// `n` outside `1..=depth`.
    pub fn generator_pair(&self, n: usize) -> Option<GeneratorPair> {
        if n == 0 || n > self.depth {
            return None;
        }
        generator(self.family, self.f0, n)
    }

    /// Detects `β = p/q` with `q ≤ 16` for example-2 profiles.
    pub fn beta_warning(&self) -> Option<RationalBeta> {
        let Family::Example2 { beta } = self.family else {
            return None;
        };
        (1..=16i64).find_map(|q| {
            let p = (q as f64 * beta).round();
            ((q as f64 * beta - p).abs() < 1e-9).then_some(RationalBeta { p: p as i64, q })
        })
    }

    fn check_level(&self, u: f64) -> Result<()> {
        if u.is_nan() || u < 0.0 || u > self.u_max() {
            return Err(Error::OutOfRange {
                what: "y",
                value: height_of(u),
                lo: self.y_min(),
                hi: 1.0,
            });
        }
        Ok(())
    }

    fn check_height(&self, y: f64) -> Result<f64> {
        if !(y > 0.0 && y <= 1.0) {
            return Err(Error::OutOfRange {
                what: "y",
                value: y,
                lo: self.y_min(),
                hi: 1.0,
            });
        }
        let u = level_of(y);
        self.check_level(u)?;
        Ok(u)
    }

    /// Index of the segment `[nodes[i-1], nodes[i]]` containing `u`.
    fn segment(&self, u: f64) -> usize {
        self.nodes
            .partition_point(|n| n.u <= u)
            .clamp(1, self.nodes.len() - 1)
    }

    fn interp(&self, i: usize, u: f64) -> f64 {
        let (a, b) = (self.nodes[i - 1], self.nodes[i]);
        if u == a.u {
            return a.f;
        }
        if u == b.u {
            return b.f;
        }
        a.f + (b.f - a.f) * (u - a.u) / (b.u - a.u)
    }

    pub fn eval_f(&self, y: f64) -> Result<f64> {
        let u = self.check_height(y)?;
        Ok(self.interp(self.segment(u), u))
    }

    pub fn eval_f_level(&self, u: f64) -> Result<f64> {
        self.check_level(u)?;
        Ok(self.interp(self.segment(u), u))
    }

    /// `f` at a level the caller has already range-checked; clamps to the domain.
    pub(crate) fn f_at_level(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, self.u_max());
        self.interp(self.segment(u), u)
    }

    pub fn eval_fstar(&self, y: f64) -> Result<f64> {
        let u = self.check_height(y)?;
        Ok(self.fstar_at_level(u))
    }

    pub fn eval_fstar_level(&self, u: f64) -> Result<f64> {
        self.check_level(u)?;
        Ok(self.fstar_at_level(u))
    }

    fn fstar_at_level(&self, u: f64) -> f64 {
        let i = self.segment(u);
        let fu = self.interp(i, u);
        let before = if self.nodes[i].u <= u {
            self.prefix_max[i]
        } else {
            self.prefix_max[i - 1]
        };
        before.max(fu) - fu
    }

    /// Exact `max f` over the level interval `[u_lo, u_hi]`.
    pub fn max_on_levels(&self, u_lo: f64, u_hi: f64) -> f64 {
        let (u_lo, u_hi) = (u_lo.max(0.0), u_hi.min(self.u_max()));
        let ends = self.f_at_level(u_lo).max(self.f_at_level(u_hi));
        self.nodes
            .iter()
            .filter(|n| n.u > u_lo && n.u < u_hi)
            .map(|n| n.f)
            .fold(ends, f64::max)
    }

    /// `f*` at every node.
    pub fn fstar_nodes(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .zip(&self.prefix_max)
            .map(|(n, m)| m - n.f)
            .collect()
    }

    /// Excursions of `f` below its running maximum, each as
    /// `(index of the last running-max node, index of the deepest f* node, f* there)`.
    fn excursions(&self) -> Vec<(usize, usize, f64)> {
        let fstar = self.fstar_nodes();
        let mut out = Vec::new();
        let mut start = 0;
        let mut best: Option<(usize, f64)> = None;
        for (j, &s) in fstar.iter().enumerate() {
            if s <= 0.0 {
                if let Some((k, v)) = best.take() {
                    out.push((start, k, v));
                }
                start = j;
            } else if best.is_none_or(|(_, v)| s > v) {
                best = Some((j, s));
            }
        }
        if let Some((k, v)) = best {
            out.push((start, k, v));
        }
        out
    }

    /// `σ(f)`: closed form for generated families, tail estimate otherwise.
    pub fn sigma(&self) -> Sigma {
        match self.family {
            Family::Monotone => Sigma::Exact { value: 0.0 },
            // The generator amplitude f(y_n) - f(y_n') is 1 for every n and
            // f(y_n) is the running maximum, so f*(y_n') = 1 on every block.
            Family::Example1 | Family::Example2 { .. } => Sigma::Exact { value: 1.0 },
            Family::Custom => self.sigma_estimate(),
        }
    }

    /// Numeric `σ` from the maxima of `f*` over tail nodes.
    pub fn sigma_estimate(&self) -> Sigma {
        let u_max = self.u_max();
        let peaks: Vec<(f64, f64)> = self
            .excursions()
            .into_iter()
            .map(|(_, k, v)| (self.nodes[k].u, v))
            .filter(|&(u, _)| u >= u_max / 2.0)
            .collect();
        let tail_max = |cut: f64| {
            peaks
                .iter()
                .filter(|&&(u, _)| u >= cut)
                .map(|&(_, v)| v)
                .fold(0.0, f64::max)
        };
        let hi = tail_max(u_max / 2.0);
        let lo = tail_max(0.75 * u_max);
        let growing = peaks.len() >= 3
            && peaks.windows(2).all(|w| w[1].1 > w[0].1)
            && peaks[peaks.len() - 1].1 >= 2.0 * peaks[0].1;
        if growing {
            return Sigma::Unbounded;
        }
        Sigma::Estimate {
            value: hi,
            lo,
            hi,
            converged: hi - lo <= SIGMA_CONVERGENCE_TOL * hi.max(1.0),
        }
    }

    /// Oscillation sequence with the threshold `σ/2`.
    pub fn extract_osc_seq(&self, count: usize) -> Result<OscillationSeq> {
        let sigma = self.sigma();
        if sigma.is_standard() {
            return Err(Error::StandardProfile);
        }
        if let Sigma::Unbounded = sigma {
            return Err(Error::InvalidProfile(
                "sigma is unbounded; pass an explicit threshold".into(),
            ));
        }
        self.extract_osc_seq_with_threshold(count, sigma.value() / 2.0)
    }

    /// Pairs `(y_n, y_n')` with `f*(y_n') > threshold`, `f*(y_n) = 0` and `y_n`
    /// the smallest `y > y_n'` where `f*` vanishes.
    ///
    /// One pair is taken per excursion of `f` below its running maximum; the
    /// trough is the node of largest `f*` in that excursion.
    pub fn extract_osc_seq_with_threshold(
        &self,
        count: usize,
        threshold: f64,
    ) -> Result<OscillationSeq> {
        if self.sigma().is_standard() {
            return Err(Error::StandardProfile);
        }
        let pairs: Vec<OscPair> = self
            .excursions()
            .into_iter()
            .filter(|&(_, _, v)| v > threshold)
            .take(count)
            .enumerate()
            .map(|(i, (s, k, v))| OscPair {
                n: i + 1,
                u_peak: self.nodes[s].u,
                u_trough: self.nodes[k].u,
                f_peak: self.nodes[s].f,
                f_trough: self.nodes[k].f,
                fstar_trough: v,
            })
            .collect();
        if pairs.len() < count {
            return Err(Error::InsufficientDepth {
                requested: count,
                available: pairs.len(),
            });
        }
        Ok(OscillationSeq { pairs, threshold })
    }

    /// Cluster representatives of `f(y_n) mod 1` over the tail `N/2 < n ≤ N`
    /// of the oscillation sequence, at the given resolution.
    pub fn alpha_accumulation(&self, count: usize, resolution: f64) -> Result<Vec<CirclePoint>> {
        let seq = self.extract_osc_seq(count)?;
        Ok(seq.alpha_accumulation(resolution))
    }

    /// CSV `y,f,fstar` at every node and `subdivisions - 1` interior points
    /// per segment.
    pub fn to_csv(&self, subdivisions: usize) -> String {
        let subdivisions = subdivisions.max(1);
        let mut out = String::from("y,f,fstar\n");
        let mut row = |u: f64| {
            let f = self.f_at_level(u);
            let fs = self.fstar_at_level(u);
            out.push_str(&format!("{},{},{}\n", height_of(u), f, fs));
        };
        row(self.nodes[0].u);
        for w in self.nodes.windows(2) {
            for k in 1..=subdivisions {
                row(w[0].u + (w[1].u - w[0].u) * k as f64 / subdivisions as f64);
            }
        }
        out
    }

    pub fn spec(&self) -> ProfileSpec {
        let (family, beta, nodes) = match self.family {
            Family::Monotone => ("monotone", None, None),
            Family::Example1 => ("example1", None, None),
            Family::Example2 { beta } => ("example2", Some(beta), None),
            Family::Custom => (
                "custom",
                None,
                Some(self.nodes.iter().map(|n| [n.y(), n.f]).collect()),
            ),
        };
        ProfileSpec {
            family: family.to_string(),
            beta,
            f0: Some(self.f0),
            depth: Some(self.depth),
            nodes,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ProfileSpec = serde_json::from_str(text)?;
        spec.build()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.spec())?)
    }
}

/// Default-grid generator shared by the three closed-form families.
fn generator(family: Family, f0: f64, n: usize) -> Option<GeneratorPair> {
    let nf = n as f64;
    let (f_peak, f_trough) = match family {
        Family::Monotone => (2.0 * nf - 1.0, 2.0 * nf),
        Family::Example1 => (nf, nf - 1.0),
        Family::Example2 { beta } => (nf * beta, nf * beta - 1.0),
        Family::Custom => return None,
    };
    Some(GeneratorPair {
        n,
        u_peak: 2.0 * nf - 1.0,
        u_trough: 2.0 * nf,
        f_peak: f0 + f_peak,
        f_trough: f0 + f_trough,
    })
}

/// Profile JSON: `{"family", "beta", "f0", "depth", "nodes"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<[f64; 2]>>,
}

impl ProfileSpec {
    pub fn build(&self) -> Result<Profile> {
        let f0 = self.f0.unwrap_or(0.0);
        let depth = || {
            self.depth
                .ok_or_else(|| Error::InvalidProfile(format!("{} needs a depth", self.family)))
        };
        match self.family.as_str() {
            "monotone" => Profile::from_family(Family::Monotone, f0, depth()?),
            "example1" => Profile::from_family(Family::Example1, f0, depth()?),
            "example2" => {
                let beta = self
                    .beta
                    .ok_or_else(|| Error::InvalidProfile("example2 needs beta".into()))?;
                Profile::from_family(Family::Example2 { beta }, f0, depth()?)
            }
            "custom" => {
                let nodes = self
                    .nodes
                    .as_ref()
                    .ok_or_else(|| Error::InvalidProfile("custom needs nodes".into()))?;
                let pts: Vec<(f64, f64)> = nodes.iter().map(|&[y, f]| (y, f)).collect();
                let p = Profile::custom(&pts)?;
                if let Some(f0) = self.f0 {
                    if f0 != p.f0() {
                        return Err(Error::InvalidProfile(format!(
                            "f0 = {f0} disagrees with the node at y = 1 (f = {})",
                            p.f0()
                        )));
                    }
                }
                Ok(p)
            }
            other => Err(Error::InvalidProfile(format!("unknown family {other:?}"))),
        }
    }
}

/// One pair of the oscillation sequence, in level and height coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscPair {
    pub n: usize,
    pub u_peak: f64,
    pub u_trough: f64,
    pub f_peak: f64,
    pub f_trough: f64,
    pub fstar_trough: f64,
}

impl OscPair {
    /// `y_n`.
    pub fn y_peak(&self) -> f64 {
        height_of(self.u_peak)
    }

    /// `y_n'`.
    pub fn y_trough(&self) -> f64 {
        height_of(self.u_trough)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationSeq {
    pub pairs: Vec<OscPair>,
    pub threshold: f64,
}

impl OscillationSeq {
    pub fn alpha_accumulation(&self, resolution: f64) -> Vec<CirclePoint> {
        let n = self.pairs.len();
        let tail: Vec<CirclePoint> = self.pairs[n / 2..]
            .iter()
            .map(|p| CirclePoint::new(p.f_peak))
            .collect();
        cluster_points(&tail, resolution / 2.0)
    }
}
