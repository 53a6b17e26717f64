//! The band as two glued half-open charts carrying the translation flow.
//!
//! Chart `i` is the universal-cover strip around the boundary line `∂_i B`,
//! with coordinates `(x̃, y)`. The flow translates `x̃` in either chart, and the
//! charts are glued over `y > 0` by `x̃_1 = x̃_0 - f(y)`. With the transversals
//! `γ_i(y) = (chart i, 0, y)` the transit time from `γ_0(y)` to `γ_1(y)` is
//! `f(y)` on the nose, which realizes an arbitrary profile.
//!
//! The product model `φ_P^t(x, y) = (2^t x, 2^{-t} y)` on the punctured
//! quadrant, and its reparametrizations, live here too.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::circle::{CircleAction, PlHomeo};
use crate::error::{Error, Result};
use crate::profile::{height_of, Profile};
use crate::roots::bisect;
use crate::svg::Plot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    Zero,
    One,
}

impl Chart {
    pub fn index(self) -> u8 {
        match self {
            Chart::Zero => 0,
            Chart::One => 1,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            0 => Some(Chart::Zero),
            1 => Some(Chart::One),
            _ => None,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Chart::Zero => Chart::One,
            Chart::One => Chart::Zero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPoint {
    pub chart: Chart,
    pub x: f64,
    pub y: f64,
}

impl BandPoint {
    pub fn new(chart: Chart, x: f64, y: f64) -> Self {
        Self { chart, x, y }
    }

    pub fn is_boundary(&self) -> bool {
        self.y == 0.0
    }
}

/// Changes chart: `x̃_1 = x̃_0 - f(y)`, `x̃_0 = x̃_1 + f(y)`.
pub fn transition(p: &Profile, pt: BandPoint) -> Result<BandPoint> {
    if pt.is_boundary() {
        return Err(Error::NoTransition {
            chart: pt.chart.index(),
        });
    }
    let f = p.eval_f(pt.y)?;
    let x = match pt.chart {
        Chart::Zero => pt.x - f,
        Chart::One => pt.x + f,
    };
    Ok(BandPoint::new(pt.chart.other(), x, pt.y))
}

/// Translation flow on the two-chart band with the given gluing profile.
#[derive(Debug, Clone, PartialEq)]
pub struct BandFlow {
    profile: Profile,
}

/// Builds the two-chart flow realizing `p` and checks that its transit times
/// reproduce `p` at every representable node.
pub fn realize_flow(p: Profile) -> Result<BandFlow> {
    if !p.appears_divergent() {
        return Err(Error::InvalidProfile(
            "f does not grow over the deepest half of its domain".into(),
        ));
    }
    let flow = BandFlow { profile: p };
    for node in flow.profile.nodes() {
        let y = node.y();
        if y == 0.0 {
            break;
        }
        let t = flow.transit_time(y)?;
        if (t - node.f).abs() > 1e-9 {
            return Err(Error::InvalidProfile(format!(
                "transit time {t} at y = {y} disagrees with f = {}",
                node.f
            )));
        }
    }
    Ok(flow)
}

impl BandFlow {
    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// Canonical transversal `γ_i(y) = (chart i, 0, y)`.
    pub fn gamma(&self, chart: Chart, y: f64) -> BandPoint {
        BandPoint::new(chart, 0.0, y)
    }

    pub fn flow_eval(&self, pt: BandPoint, t: f64) -> BandPoint {
        BandPoint::new(pt.chart, pt.x + t, pt.y)
    }

    /// The Reeb homeomorphism `h`, the deck translation `x̃ ↦ x̃ + 1`.
    pub fn time_one(&self, pt: BandPoint) -> BandPoint {
        self.flow_eval(pt, 1.0)
    }

    pub fn to_chart(&self, pt: BandPoint, chart: Chart) -> Result<BandPoint> {
        if pt.chart == chart {
            Ok(pt)
        } else {
            transition(&self.profile, pt)
        }
    }

    /// Time needed to flow from `γ_0(y)` to `γ_1(y)`.
    pub fn transit_time(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::OutOfRange {
                what: "y",
                value: y,
                lo: self.profile.y_min(),
                hi: 1.0,
            });
        }
        let start = self.gamma(Chart::Zero, y);
        let target = self.to_chart(self.gamma(Chart::One, y), Chart::Zero)?;
        Ok(target.x - start.x)
    }

    /// Orbit samples `t,chart,x,y` from `γ_0(y)` to `γ_1(y)` for each level,
    /// in both charts.
    pub fn orbit_csv(&self, levels: &[f64], steps: usize) -> Result<String> {
        let steps = steps.max(1);
        let mut out = String::from("t,chart,x,y\n");
        for &y in levels {
            let total = self.transit_time(y)?;
            let start = self.gamma(Chart::Zero, y);
            for k in 0..=steps {
                let t = total * k as f64 / steps as f64;
                let p0 = self.flow_eval(start, t);
                let p1 = self.to_chart(p0, Chart::One)?;
                for p in [p0, p1] {
                    let _ = writeln!(out, "{},{},{},{}", t, p.chart.index(), p.x, p.y);
                }
            }
        }
        Ok(out)
    }

    /// Plot window used by [`BandFlow::leaves_svg`].
    pub fn leaves_plot(&self, levels: &[f64]) -> Result<Plot> {
        let fs: Vec<f64> = self
            .profile
            .nodes()
            .iter()
            .map(|n| n.f)
            .chain(levels.iter().map(|&y| self.profile.eval_f(y).unwrap_or(0.0)))
            .collect();
        let lo = fs.iter().cloned().fold(0.0, f64::min);
        let hi = fs.iter().cloned().fold(0.0, f64::max);
        Ok(Plot::new((lo, hi), (0.0, 1.0)))
    }

    /// Leaves `y = const` between the transversals, drawn in chart-0
    /// coordinates, together with `γ_0 = {x̃ = 0}` and `γ_1 = {x̃ = f(y)}`.
    pub fn leaves_svg(&self, levels: &[f64]) -> Result<String> {
        let mut plot = self.leaves_plot(levels)?;
        for &y in levels {
            let t = self.transit_time(y)?;
            plot.polyline(&[(0.0, y), (t, y)], "steelblue", 1.0);
        }
        let gamma1: Vec<(f64, f64)> = self
            .profile
            .nodes()
            .iter()
            .filter(|n| n.y() > 0.0)
            .map(|n| (n.f, n.y()))
            .collect();
        plot.polyline(&[(0.0, 0.0), (0.0, 1.0)], "black", 1.5);
        plot.polyline(&gamma1, "firebrick", 1.5);
        plot.label(0.0, 1.0, "gamma_0");
        plot.label(gamma1[0].0, 1.0, "gamma_1");
        Ok(plot.finish("orbits of the band flow between the transversals"))
    }
}

/// Free action of ℝ on `[0, ∞)` fixing 0, conjugate to `t ↦ base^t x`.
///
/// Stored as a circle-homeomorphism lift `L` acting on `s = log_base x`:
/// `ψ^t(x) = base^{L(L⁻¹(s) + t)}`. Any such action has time-one `x ↦ base·x`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfLineAction {
    lift: CircleAction,
    base: f64,
}

impl HalfLineAction {
    pub fn new(conjugator: PlHomeo, base: f64) -> Result<Self> {
        if !(base > 0.0 && base.is_finite() && base != 1.0) {
            return Err(Error::InvalidAction(format!("base {base} must be positive and not 1")));
        }
        Ok(Self {
            lift: CircleAction::new(conjugator),
            base,
        })
    }

    /// `t ↦ 2^t x`.
    pub fn expanding() -> Self {
        Self::new(PlHomeo::identity(), 2.0).expect("valid base")
    }

    /// `t ↦ 2^{-t} y`.
    pub fn contracting() -> Self {
        Self::new(PlHomeo::identity(), 0.5).expect("valid base")
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let whole = t.floor();
        let frac = t - whole;
        let scale = self.base.powi(whole as i32);
        if frac == 0.0 {
            return x * scale;
        }
        let s = x.ln() / self.base.ln();
        self.base.powf(self.lift.lift_map(frac, s)) * scale
    }
}

/// Product flow `φ^t(x, y) = (ψ_0^t(x), ψ_1^t(y))` on the punctured quadrant.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductFlow {
    pub psi0: HalfLineAction,
    pub psi1: HalfLineAction,
}

impl ProductFlow {
    /// `φ_P^t(x, y) = (2^t x, 2^{-t} y)`.
    pub fn model() -> Self {
        Self {
            psi0: HalfLineAction::expanding(),
            psi1: HalfLineAction::contracting(),
        }
    }

    pub fn eval(&self, t: f64, (x, y): (f64, f64)) -> (f64, f64) {
        (self.psi0.eval(t, x), self.psi1.eval(t, y))
    }

    pub fn time_one(&self, pt: (f64, f64)) -> (f64, f64) {
        self.eval(1.0, pt)
    }

    /// Time from `(y, 1)` to `(1, y)`, found by bisection on the first
    /// coordinate and cross-checked on the second.
    pub fn transit_time(&self, y: f64) -> Result<f64> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::OutOfRange {
                what: "y",
                value: y,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        let g = |t: f64| self.psi0.eval(t, y).ln();
        let (mut lo, mut hi) = (-1.0, 1.0);
        while g(lo) > 0.0 && lo > -4096.0 {
            lo *= 2.0;
        }
        while g(hi) < 0.0 && hi < 4096.0 {
            hi *= 2.0;
        }
        let t = bisect(g, lo, hi, 1e-14).ok_or(Error::OutOfRange {
            what: "y",
            value: y,
            lo: 0.0,
            hi: f64::INFINITY,
        })?;
        let back = self.psi1.eval(t, 1.0);
        if (back - y).abs() > 1e-9 * y.max(1.0) {
            return Err(Error::InvalidAction(format!(
                "second coordinate reaches {back} instead of {y}"
            )));
        }
        Ok(t)
    }
}

/// Extends two boundary flows with time-ones `x ↦ 2x` and `y ↦ y/2` to the
/// product flow on the model quadrant.
pub fn build_standard_extension(psi0: HalfLineAction, psi1: HalfLineAction) -> Result<ProductFlow> {
    let samples = (-64..=64).map(|k| (k as f64 / 8.0).exp2());
    for s in samples {
        for (axis, psi, factor) in [("x", &psi0, 2.0), ("y", &psi1, 0.5)] {
            let got = psi.eval(1.0, s);
            let expected = factor * s;
            if (got - expected).abs() > 1e-9 * expected.max(1.0) {
                return Err(Error::TimeOneMismatch {
                    axis,
                    sample: s,
                    got,
                    expected,
                });
            }
        }
    }
    Ok(ProductFlow { psi0, psi1 })
}

/// Default documentation levels: `1` and the grid heights `y_n`, `y_n'`
/// for `n ≤ count`.
pub fn grid_levels(p: &Profile, count: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for k in 1..=(2 * count) {
        let u = k as f64;
        if u > p.u_max() {
            break;
        }
        out.push(height_of(u));
    }
    out
}
