//! Equivalence witnesses `f ↦ f∘h + k`.
//!
//! Both witnesses are piecewise linear in level coordinates so that the
//! transformed profile is again exactly PL: `h` is PL in `(log y, log h(y))`
//! (piecewise power law, extended by its end exponents, hence `h(0) = 0`) and
//! `k` is PL in `u = log2(1/y)` with constant extension beyond its nodes.

use rand::Rng;

use super::{height_of, level_of, Node, Profile};
use crate::circle::NODE_GAP;
use crate::error::{Error, Result};

/// Homeomorphism `h` of `[0, ∞)` with `h(0) = 0`, stored as the level map
/// `H(u') = log2(1/h(2^(-u')))`.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessH {
    levels: Vec<(f64, f64)>,
}

impl WitnessH {
    /// From `(y, h(y))` pairs; both coordinates must increase together.
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        let mut levels = Vec::with_capacity(points.len());
        for &(y, hy) in points {
            if !(y > 0.0 && hy > 0.0 && y.is_finite() && hy.is_finite()) {
                return Err(Error::InvalidWitness(format!("bad node ({y}, {hy})")));
            }
            levels.push((level_of(y), level_of(hy)));
        }
        Self::from_levels(levels)
    }

    /// From `(u', H(u'))` pairs in level coordinates.
    pub fn from_levels(mut levels: Vec<(f64, f64)>) -> Result<Self> {
        levels.sort_by(|a, b| a.0.total_cmp(&b.0));
        if levels.len() < 2 {
            return Err(Error::InvalidWitness("need at least two nodes".into()));
        }
        for w in levels.windows(2) {
            if w[1].0 - w[0].0 < NODE_GAP || w[1].1 - w[0].1 < NODE_GAP {
                return Err(Error::InvalidWitness(format!(
                    "h is not strictly increasing between {:?} and {:?}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { levels })
    }

    pub fn identity() -> Self {
        Self::power(1.0).expect("identity is valid")
    }

    /// `h(y) = y^a`.
    pub fn power(a: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidWitness(format!("exponent {a} must be positive")));
        }
        Self::from_levels(vec![(0.0, 0.0), (1.0, a)])
    }

    /// Random witness with `h(1) ∈ [1/2, 1]`, breakpoints in `y ∈ [2^-8, 1]`
    /// and local exponents in `[1/2, 2]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let count = rng.gen_range(2..=5);
        let mut us: Vec<f64> = (0..count).map(|_| rng.gen_range(0.0..8.0)).collect();
        us.push(0.0);
        us.sort_by(f64::total_cmp);
        us.dedup_by(|b, a| *b - *a < 1e-3);
        let mut levels = vec![(0.0, rng.gen_range(0.0..1.0))];
        for w in us.windows(2) {
            let slope = rng.gen_range(0.5..2.0);
            let prev = levels[levels.len() - 1].1;
            levels.push((w[1], prev + slope * (w[1] - w[0])));
        }
        if levels.len() < 2 {
            let prev = levels[0].1;
            levels.push((1.0, prev + rng.gen_range(0.5..2.0)));
        }
        Self::from_levels(levels).expect("random levels are increasing")
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.levels.iter().map(|l| l.0)
    }

    fn extrapolate(levels: &[(f64, f64)], x: f64, inverse: bool) -> f64 {
        let key = |l: &(f64, f64)| if inverse { (l.1, l.0) } else { *l };
        let n = levels.len();
        let idx = levels
            .partition_point(|l| key(l).0 <= x)
            .clamp(1, n - 1);
        let (a, b) = key(&levels[idx - 1]);
        let (c, d) = key(&levels[idx]);
        if x == a {
            return b;
        }
        b + (d - b) * (x - a) / (c - a)
    }

    /// `H(u')`, the level of `h(y)` for a point at level `u'`.
    pub fn level_map(&self, u: f64) -> f64 {
        Self::extrapolate(&self.levels, u, false)
    }

    pub fn level_map_inv(&self, u: f64) -> f64 {
        Self::extrapolate(&self.levels, u, true)
    }

    pub fn eval(&self, y: f64) -> f64 {
        if y == 0.0 {
            return 0.0;
        }
        height_of(self.level_map(level_of(y)))
    }

    pub fn eval_inv(&self, y: f64) -> f64 {
        if y == 0.0 {
            return 0.0;
        }
        height_of(self.level_map_inv(level_of(y)))
    }
}

/// Continuous function `k` on `[0, ∞)`, PL in the level coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessK {
    levels: Vec<(f64, f64)>,
}

impl WitnessK {
    /// From `(y, k(y))` pairs, in any order.
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        let mut levels = Vec::with_capacity(points.len());
        for &(y, k) in points {
            if !(y > 0.0 && y.is_finite() && k.is_finite()) {
                return Err(Error::InvalidWitness(format!("bad node ({y}, {k})")));
            }
            levels.push((level_of(y), k));
        }
        levels.sort_by(|a, b| a.0.total_cmp(&b.0));
        levels.dedup_by(|b, a| b.0 - a.0 < NODE_GAP);
        if levels.is_empty() {
            return Err(Error::InvalidWitness("need at least one node".into()));
        }
        Ok(Self { levels })
    }

    pub fn zero() -> Self {
        Self {
            levels: vec![(0.0, 0.0)],
        }
    }

    /// Samples `k` at the given heights.
    pub fn sampled(k: impl Fn(f64) -> f64, heights: &[f64]) -> Result<Self> {
        let pts: Vec<(f64, f64)> = heights.iter().map(|&y| (y, k(y))).collect();
        Self::new(&pts)
    }

    /// Random `k` with breakpoints in `y ∈ [2^-8, 1]` and values in `[-2, 2]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let count = rng.gen_range(1..=5);
        let pts: Vec<(f64, f64)> = (0..count)
            .map(|_| (height_of(rng.gen_range(0.0..8.0)), rng.gen_range(-2.0..2.0)))
            .collect();
        Self::new(&pts).expect("random nodes are valid")
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.levels.iter().map(|l| l.0)
    }

    pub fn eval_level(&self, u: f64) -> f64 {
        let n = self.levels.len();
        if u <= self.levels[0].0 {
            return self.levels[0].1;
        }
        if u >= self.levels[n - 1].0 {
            return self.levels[n - 1].1;
        }
        let idx = self.levels.partition_point(|l| l.0 <= u);
        let (a, b) = self.levels[idx - 1];
        let (c, d) = self.levels[idx];
        b + (d - b) * (u - a) / (c - a)
    }

    pub fn eval(&self, y: f64) -> f64 {
        if y == 0.0 {
            return self.levels[self.levels.len() - 1].1;
        }
        self.eval_level(level_of(y))
    }
}

/// The profile of `f∘h + k`, exact on the union of the pulled-back nodes of
/// `f` and the breakpoints of `h` and `k`.
///
/// Requires `h(1) ≤ 1`; the new domain is `[h⁻¹(y_min), 1]`.
pub fn apply_witness(p: &Profile, h: &WitnessH, k: &WitnessK) -> Result<Profile> {
    let top = h.level_map(0.0);
    if top < -NODE_GAP {
        return Err(Error::OutOfRange {
            what: "h(1)",
            value: height_of(top),
            lo: 0.0,
            hi: 1.0,
        });
    }
    let top = top.max(0.0);
    let u_max = p.u_max();
    let end = h.level_map_inv(u_max);
    if !(end > 0.0) {
        return Err(Error::OutOfRange {
            what: "h(1)",
            value: height_of(top),
            lo: p.y_min(),
            hi: 1.0,
        });
    }
    let mut levels = vec![0.0, end];
    levels.extend(
        p.nodes()
            .iter()
            .filter(|n| n.u >= top && n.u <= u_max)
            .map(|n| h.level_map_inv(n.u)),
    );
    levels.extend(h.breakpoints().chain(k.breakpoints()));
    levels.retain(|&u| (0.0..=end).contains(&u));
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|b, a| *b - *a < NODE_GAP);
    let nodes = levels
        .into_iter()
        .map(|u| Node {
            u,
            f: p.f_at_level(h.level_map(u)) + k.eval_level(u),
        })
        .collect();
    Profile::from_level_nodes(nodes)
}

/// Height `y*` below which `(f∘h)*(y) = f*(h(y))`.
///
/// Located where the maximum of `f` over `[h(y), h(1)]` first reaches the
/// maximum of `f` over `[h(1), 1]`.
pub fn local_identity_threshold(p: &Profile, h: &WitnessH) -> Result<f64> {
    let top = h.level_map(0.0);
    if top < -NODE_GAP {
        return Err(Error::OutOfRange {
            what: "h(1)",
            value: height_of(top),
            lo: 0.0,
            hi: 1.0,
        });
    }
    let top = top.max(0.0);
    let target = p.max_on_levels(0.0, top);
    let mut prev = (top, p.f_at_level(top));
    let mut crossing = (prev.1 >= target).then_some(top);
    if crossing.is_none() {
        for n in p.nodes().iter().filter(|n| n.u > top) {
            if n.f >= target {
                let t = (target - prev.1) / (n.f - prev.1);
                crossing = Some(prev.0 + t * (n.u - prev.0));
                break;
            }
            prev = (n.u, n.f);
        }
    }
    let u = crossing.ok_or(Error::OutOfRange {
        what: "threshold level",
        value: p.u_max(),
        lo: top,
        hi: p.u_max(),
    })?;
    Ok(height_of(h.level_map_inv(u)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_witness_is_noop() {
        let p = Profile::example1(6).unwrap();
        let q = apply_witness(&p, &WitnessH::identity(), &WitnessK::zero()).unwrap();
        assert_eq!(q.nodes(), p.nodes());
    }

    #[test]
    fn power_witness() {
        let h = WitnessH::power(2.0).unwrap();
        assert!((h.eval(0.5) - 0.25).abs() < 1e-15);
        assert!((h.eval_inv(0.25) - 0.5).abs() < 1e-15);
        assert_eq!(h.eval(0.0), 0.0);
        let p = Profile::example1(32).unwrap();
        let q = apply_witness(&p, &h, &WitnessK::zero()).unwrap();
        assert_eq!(q.u_max(), 32.0);
        for y in [0.9, 0.5, 0.3, 0.01, 1e-4] {
            assert!((q.eval_f(y).unwrap() - p.eval_f(y * y).unwrap()).abs() < 1e-12);
        }
        assert!((q.sigma().value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn additive_witness_keeps_sigma() {
        let p = Profile::example1(32).unwrap();
        let heights: Vec<f64> = (0..=64).map(|i| height_of(i as f64)).collect();
        let k = WitnessK::sampled(|y| y, &heights).unwrap();
        let q = apply_witness(&p, &WitnessH::identity(), &k).unwrap();
        assert!((q.sigma().value() - 1.0).abs() <= 1e-6);
        assert!(!q.sigma().is_flagged());
        assert_eq!(q.eval_f(0.5).unwrap(), 1.5);
    }

    #[test]
    fn witness_leaving_domain_is_rejected() {
        let p = Profile::example1(4).unwrap();
        let h = WitnessH::new(&[(1.0, 2.0), (0.5, 1.0)]).unwrap();
        assert!(matches!(
            apply_witness(&p, &h, &WitnessK::zero()),
            Err(Error::OutOfRange { .. })
        ));
        assert!(WitnessH::new(&[(1.0, 1.0), (0.5, 2.0)]).is_err());
    }

    #[test]
    fn threshold_is_conservative() {
        let p = Profile::example1(16).unwrap();
        // h(1) = 1/4 loses the peak f(1/2) = 1 from [h(1), 1].
        let h = WitnessH::from_levels(vec![(0.0, 2.0), (1.0, 3.0)]).unwrap();
        let y_star = local_identity_threshold(&p, &h).unwrap();
        // max f on [1/4, 1] is 1; on [h(y), 1/4] it reaches 1 once h(y) hits
        // the segment rising from f(1/4) = 0 to f(1/8) = 2, at u = 2.5.
        assert!((level_of(y_star) - 0.5).abs() < 1e-12);
        let q = apply_witness(&p, &h, &WitnessK::zero()).unwrap();
        for i in 0..200 {
            let u = level_of(y_star) + i as f64 * 0.07;
            if u > q.u_max() {
                break;
            }
            let y = height_of(u);
            let lhs = q.eval_fstar(y).unwrap();
            let rhs = p.eval_fstar(h.eval(y)).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12, "u = {u}: {lhs} vs {rhs}");
        }
        // Above the threshold the identity fails: at y = 1, (f∘h)* = 0 but
        // f*(1/4) = 1.
        assert_eq!(q.eval_fstar(1.0).unwrap(), 0.0);
        assert_eq!(p.eval_fstar(0.25).unwrap(), 1.0);
    }

    #[test]
    fn random_witnesses_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let h = WitnessH::random(&mut rng);
            assert!(h.eval(1.0) <= 1.0);
            let y = rng.gen_range(1e-6..1.0);
            assert!((h.eval_inv(h.eval(y)) - y).abs() <= 1e-12 * y.max(1e-3));
            let k = WitnessK::random(&mut rng);
            assert!(k.eval(0.0).is_finite());
        }
    }
}
