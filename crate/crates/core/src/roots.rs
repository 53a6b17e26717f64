//! Bracketing root finder shared by the level and transit-time solvers.

/// Bisection on `[lo, hi]` for a continuous `f` with `f(lo)` and `f(hi)` of
/// opposite signs (or one of them zero). Stops when the bracket is shorter
/// than `tol`. Returns `None` without a sign change.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return None;
    }
    // 200 halvings exhaust any f64 bracket.
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid == 0.0 {
            return Some(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-13).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn endpoint_roots_and_missing_bracket() {
        assert_eq!(bisect(|x| x, 0.0, 1.0, 1e-12), Some(0.0));
        assert_eq!(bisect(|x| x - 1.0, 0.0, 1.0, 1e-12), Some(1.0));
        assert_eq!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12), None);
    }
}
