//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reebflow::annulus::{
    check_vn, delta, find_horizontal_points, group_law_sweep, pi_identity_sweep, projections,
    verify_commutation, AnnulusAction, AnnulusPoint,
};
use reebflow::band::{build_standard_extension, realize_flow, BandPoint, Chart, HalfLineAction, ProductFlow};
use reebflow::circle::{circle_dist, CircleAction, CirclePoint, PlHomeo};
use reebflow::examples::{
    build_example1_action, example1_profile, example2_profile, rigidity_report, Verdict,
};
use reebflow::profile::{
    apply_witness, height_of, level_of, local_identity_threshold, Profile, WitnessH, WitnessK,
};
use reebflow::Error;

const GOLDEN: f64 = 0.618_033_988_749_894_8;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Generator written out independently of the library: nodes at integer
/// levels, `f(2n-1) = n b`, `f(2n) = n b - 1`, linear in between; `b = None`
/// is the monotone profile `f = u`.
fn oracle_f(b: Option<f64>, u: f64) -> f64 {
    let Some(b) = b else { return u };
    let node = |k: i64| -> f64 {
        if k == 0 {
            0.0
        } else if k % 2 == 1 {
            ((k + 1) / 2) as f64 * b
        } else {
            (k / 2) as f64 * b - 1.0
        }
    };
    let k = u.floor() as i64;
    let s = u - k as f64;
    if s == 0.0 {
        node(k)
    } else {
        node(k) + s * (node(k + 1) - node(k))
    }
}

fn brute_sigma(b: Option<f64>, u_max: f64, points: usize) -> f64 {
    let mut running = f64::NEG_INFINITY;
    let mut best: f64 = 0.0;
    for i in 0..points {
        let u = u_max * i as f64 / (points - 1) as f64;
        let f = oracle_f(b, u);
        running = running.max(f);
        best = best.max(running - f);
    }
    best
}

fn random_non_rotation(rng: &mut ChaCha8Rng) -> CircleAction {
    loop {
        let psi = CircleAction::random_pl(rng, 4);
        if !psi.is_rotation() && psi.lift_displacement_osc(0.5) > 1e-3 {
            return psi;
        }
    }
}

fn criterion_1() -> Outcome {
    let s1 = ok(example1_profile(32))?.sigma().value();
    ensure((s1 - 1.0).abs() <= 1e-12, || format!("sigma(example1) = {s1}"))?;
    let s0 = ok(Profile::monotone(32))?.sigma().value();
    ensure(s0 == 0.0, || format!("sigma(monotone) = {s0}"))?;
    Ok(format!("sigma(example1) = {s1}, sigma(monotone) = {s0}"))
}

fn criterion_2() -> Outcome {
    let profiles = [ok(example1_profile(32))?, ok(example2_profile(GOLDEN, 32))?];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_sigma: f64 = 0.0;
    let mut worst_local: f64 = 0.0;
    let mut checked = 0usize;
    for _ in 0..100 {
        let h = WitnessH::random(&mut rng);
        let k = WitnessK::random(&mut rng);
        for p in &profiles {
            let q = ok(apply_witness(p, &h, &k))?;
            let s = q.sigma();
            ensure(!s.is_flagged(), || format!("sigma of transformed profile flagged: {s}"))?;
            worst_sigma = worst_sigma.max((s.value() - p.sigma().value()).abs());

            let qh = ok(apply_witness(p, &h, &WitnessK::zero()))?;
            let u_star = level_of(ok(local_identity_threshold(p, &h))?);
            for j in 0..50 {
                let u = (u_star + (qh.u_max() - u_star) * j as f64 / 49.0).min(qh.u_max());
                let lhs = ok(qh.eval_fstar_level(u))?;
                let rhs = ok(p.eval_fstar_level(h.level_map(u).min(p.u_max())))?;
                worst_local = worst_local.max((lhs - rhs).abs());
                checked += 1;
            }
        }
    }
    ensure(worst_sigma <= 1e-6, || format!("max |sigma change| = {worst_sigma:e}"))?;
    ensure(worst_local <= 1e-12, || format!("local identity residual {worst_local:e}"))?;
    Ok(format!(
        "200 transforms, max |dsigma| = {worst_sigma:e}; local identity residual {worst_local:e} on {checked} levels"
    ))
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    for (b, p) in [
        (Some(1.0), ok(example1_profile(32))?),
        (Some(GOLDEN), ok(example2_profile(GOLDEN, 32))?),
        (None, ok(Profile::monotone(32))?),
    ] {
        let brute = brute_sigma(b, p.u_max(), 100_000);
        let closed = p.sigma().value();
        let d = (brute - closed).abs();
        ensure(d <= 1e-3, || format!("{}: closed {closed} vs brute {brute}", p.family().name()))?;
        worst = worst.max(d);
    }
    // The tail estimate used for custom profiles, on the same data.
    let custom = ok(Profile::from_level_nodes(ok(example2_profile(GOLDEN, 32))?.nodes().to_vec()))?;
    let est = custom.sigma();
    let brute = brute_sigma(Some(GOLDEN), 64.0, 100_000);
    ensure(!est.is_flagged() && (est.value() - brute).abs() <= 1e-3, || {
        format!("custom estimate {est} vs brute {brute}")
    })?;
    Ok(format!("max |closed - brute| = {worst:e}; custom estimate {est}"))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for (b, p) in [
        (None, ok(Profile::monotone(16))?),
        (Some(1.0), ok(example1_profile(16))?),
        (Some(GOLDEN), ok(example2_profile(GOLDEN, 16))?),
    ] {
        let flow = ok(realize_flow(p.clone()))?;
        for _ in 0..1000 {
            let u = rng.gen_range(0.0..=p.u_max());
            let y = height_of(u);
            let t = ok(flow.transit_time(y))?;
            worst = worst.max((t - ok(p.eval_f(y))?).abs());
            worst = worst.max((t - oracle_f(b, level_of(y))).abs());
            let chart = if rng.gen_bool(0.5) { Chart::Zero } else { Chart::One };
            let pt = BandPoint::new(chart, rng.gen_range(-5.0..5.0), y);
            let one = flow.time_one(pt);
            ensure(one.chart == chart && one.y == y && one.x == pt.x + 1.0, || {
                format!("time-one of {pt:?} is {one:?}")
            })?;
        }
    }
    ensure(worst <= 1e-9, || format!("max |transit - f| = {worst:e}"))?;
    Ok(format!("3 families x 1000 levels, max |transit - f| = {worst:e}; time-one exact"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for (b, p) in [
        (None, ok(Profile::monotone(16))?),
        (Some(1.0), ok(example1_profile(16))?),
        (Some(GOLDEN), ok(example2_profile(GOLDEN, 16))?),
    ] {
        let r = ok(pi_identity_sweep(&p, 10_000, &mut rng, 1e-9))?;
        ensure(r.pass, || format!("{}: residual {:e}", p.family().name(), r.residual))?;
        worst = worst.max(r.residual);
        for _ in 0..1000 {
            let xi = AnnulusPoint::interior(rng.gen_range(0.0..1.0), height_of(rng.gen_range(0.0..p.u_max())));
            let pr = ok(projections(&xi, &p))?;
            let d = circle_dist(pr.pi0.unwrap().value() - pr.pi1.unwrap().value(), oracle_f(b, level_of(pr.p)));
            worst = worst.max(d);
        }
    }
    ensure(worst <= 1e-9, || format!("oracle residual {worst:e}"))?;
    Ok(format!("3 x 10^4 samples, max residual {worst:e}"))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let p = ok(example1_profile(10))?;
    let mut worst = [0.0f64; 4];
    for _ in 0..5 {
        let psi = random_non_rotation(&mut rng);
        let a = ok(build_example1_action(psi.clone(), p.clone()))?;
        let g = ok(group_law_sweep(&a, 1000, &mut rng, 1e-9))?;
        worst[0] = worst[0].max(g.residual);
        for side in [Chart::Zero, Chart::One] {
            let phi = a.boundary_action(side);
            for i in 0..=64 {
                let t = i as f64 / 64.0;
                for j in 0..256 {
                    let x = CirclePoint::new(j as f64 / 256.0);
                    worst[1] = worst[1].max(phi.act(t, x).dist(psi.act(t, x)));
                    // Boundary limit of the interior action along pi_0.
                    let img = ok(a.act_eval(&AnnulusPoint::interior(x.value(), p.y_min()), t))?;
                    if let (Chart::Zero, AnnulusPoint::Interior { x: x1, .. }) = (side, img) {
                        worst[1] = worst[1].max(x1.dist(psi.act(t, x)));
                    }
                }
            }
        }
        worst[2] = worst[2].max(verify_commutation(&a, CirclePoint::new(0.0), 64).residual);
        // φ^{1/2^k} applied 2^k times returns every point, k = 1, 2.
        for k in 1..=2u32 {
            let steps = 1usize << k;
            let step = 1.0 / steps as f64;
            for _ in 0..100 {
                let xi = AnnulusPoint::interior(rng.gen_range(0.0..1.0), height_of(rng.gen_range(0.0..p.u_max())));
                let mut cur = xi;
                for _ in 0..steps {
                    cur = ok(a.act_eval(&cur, step))?;
                }
                worst[3] = worst[3].max(cur.distance(&xi));
                for side in [Chart::Zero, Chart::One] {
                    let phi = a.boundary_action(side);
                    let x = CirclePoint::new(rng.gen_range(0.0..1.0));
                    let mut c = x;
                    for _ in 0..steps {
                        c = phi.act(step, c);
                    }
                    worst[3] = worst[3].max(c.dist(x));
                }
            }
        }
    }
    let names = ["group law", "boundary = psi", "commutation alpha = 0", "dyadic k = 1, 2"];
    for (w, name) in worst.iter().zip(names) {
        ensure(*w <= 1e-9, || format!("{name} residual {w:e}"))?;
    }
    Ok(format!(
        "5 actions: group {:e}, boundary {:e}, commutation {:e}, dyadic {:e}",
        worst[0], worst[1], worst[2], worst[3]
    ))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = ok(example1_profile(12))?;
    let a = ok(build_example1_action(random_non_rotation(&mut rng), p.clone()))?;
    let seq = ok(p.extract_osc_seq(10))?;
    let (mut level, mut dmax, mut again_max) = (0.0f64, 0.0f64, 0.0f64);
    let mut total = 0;
    for pair in &seq.pairs {
        let y = pair.y_peak();
        let pts = ok(find_horizontal_points(&a, y, 0.5))?;
        ensure(!pts.is_empty(), || format!("no point at n = {}", pair.n))?;
        total += pts.len();
        for x in pts {
            let xi = AnnulusPoint::Interior { x, y };
            let img = ok(a.act_eval(&xi, 0.5))?;
            level = level.max((img.level() - y).abs());
            dmax = dmax.max(ok(delta(&a, &xi, 0.5))?.abs());
            let again = ok(a.act_eval(&img, 0.5))?;
            again_max = again_max.max((again.level() - y).abs());
        }
    }
    ensure(level <= 1e-9 && dmax <= 1e-9, || format!("level {level:e}, delta {dmax:e}"))?;
    ensure(again_max <= 1e-8, || format!("image residual {again_max:e}"))?;
    Ok(format!(
        "n = 1..10: {total} points, |p phi - y_n| <= {level:e}, |delta| <= {dmax:e}, image {again_max:e}"
    ))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = ok(example1_profile(12))?;
    let mut margin = f64::INFINITY;
    for _ in 0..5 {
        let a = ok(build_example1_action(random_non_rotation(&mut rng), p.clone()))?;
        for n in 1..=10 {
            let r = ok(check_vn(&a, n, 128))?;
            ensure(r.all_in_vn && r.all_above_trough, || format!("n = {n}: {r:?}"))?;
            margin = margin.min(r.min_margin_to_trough);
        }
    }
    Ok(format!("5 actions, n = 1..10: min level margin above y_n' = {margin}"))
}

fn criterion_9() -> Outcome {
    let p = ok(example2_profile(GOLDEN, 1000))?;
    let r = ok(rigidity_report(&p, 1000, 0.01))?;
    let mut oracle: Vec<f64> = (1..=1000)
        .flat_map(|n| [n as f64 * GOLDEN, n as f64 * GOLDEN - 1.0])
        .map(|v| v.rem_euclid(1.0))
        .collect();
    oracle.sort_by(f64::total_cmp);
    let oracle_gap = oracle
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(oracle[0] + 1.0 - oracle[oracle.len() - 1], f64::max);
    ensure(oracle_gap < 0.01, || format!("oracle gap {oracle_gap}"))?;
    ensure(r.max_gap < 0.01 && r.max_gap <= oracle_gap + 1e-12, || format!("max gap {}", r.max_gap))?;
    ensure(r.verdict == Verdict::ForcedToRotations, || format!("verdict {}", r.verdict.as_str()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let psi = random_non_rotation(&mut rng);
    match build_example1_action(psi.clone(), ok(example2_profile(GOLDEN, 1000))?) {
        Err(Error::GlueConstraintViolation { constraint, .. }) => {
            ensure(!psi.commutes_with_rotation(constraint, 1e-9), || {
                format!("psi commutes with rotation by {}", constraint.value())
            })?;
            Ok(format!(
                "max gap {:.5} (oracle {oracle_gap:.5}), verdict {}; rejected with c = {:.6}",
                r.max_gap,
                r.verdict.as_str(),
                constraint.value()
            ))
        }
        Err(e) => Err(format!("wrong rejection: {e}")),
        Ok(_) => Err("example2 profile accepted".into()),
    }
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let reparam = (
        ok(HalfLineAction::new(PlHomeo::random(&mut rng, 3), 2.0))?,
        ok(HalfLineAction::new(PlHomeo::random(&mut rng, 3), 0.5))?,
    );
    let mut worst: f64 = 0.0;
    for (psi0, psi1) in [(HalfLineAction::expanding(), HalfLineAction::contracting()), reparam] {
        let flow: ProductFlow = ok(build_standard_extension(psi0.clone(), psi1.clone()))?;
        for _ in 0..1000 {
            let x = rng.gen_range(-30.0f64..30.0).exp2();
            let y = rng.gen_range(-30.0f64..30.0).exp2();
            let (x1, y1) = flow.time_one((x, y));
            worst = worst.max((x1 - 2.0 * x).abs()).max((y1 - y / 2.0).abs());
            let t = rng.gen_range(-3.0..3.0);
            ensure(flow.eval(t, (x, 0.0)) == (psi0.eval(t, x), 0.0), || format!("x boundary at t = {t}"))?;
            ensure(flow.eval(t, (0.0, y)) == (0.0, psi1.eval(t, y)), || format!("y boundary at t = {t}"))?;
        }
    }
    ensure(worst <= 1e-12, || format!("time-one residual {worst:e}"))?;
    let bad = ok(HalfLineAction::new(PlHomeo::identity(), 3.0))?;
    match build_standard_extension(bad, HalfLineAction::contracting()) {
        Err(Error::TimeOneMismatch { axis, sample, got, expected }) => Ok(format!(
            "model + reparametrized accepted, time-one residual {worst:e}; base 3 rejected at {axis} = {sample} ({got} vs {expected})"
        )),
        Err(e) => Err(format!("wrong rejection: {e}")),
        Ok(_) => Err("mismatched pair accepted".into()),
    }
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let psi0 = random_non_rotation(&mut rng);
    let psi1 = random_non_rotation(&mut rng);
    ensure(psi0 != psi1, || "identical boundary actions".into())?;
    let a = AnnulusAction::vertical_pair(ok(example1_profile(8))?, psi0, psi1);
    let r = verify_commutation(&a, CirclePoint::new(0.0), 64);
    ensure(r.residual > 1e-3, || format!("residual {:e}", r.residual))?;
    Ok(format!("residual {:.4} at t = {}, x = {}", r.residual, r.worst_t, r.worst_x))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("sigma values", criterion_1),
        ("witness invariance", criterion_2),
        ("sigma oracle", criterion_3),
        ("realization", criterion_4),
        ("pi identity", criterion_5),
        ("example-1 construction", criterion_6),
        ("horizontal points", criterion_7),
        ("V_n property", criterion_8),
        ("rigidity", criterion_9),
        ("standard extension", criterion_10),
        ("negative control", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name} ({secs:.2}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} ({secs:.2}s): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
