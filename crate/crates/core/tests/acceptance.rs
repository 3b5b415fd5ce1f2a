//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the lines are always printed.

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use incsafe::barrier::{boundary_extract, clarke_gradient, BarrierCandidate, ClarkeOptions, Smoothness};
use incsafe::checker::{check_nominal, check_strong_at, check_uniform_unweighted, synthesize_margin, Verdict};
use incsafe::cli::{run, Pipeline, RunFlags};
use incsafe::expr::{Expr, Predicate, VarTable};
use incsafe::flow::{falsify, integrate, reach_interval_1d, Budget, Hint, SelectionPolicy};
use incsafe::linalg::{BoxRegion, Directions};
use incsafe::modulus::{build_modulus, random_pairs, verify_modulus, Modulus, ModulusOptions};
use incsafe::scenarios::builtin;
use incsafe::svmap::{ImageSpec, Margin, PerturbMode, PerturbedSystem, Piece, SetValuedMap};
use incsafe::ConvexCompactSet;

type Outcome = Result<String, String>;

fn ok_if(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn e<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn c1_example1_safety() -> Outcome {
    let b = e(builtin("example1"))?;
    let s = b.scenario();
    let t = Instant::now();
    let g = e(boundary_extract(s))?;
    let r = e(check_nominal(s, &g))?;
    let dt = t.elapsed().as_secs_f64();
    let tol = s.tol.nominal;
    ok_if(
        r.verdict == Verdict::Pass && r.sigma >= 2.0 - tol && dt < 1.0,
        format!("sigma = {:.6} (>= 2 - {tol:e}), grid {}, {dt:.3} s", r.sigma, s.resolution[0]),
    )
}

fn c2_example1_robust() -> Outcome {
    let b = e(builtin("example1"))?;
    let s = b.scenario();
    let sys = PerturbedSystem::new(s.map.clone(), Margin::Constant(1.0), PerturbMode::Image);
    let budget = Budget {
        starts: 200,
        horizon: 5.0,
        ..Budget::default()
    };
    let out = e(falsify(&sys, s, &budget, &b.hints))?;
    ok_if(
        !out.falsified,
        format!("{} runs, deepest exit {:.3e} vs tau_exit {:.3e}", out.runs, out.deepest, out.deepest_tau),
    )
}

fn c3_example1_strong_unsafe() -> Outcome {
    let b = e(builtin("example1"))?;
    let s = b.scenario();
    let horizon = 1.0;
    let mut details = Vec::new();
    let mut all = true;
    for eps in [0.5, 0.1, 0.01] {
        let h = f64::min(1e-3, eps / 100.0);
        let sys = PerturbedSystem::new(s.map.clone(), Margin::Constant(eps), PerturbMode::Strong);
        let hint = Hint {
            start: vec![0.0],
            policy: SelectionPolicy::Constant(vec![1.0]),
        };
        let budget = Budget {
            starts: 0,
            horizon,
            step: h,
            ..Budget::default()
        };
        let out = e(falsify(&sys, s, &budget, &[hint]))?;
        match out.witness {
            Some(w) => {
                let good = w.start == vec![0.0]
                    && w.exit_depth >= 0.9 * eps.min(horizon)
                    && w.escape_time <= eps + 10.0 * h;
                all &= good;
                details.push(format!(
                    "eps {eps}: depth {:.4} escape {:.4}",
                    w.exit_depth, w.escape_time
                ));
            }
            None => {
                all = false;
                details.push(format!("eps {eps}: no witness"));
            }
        }
    }
    let g = e(boundary_extract(s))?;
    let m = e(synthesize_margin(s, &g, &b.compiled.margin, &ClarkeOptions::default()))?;
    let at_zero = m.cells.iter().find(|c| c.lo[0] <= 0.0 && 0.0 <= c.hi[0]);
    let zero_ok = at_zero.is_some_and(|c| c.delta == 0.0);
    details.push(format!("delta at x = 0: {:?}", at_zero.map(|c| c.delta)));
    ok_if(all && zero_ok, details.join("; "))
}

fn c4_example2_uniform() -> Outcome {
    let b = e(builtin("example2"))?;
    let s = b.scenario();
    let g = e(boundary_extract(s))?;
    let r = e(check_uniform_unweighted(s, &g))?;
    ok_if(
        (r.sigma - 1.0).abs() <= 1e-6 && s.region.lo[0] == -10.0 && s.region.hi[0] == 10.0,
        format!("sigma = {:.9} on |x1| <= 10 ({} samples)", r.sigma, r.samples),
    )
}

fn c5_example2_strong_unsafe() -> Outcome {
    let b = e(builtin("example2"))?;
    let s = b.scenario();
    let eps = 0.04;
    let sys = b.compiled.system.clone();
    let hint = b.hints[0].clone();
    let x0 = hint.start.clone();
    let grad = s.barrier.gradient(&x0).ok_or("no gradient")?;
    let t = e(integrate(&sys, Some(&s.barrier), &s.region, &x0, 1e-3, 1e-3, &hint.policy))?;
    let analytic: f64 = grad.iter().zip(&t.velocities[0]).map(|(a, b)| a * b).sum();
    let sampled = e(e(sys.image_strong(&x0))?.support(&grad))?;
    let out = e(falsify(&sys, s, &b.config.falsify, &b.hints))?;
    let crossed = out.witness.as_ref().is_some_and(|w| {
        w.run == 0 && w.trajectory.states.iter().any(|x| s.in_unsafe(x))
    });
    ok_if(
        (analytic - eps).abs() <= 1e-9 && (sampled - eps).abs() <= 1e-3 && crossed,
        format!(
            "x0 = ({:.6}, {}), dB/dt = {analytic:.12}, sampled support = {sampled:.6}, hinted run crosses: {crossed}",
            x0[0], x0[1]
        ),
    )
}

fn map_1d(pieces: Vec<(&str, ImageSpec)>) -> SetValuedMap {
    let v = VarTable::state(1);
    SetValuedMap::new(
        1,
        pieces
            .into_iter()
            .map(|(p, i)| Piece::new(Predicate::parse(p, &v).unwrap(), i))
            .collect(),
    )
    .unwrap()
}

fn expr_map(src: &str) -> SetValuedMap {
    let v = VarTable::state(1);
    map_1d(vec![(
        "true",
        ImageSpec::Point {
            components: vec![Expr::parse(src, &v).unwrap()],
            radius: 0.0,
        },
    )])
}

fn c6_modulus() -> Outcome {
    let region = BoxRegion::new(vec![-3.0], vec![3.0]).unwrap();
    let maps = vec![
        ("identity", expr_map("x1")),
        ("constant", expr_map("1.5")),
        ("affine 2x", expr_map("2*x1")),
        ("quadratic", expr_map("x1^2")),
        ("example1", e(builtin("example1"))?.scenario().map.clone()),
    ];
    let mut details = Vec::new();
    let mut all = true;
    for (name, f) in maps {
        let t = Instant::now();
        let opts = ModulusOptions::for_dim(1).with_region(region.clone());
        let m = e(build_modulus(&f, &opts))?;
        let pairs = random_pairs(&region, opts.delta_max, 1000, 11);
        let chk = e(verify_modulus(&f, &m, &pairs, opts.density, 1e-9))?;
        let l2_min = region
            .grid(&[601])
            .iter()
            .map(|x| m.lambda2(x))
            .fold(f64::INFINITY, f64::min);
        let dt = t.elapsed().as_secs_f64();
        let good = chk.worst_slack >= -1e-9
            && m.lambda1(0.0) == 0.0
            && l2_min >= 1.0
            && m.c_monotone()
            && dt < 30.0;
        all &= good;
        details.push(format!("{name}: slack {:.2e}, {dt:.2} s", chk.worst_slack));
    }
    ok_if(all, details.join("; "))
}

fn c7_geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bad = 0usize;
    for _ in 0..10_000 {
        let mut iv = || {
            let a: f64 = rng.gen_range(-10.0..10.0);
            let b: f64 = rng.gen_range(-10.0..10.0);
            (a.min(b), a.max(b))
        };
        let (a, b) = iv();
        let (c, d) = iv();
        let s = ConvexCompactSet::interval(a, b).unwrap();
        let t = ConvexCompactSet::interval(c, d).unwrap();
        let h = s.hausdorff(&t).unwrap();
        if h != (a - c).abs().max((b - d).abs()) {
            bad += 1;
        }
        for p in [c, d, 0.5 * (c + d)] {
            if s.contains(&[p], 0.0).unwrap() != (a <= p && p <= b) {
                bad += 1;
            }
        }
    }
    let dirs = Directions::new(2, 256);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let set = |rng: &mut ChaCha8Rng| {
            let k = rng.gen_range(1..6);
            let pts = (0..k)
                .map(|_| vec![rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)])
                .collect();
            ConvexCompactSet::new(pts, rng.gen_range(0.0..2.0)).unwrap()
        };
        let p = set(&mut rng);
        let q = set(&mut rng);
        let sum = p.minkowski_sum(&q).unwrap();
        for d in dirs.iter() {
            let lhs = sum.support(d).unwrap();
            let rhs = p.support(d).unwrap() + q.support(d).unwrap();
            worst = worst.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
        }
    }
    ok_if(
        bad == 0 && worst <= 1e-14,
        format!("interval mismatches {bad} of 40000; support additivity worst rel. gap {worst:.1e}"),
    )
}

fn c8_clarke() -> Outcome {
    let v = VarTable::state(1);
    let b = BarrierCandidate::new(
        1,
        Expr::parse("abs(x1)", &v).unwrap(),
        Some(vec![Expr::parse("sign(x1)", &v).unwrap()]),
        Some(Predicate::parse("x1 == 0", &v).unwrap()),
        Smoothness::Lipschitz,
    )
    .map_err(|e| e.to_string())?;
    let z = e(clarke_gradient(&b, &[0.0], 1e-3, 64, 0))?;
    let h = e(z.hausdorff(&ConvexCompactSet::interval(-1.0, 1.0).unwrap()))?;
    ok_if(h <= 0.05, format!("hausdorff = {h:.3e}"))
}

fn c9_margin() -> Outcome {
    let b = e(builtin("linear-stable"))?;
    let s = b.scenario();
    let g = e(boundary_extract(s))?;
    let m = e(synthesize_margin(s, &g, &b.compiled.margin, &ClarkeOptions::default()))?;
    let re = e(check_strong_at(s, &g, m.eps_star / 2.0, b.compiled.margin.density, &ClarkeOptions::default()))?;
    ok_if(
        (m.eps_star - 0.5).abs() <= 0.01 && re.verdict == Verdict::Pass,
        format!("eps* = {:.5}, re-check at eps*/2: {} (sigma {:.4})", m.eps_star, re.verdict.as_str(), re.sigma),
    )
}

fn c10_oracle() -> Outcome {
    let (horizon, h) = (1.0, 1e-2);
    let mut details = Vec::new();
    let mut all = true;
    for (name, x0) in [("example1", (-2.0, 0.0)), ("noisy-loop", (-1.0, 1.0)), ("linear-stable", (0.0, 1.0))] {
        let b = e(builtin(name))?;
        let s = b.scenario();
        let sys = b.compiled.system.clone();
        let tube = e(reach_interval_1d(&sys, x0, horizon, h))?;
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut outside = 0;
        for k in 0..100u64 {
            let start = rng.gen_range(x0.0..=x0.1);
            let policy = SelectionPolicy::RandomExtreme { seed: k };
            let t = e(integrate(&sys, Some(&s.barrier), &s.region, &[start], horizon, h, &policy))?;
            let slack = h * t.velocity_bound();
            for (x, (lo, hi)) in t.states.iter().zip(&tube) {
                if x[0] < lo - slack || x[0] > hi + slack {
                    outside += 1;
                }
            }
        }
        all &= outside == 0;
        details.push(format!("{name}: {outside} states outside"));
    }
    ok_if(all, details.join("; "))
}

fn c11_determinism() -> Outcome {
    let cfg: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios", "example1.json"]
        .iter()
        .collect();
    let dirs = [e(tempfile::tempdir())?, e(tempfile::tempdir())?];
    let mut texts = Vec::new();
    for d in &dirs {
        let flags = RunFlags {
            seed: Some(7),
            out: Some(d.path().to_path_buf()),
            ..RunFlags::default()
        };
        let out = e(run(cfg.to_str().unwrap(), Pipeline::All, &flags))?;
        let text = e(std::fs::read_to_string(&out.bundle_path))?;
        let stripped: String = text
            .lines()
            .filter(|l| !l.trim_start().starts_with("\"generated_at_unix\""))
            .collect::<Vec<_>>()
            .join("\n");
        texts.push(stripped);
    }
    ok_if(
        texts[0] == texts[1],
        format!("two bundles of {} bytes compared", texts[0].len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("Example 1 nominal safety", c1_example1_safety),
        ("Example 1 robust safety", c2_example1_robust),
        ("Example 1 strong robust unsafety", c3_example1_strong_unsafe),
        ("Example 2 uniform robust safety", c4_example2_uniform),
        ("Example 2 uniform strong unsafety", c5_example2_strong_unsafe),
        ("modulus pipeline", c6_modulus),
        ("geometry kernel", c7_geometry),
        ("Clarke approximation", c8_clarke),
        ("margin synthesis", c9_margin),
        ("oracle consistency", c10_oracle),
        ("determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = f();
        let dt = t.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d} [{dt:.2} s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d} [{dt:.2} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
