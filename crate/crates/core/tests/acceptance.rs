//! Acceptance suite. Each test prints one `PASS`/`FAIL` line and then asserts.
//!
//! Run with `cargo test -p pdmp --test acceptance -- --nocapture` to see the lines.

use std::f64::consts::PI;

use pdmp::bounds::{uniform_grid, upper_bound_grid, Envelope, EnvelopeKind, NodeData};
use pdmp::diff::{DerivativeBackend, Potential, RateEvaluator, RateForm, Strategy};
use pdmp::events::{next_event, NextEvent};
use pdmp::experiments::{execute, Cell, Plan};
use pdmp::models::{ModelSpec, PdmpModel};
use pdmp::process::{advance, Flow, Skeleton, State};
use pdmp::rng::RandomStream;
use pdmp::sampler::{run, run_autozz_baseline, RunStats, SamplerConfig};
use pdmp::stats::{path_mean, path_second_moment};
use pdmp::targets::{Banana, Flat, GaussianMixture, ReferenceAdjusted, StandardGaussian, TargetSpec};

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id} [{name}]: {verdict} -- {detail}");
    assert!(pass, "criterion {id} [{name}] failed: {detail}");
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn ks_distance(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn sampler(n_events: usize, n_segments: usize, seed: u64) -> SamplerConfig {
    SamplerConfig {
        n_events,
        n_segments,
        seed,
        ..SamplerConfig::default()
    }
}

#[test]
fn c1_thinning_law() {
    // bps with refresh 1 on U = x^2 / 2 from (0, 1): the rate is 1 + t
    let model = ModelSpec::named("bps").with_refresh(1.0).build().unwrap();
    let pot = StandardGaussian::new(1);
    let draws: Vec<f64> = (0..10_000u64)
        .map(|seed| {
            let cfg = SamplerConfig {
                t_max: 0.5,
                initial_position: Some(vec![0.0]),
                initial_velocity: Some(vec![1.0]),
                ..sampler(1, 5, seed)
            };
            run(model.as_ref(), &pot, &cfg).unwrap().0.events[0].t
        })
        .collect();
    let ks = ks_distance(draws, |t| 1.0 - (-(t + 0.5 * t * t)).exp());
    report(1, "thinning law", ks < 0.02, &format!("KS distance {ks:.4} (< 0.02)"));
}

fn dense_violations(
    f: &dyn Fn(f64) -> f64,
    df: &dyn Fn(f64) -> f64,
    t_max: f64,
    n: usize,
    checkpoints: usize,
) -> usize {
    let nodes = NodeData::from_fn(&uniform_grid(t_max, n), f, df);
    let env = upper_bound_grid(&nodes, Strategy::Plain, 0.0).unwrap();
    (0..checkpoints)
        .filter(|&j| {
            let t = t_max * j as f64 / (checkpoints - 1) as f64;
            f(t) > env.level_at(t) + 1e-12
        })
        .count()
}

/// Points of `Z` (local maxima and inflections) of `a t^3 + b t^2 + c t` in `(0, t_max)`.
fn cubic_z(a: f64, b: f64, c: f64, t_max: f64) -> Vec<f64> {
    let mut z = vec![-b / (3.0 * a)];
    let disc = 4.0 * b * b - 12.0 * a * c;
    if disc > 0.0 {
        for s in [-1.0, 1.0] {
            let r = (-2.0 * b + s * disc.sqrt()) / (6.0 * a);
            if 6.0 * a * r + 2.0 * b < 0.0 {
                z.push(r);
            }
        }
    }
    z.retain(|&t| t > 0.0 && t < t_max);
    z
}

#[test]
fn c2_delta_spacing_dominance() {
    let checkpoints = 10_000;
    let mut worst = 0;
    let mut functions = 0;
    // sine battery: Z has gap pi / (2 w)
    for k in 0..20 {
        let w = 1.0 + k as f64 * 0.7;
        let phase = 0.37 * k as f64;
        let f = move |t: f64| (w * t + phase).sin();
        let df = move |t: f64| w * (w * t + phase).cos();
        let delta = PI / (2.0 * w);
        let t_max = 5.0;
        let n = (t_max / delta).floor() as usize + 1;
        worst = worst.max(dense_violations(&f, &df, t_max, n, checkpoints));
        functions += 1;
    }
    // cubic battery
    let mut rng = RandomStream::new(11);
    let mut cubics = 0;
    while cubics < 20 {
        let (a, b, c) = (rng.uniform_range(-3.0, 3.0), rng.uniform_range(-3.0, 3.0), rng.uniform_range(-3.0, 3.0));
        if a.abs() < 0.1 {
            continue;
        }
        let t_max = 2.0;
        let z = cubic_z(a, b, c, t_max);
        let delta = if z.len() == 2 { (z[0] - z[1]).abs() } else { f64::INFINITY };
        if delta < 1e-2 {
            continue;
        }
        let n = if delta.is_finite() { (t_max / delta).floor() as usize + 1 } else { 2 };
        let f = move |t: f64| ((a * t + b) * t + c) * t;
        let df = move |t: f64| (3.0 * a * t + 2.0 * b) * t + c;
        worst = worst.max(dense_violations(&f, &df, t_max, n, checkpoints));
        cubics += 1;
        functions += 1;
    }
    // spacing about twice delta: the hypothesis fails and so can the bound
    let mut constructed = 0;
    for k in 0..100 {
        let phase = 2.0 * PI * k as f64 / 100.0;
        let w = 3.0;
        let f = move |t: f64| (w * t + phase).sin();
        let df = move |t: f64| w * (w * t + phase).cos();
        let delta = PI / (2.0 * w);
        let n = (2.0 / (2.0 * delta)).ceil() as usize;
        if dense_violations(&f, &df, 2.0, n, checkpoints) > 0 {
            constructed += 1;
        }
    }
    report(
        2,
        "delta-spacing dominance",
        worst == 0 && constructed >= 1,
        &format!(
            "{functions} functions with spacing < delta: max violations {worst}; \
             spacing ~2 delta: {constructed}/100 phases violate"
        ),
    );
}

#[test]
fn c3_convex_guarantee() {
    let mut rng = RandomStream::new(3);
    let targets: Vec<Box<dyn Potential>> = vec![
        Box::new(StandardGaussian::new(3)),
        Box::new(GaussianMixture::new(vec![1.0], vec![vec![1.0, -2.0]], vec![0.3]).unwrap()),
    ];
    let setups = [
        (RateForm::Coordinatewise, Strategy::Plain),
        (RateForm::Coordinatewise, Strategy::Vectorized),
        (RateForm::Coordinatewise, Strategy::VectorizedSigned),
        (RateForm::Inner { refresh: 0.5 }, Strategy::Plain),
        (RateForm::Inner { refresh: 0.5 }, Strategy::Signed),
    ];
    let mut violations = 0;
    let mut checked = 0;
    for pot in &targets {
        let d = pot.dim();
        for &(form, strategy) in &setups {
            let mut eval =
                RateEvaluator::new(pot.as_ref(), Flow::Linear, form, strategy, DerivativeBackend::Auto).unwrap();
            for _ in 0..1000 {
                let x: Vec<f64> = rng.normal_vec(d).iter().map(|a| 3.0 * a).collect();
                let v = match form {
                    RateForm::Coordinatewise => rng.signs(d),
                    RateForm::Inner { .. } => rng.normal_vec(d),
                };
                let s = State::new(x, v).unwrap();
                for t_max in [0.1, 1.0, 10.0] {
                    let nodes = eval.grid_nodes(&s, &uniform_grid(t_max, 2)).unwrap();
                    let env = upper_bound_grid(&nodes, strategy, form.refresh()).unwrap();
                    for j in 0..=50 {
                        let t = t_max * j as f64 / 50.0;
                        let rate = eval.rate(&s, t).unwrap();
                        checked += 1;
                        if rate > env.level_at(t) * (1.0 + 1e-12) + 1e-12 {
                            violations += 1;
                        }
                    }
                }
            }
        }
    }
    report(
        3,
        "convex-potential guarantee",
        violations == 0,
        &format!("{violations} violations over {checked} checkpoints (N = 2)"),
    );
}

#[test]
fn c4_stationarity() {
    let cases: Vec<(&str, Box<dyn PdmpModel>, Box<dyn Potential>)> = vec![
        ("zigzag", ModelSpec::named("zigzag").build().unwrap(), Box::new(StandardGaussian::new(2))),
        ("bps", ModelSpec::named("bps").with_refresh(1.0).build().unwrap(), Box::new(StandardGaussian::new(2))),
        ("fec", ModelSpec::named("fec").build().unwrap(), Box::new(StandardGaussian::new(2))),
        // the reference measure is already the standard Gaussian
        (
            "boomerang",
            ModelSpec::named("boomerang").with_refresh(1.0).build().unwrap(),
            Box::new(ReferenceAdjusted::new(StandardGaussian::new(2))),
        ),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, model, pot) in &cases {
        let (sk, _) = run(model.as_ref(), pot.as_ref(), &sampler(100_000, 10, 21)).unwrap();
        let m = path_mean(&sk, model.flow()).unwrap();
        let m2 = path_second_moment(&sk, model.flow()).unwrap();
        let good = m.iter().all(|a| a.abs() <= 0.05) && m2.iter().all(|a| (0.9..=1.1).contains(a));
        ok &= good;
        detail.push(format!(
            "{name}: mean ({:.3}, {:.3}) second ({:.3}, {:.3})",
            m[0], m[1], m2[0], m2[1]
        ));
    }
    report(4, "stationarity", ok, &detail.join("; "));
}

#[test]
fn c5_horizon_tradeoff() {
    let pot = StandardGaussian::new(30);
    let zz = ModelSpec::named("zigzag").build().unwrap();
    let grid = [0.01, 0.1, 1.0, 10.0];
    let baseline = |t_max: f64, adapt: bool| -> RunStats {
        let cfg = SamplerConfig {
            t_max,
            adapt,
            alpha_plus: if adapt { 1.1 } else { 1.0 },
            alpha_minus: if adapt { 1.1 } else { 1.0 },
            ..sampler(100_000, 0, 5)
        };
        run_autozz_baseline(zz.as_ref(), &pot, &cfg).unwrap().1
    };
    let adaptive: Vec<u64> = grid.iter().map(|&t| baseline(t, true).total_grad_evals()).collect();
    let fixed: Vec<RunStats> = grid.iter().map(|&t| baseline(t, false)).collect();
    let spread = *adaptive.iter().max().unwrap() as f64 / *adaptive.iter().min().unwrap() as f64;
    let opt: Vec<u64> = fixed.iter().map(|s| s.n_opt_evals).collect();
    let tpp: Vec<u64> = fixed.iter().map(|s| s.n_thinning_evals).collect();
    let opt_down = opt.windows(2).all(|w| w[1] < w[0]);
    let tpp_up = tpp.windows(2).all(|w| w[1] > w[0]);
    report(
        5,
        "adaptive flatness and fixed-horizon trade-off",
        spread < 2.0 && opt_down && tpp_up,
        &format!("adaptive totals {adaptive:?} (max/min {spread:.3}); fixed C_opt {opt:?}; C_tpp {tpp:?}"),
    );
}

#[test]
fn c6_two_scale_bias() {
    let pot = GaussianMixture::two_scale(0.03).unwrap();
    let bps = ModelSpec::named("bps").with_refresh(0.1).build().unwrap();
    let brent = |t_max: f64, n_events: usize, seed: u64| SamplerConfig {
        t_max,
        adapt: false,
        ..sampler(n_events, 0, seed)
    };
    let grid = |seed: u64| SamplerConfig {
        strategy: Some(Strategy::Signed),
        ..sampler(1_000_000, 50, seed)
    };

    // (a) Brent, fixed t_max = 1: the narrow mode is missed
    let mut a_means = Vec::new();
    for seed in 0..3 {
        let (sk, _) = run(bps.as_ref(), &pot, &brent(1.0, 100_000, seed)).unwrap();
        a_means.push(path_mean(&sk, Flow::Linear).unwrap());
    }
    let a_ok = a_means.iter().all(|m| m.iter().all(|&x| x < 0.2));

    // (b) grid N = 50, adaptive: close to the true mean (0.5, 0.5)
    let (sk, b_stats) = run(bps.as_ref(), &pot, &grid(1)).unwrap();
    let b_mean = path_mean(&sk, Flow::Linear).unwrap();
    let b_ok = b_mean.iter().all(|x| (0.4..=0.6).contains(x));

    // (c) wall time against Brent at t_max = 0.01, same number of events;
    // the faster of two repeats on each side damps scheduler noise
    let (_, c_stats) = run(bps.as_ref(), &pot, &brent(0.01, 1_000_000, 1)).unwrap();
    let (_, b2) = run(bps.as_ref(), &pot, &grid(1)).unwrap();
    let (_, c2) = run(bps.as_ref(), &pot, &brent(0.01, 1_000_000, 1)).unwrap();
    let b_wall = b_stats.wall_time.min(b2.wall_time);
    let c_wall = c_stats.wall_time.min(c2.wall_time);
    let c_ok = b_wall < c_wall;

    let fmt = |m: &Vec<f64>| format!("({:.3}, {:.3})", m[0], m[1]);
    report(
        6,
        "two-scale mixture bias",
        a_ok && b_ok && c_ok,
        &format!(
            "(a) {} brent t_max=1 means {}; (b) {} grid N=50 mean {}; (c) {} grid {:.2}s ({} grads) vs brent t_max=0.01 {:.2}s ({} grads)",
            if a_ok { "ok" } else { "FAILED" },
            a_means.iter().map(fmt).collect::<Vec<_>>().join(" "),
            if b_ok { "ok" } else { "FAILED" },
            fmt(&b_mean),
            if c_ok { "ok" } else { "FAILED" },
            b_wall,
            b_stats.total_grad_evals(),
            c_wall,
            c_stats.total_grad_evals(),
        ),
    );
}

fn error_sweep(model: ModelSpec, adjust: bool, strategies: &[Strategy]) -> Vec<(Strategy, usize, Vec<u64>)> {
    let mut target = TargetSpec::named("local_mixture_20", None);
    target.boomerang_adjust = adjust;
    let mut cells = Vec::new();
    let mut keys = Vec::new();
    for &s in strategies {
        for n in [5, 10, 20, 50] {
            cells.push(Cell {
                model: model.clone(),
                target: target.clone(),
                sampler: SamplerConfig {
                    strategy: Some(s),
                    ..sampler(100_000, n, 0)
                },
                baseline: false,
            });
            keys.push((s, n));
        }
    }
    let plan = Plan {
        name: "errors".into(),
        cells,
        replicates: 5,
    };
    let out = execute(plan, 77).unwrap();
    keys.into_iter()
        .enumerate()
        .map(|(c, (s, n))| {
            let errs = out.rows.iter().filter(|r| r.cell == c).map(|r| r.n_bound_errors).collect();
            (s, n, errs)
        })
        .collect()
}

#[test]
fn c7_error_ordering() {
    let zz = error_sweep(
        ModelSpec::named("zigzag"),
        false,
        &[Strategy::Plain, Strategy::Vectorized, Strategy::VectorizedSigned],
    );
    let med = |s: Strategy, n: usize| {
        let (_, _, e) = zz.iter().find(|(a, b, _)| *a == s && *b == n).unwrap();
        median(e.iter().map(|&x| x as f64).collect())
    };
    let ns = [5, 10, 20, 50];
    let order_ok = ns.iter().all(|&n| {
        med(Strategy::VectorizedSigned, n) <= med(Strategy::Vectorized, n)
            && med(Strategy::Vectorized, n) <= med(Strategy::Plain, n)
    });
    let mono_ok = [Strategy::Plain, Strategy::Vectorized, Strategy::VectorizedSigned]
        .iter()
        .all(|&s| ns.windows(2).all(|w| med(s, w[1]) <= med(s, w[0])));
    let zz_table: Vec<String> = [Strategy::Plain, Strategy::Vectorized, Strategy::VectorizedSigned]
        .iter()
        .map(|&s| format!("{} {:?}", s.name(), ns.map(|n| med(s, n))))
        .collect();

    let boom = error_sweep(
        ModelSpec::named("boomerang").with_refresh(0.1),
        true,
        &[Strategy::Plain, Strategy::Signed],
    );
    let signed: Vec<(usize, Vec<u64>)> = boom
        .iter()
        .filter(|(s, _, _)| *s == Strategy::Signed)
        .map(|(_, n, e)| (*n, e.clone()))
        .collect();
    let plain: Vec<(usize, Vec<u64>)> = boom
        .iter()
        .filter(|(s, _, _)| *s == Strategy::Plain)
        .map(|(_, n, e)| (*n, e.clone()))
        .collect();
    let boom_ok = signed.iter().all(|(_, e)| e.iter().all(|&x| x == 0));
    report(
        7,
        "bound-error ordering",
        order_ok && mono_ok && boom_ok,
        &format!(
            "zigzag medians by N {ns:?}: {} (ordering {}, non-increasing {}); boomerang signed errors per run {signed:?} ({}), plain {plain:?}",
            zz_table.join("; "),
            if order_ok { "ok" } else { "FAILED" },
            if mono_ok { "ok" } else { "FAILED" },
            if boom_ok { "ok" } else { "FAILED" },
        ),
    );
}

#[test]
fn c8_high_dimensional_trends() {
    let fec = ModelSpec::named("fec").build().unwrap();
    let pot = Banana::new(30);
    let stats = |n: usize, strategy: Strategy| -> RunStats {
        let cfg = SamplerConfig {
            strategy: if n == 0 { None } else { Some(strategy) },
            ..sampler(100_000, n, 9)
        };
        run(fec.as_ref(), &pot, &cfg).unwrap().1
    };
    let mut ok = true;
    let mut lines = Vec::new();
    let brent = stats(0, Strategy::Plain);
    let ratio = |s: &RunStats| s.n_horizon_hits as f64 / s.n_rejections as f64;
    ok &= (3.0..=6.0).contains(&ratio(&brent));
    lines.push(format!("N=0: AR {:.3}, hits/rejections {:.2}", brent.thinning_ar(), ratio(&brent)));
    for strategy in [Strategy::Plain, Strategy::Signed] {
        let rows: Vec<RunStats> = [3, 5, 10, 20].iter().map(|&n| stats(n, strategy)).collect();
        let ar: Vec<f64> = rows.iter().map(|s| s.thinning_ar()).collect();
        let tm: Vec<f64> = rows.iter().map(|s| s.mean_tmax).collect();
        let ratios: Vec<f64> = rows.iter().map(ratio).collect();
        let good = ar.windows(2).all(|w| w[1] > w[0])
            && tm.windows(2).all(|w| w[1] > w[0])
            && ratios.iter().all(|r| (3.0..=6.0).contains(r))
            && ar[3] > brent.thinning_ar();
        ok &= good;
        let f = |v: &[f64]| v.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>().join(", ");
        lines.push(format!(
            "{} N=3,5,10,20: AR [{}], mean t_max [{}], hits/rejections [{}]",
            strategy.name(),
            f(&ar),
            f(&tm),
            f(&ratios)
        ));
    }
    report(8, "high-dimensional trends", ok, &lines.join("; "));
}

fn riemann_moments(sk: &Skeleton, flow: Flow, m: usize) -> (Vec<f64>, Vec<f64>) {
    let d = sk.dim();
    let (mut s1, mut s2) = (vec![0.0; d], vec![0.0; d]);
    let mut total = 0.0;
    for (x, v, dt) in sk.segments() {
        let s = State::new(x.to_vec(), v.to_vec()).unwrap();
        let h = dt / m as f64;
        for j in 0..m {
            let p = advance(flow, &s, (j as f64 + 0.5) * h);
            for i in 0..d {
                s1[i] += p.x[i] * h;
                s2[i] += p.x[i] * p.x[i] * h;
            }
        }
        total += dt;
    }
    (s1.iter().map(|a| a / total).collect(), s2.iter().map(|a| a / total).collect())
}

fn fd_gradient_error(p: &dyn Potential, x: &[f64]) -> f64 {
    let h = 1e-5;
    let mut g = vec![0.0; x.len()];
    p.gradient(x, &mut g);
    (0..x.len())
        .map(|i| {
            let (mut a, mut b) = (x.to_vec(), x.to_vec());
            a[i] += h;
            b[i] -= h;
            let fd = (p.value(&a) - p.value(&b)) / (2.0 * h);
            (fd - g[i]).abs() / (1.0 + g[i].abs())
        })
        .fold(0.0, f64::max)
}

fn fd_hvp_error(p: &dyn Potential, x: &[f64], w: &[f64]) -> f64 {
    let h = 1e-6;
    let d = x.len();
    let mut hv = vec![0.0; d];
    p.hessian_vector(x, w, &mut hv).unwrap();
    let (mut gp, mut gm) = (vec![0.0; d], vec![0.0; d]);
    let xp: Vec<f64> = x.iter().zip(w).map(|(a, b)| a + h * b).collect();
    let xm: Vec<f64> = x.iter().zip(w).map(|(a, b)| a - h * b).collect();
    p.gradient(&xp, &mut gp);
    p.gradient(&xm, &mut gm);
    (0..d)
        .map(|i| ((gp[i] - gm[i]) / (2.0 * h) - hv[i]).abs() / (1.0 + hv[i].abs()))
        .fold(0.0, f64::max)
}

#[test]
fn c9_oracles() {
    let mut rng = RandomStream::new(99);

    // next-event inversion against bisection on the envelope integral
    let mut worst_tau: f64 = 0.0;
    for _ in 0..1000 {
        let n = 1 + rng.index(20);
        let mut grid = vec![0.0];
        for _ in 0..n {
            let last = *grid.last().unwrap();
            grid.push(last + rng.uniform_range(0.01, 1.0));
        }
        let levels: Vec<f64> = (0..n)
            .map(|_| if rng.bernoulli(0.2) { 0.0 } else { rng.uniform_range(0.0, 5.0) })
            .collect();
        let Ok(env) = Envelope::new(grid, levels, EnvelopeKind::Grid) else {
            continue;
        };
        if env.total() <= 0.0 {
            continue;
        }
        let e = rng.uniform_range(0.0, env.total() * 1.1).max(1e-9);
        match next_event(&env, e) {
            NextEvent::HorizonReached => assert!(e >= env.total()),
            NextEvent::Candidate { tau, .. } => {
                let (mut lo, mut hi) = (0.0, env.t_max());
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if env.integral_to(mid) < e {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                worst_tau = worst_tau.max((tau - hi).abs());
            }
        }
    }

    // path moments against midpoint Riemann sums
    let mut worst_moment: f64 = 0.0;
    for k in 0..100 {
        let flow = if k % 2 == 0 { Flow::Linear } else { Flow::Circular };
        let d = 2;
        let mut state = State::new(rng.normal_vec(d), rng.normal_vec(d)).unwrap();
        let mut sk = Skeleton::new(state.clone());
        let mut t = 0.0;
        for _ in 0..10 {
            let dt = rng.uniform_range(0.05, 1.5);
            state = advance(flow, &state, dt);
            state.v = rng.normal_vec(d);
            t += dt;
            sk.push(t, &state);
        }
        let (m1, m2) = riemann_moments(&sk, flow, 4000);
        let a1 = path_mean(&sk, flow).unwrap();
        let a2 = path_second_moment(&sk, flow).unwrap();
        for i in 0..d {
            worst_moment = worst_moment
                .max((a1[i] - m1[i]).abs() / m1[i].abs().max(1.0))
                .max((a2[i] - m2[i]).abs() / m2[i].abs().max(1.0));
        }
    }

    // derivative checks
    let targets: Vec<Box<dyn Potential>> = vec![
        Box::new(StandardGaussian::new(4)),
        Box::new(Flat::new(3)),
        Box::new(Banana::new(5)),
        Box::new(GaussianMixture::two_scale(0.3).unwrap()),
        Box::new(GaussianMixture::local_mixture_20(2024)),
        Box::new(ReferenceAdjusted::new(Banana::new(3))),
    ];
    let mut worst_grad: f64 = 0.0;
    let mut worst_hvp: f64 = 0.0;
    let mut worst_channel: f64 = 0.0;
    for p in &targets {
        let d = p.dim();
        for _ in 0..100 {
            let x = rng.normal_vec(d);
            let w = rng.normal_vec(d);
            worst_grad = worst_grad.max(fd_gradient_error(p.as_ref(), &x));
            worst_hvp = worst_hvp.max(fd_hvp_error(p.as_ref(), &x, &w));
        }
        for flow in [Flow::Linear, Flow::Circular] {
            let form = RateForm::Inner { refresh: 0.0 };
            let mut eval = RateEvaluator::new(p.as_ref(), flow, form, Strategy::Signed, DerivativeBackend::Auto).unwrap();
            for _ in 0..50 {
                let s = State::new(rng.normal_vec(d), rng.normal_vec(d)).unwrap();
                let t = rng.uniform_range(0.0, 1.0);
                let h = 1e-6;
                let (mut y, mut dy) = ([0.0], [0.0]);
                let (mut yp, mut ym, mut dummy) = ([0.0], [0.0], [0.0]);
                eval.channels(&s, t, &mut y, &mut dy).unwrap();
                eval.channels(&s, t + h, &mut yp, &mut dummy).unwrap();
                eval.channels(&s, t - h, &mut ym, &mut dummy).unwrap();
                let fd = (yp[0] - ym[0]) / (2.0 * h);
                worst_channel = worst_channel.max((fd - dy[0]).abs() / (1.0 + dy[0].abs()));
            }
        }
    }
    let ok = worst_tau < 1e-10 && worst_moment < 1e-6 && worst_grad < 1e-5 && worst_hvp < 1e-5 && worst_channel < 1e-5;
    report(
        9,
        "oracles",
        ok,
        &format!(
            "next_event {worst_tau:.1e}; moments {worst_moment:.1e}; gradient FD {worst_grad:.1e}; HVP FD {worst_hvp:.1e}; rate derivative FD {worst_channel:.1e}"
        ),
    );
}
