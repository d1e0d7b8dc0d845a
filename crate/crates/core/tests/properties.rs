use pdmp::bounds::{segment_bound, uniform_grid, upper_bound_grid, Envelope, EnvelopeKind, NodeData};
use pdmp::diff::Strategy as RateStrategy;
use pdmp::events::{decide, next_event, NextEvent, Thinning};
use pdmp::process::{advance, Flow, State};
use pdmp::rng::RandomStream;
use proptest::prelude::*;

fn vecs(d: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-5.0..5.0f64, d),
        prop::collection::vec(-2.0..2.0f64, d),
    )
}

fn state() -> impl Strategy<Value = State> {
    (1usize..6)
        .prop_flat_map(vecs)
        .prop_map(|(x, v)| State::new(x, v).unwrap())
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn flows_compose(s in state(), a in 0.0..5.0f64, b in 0.0..5.0f64) {
        for flow in [Flow::Linear, Flow::Circular] {
            let two = advance(flow, &advance(flow, &s, a), b);
            let one = advance(flow, &s, a + b);
            prop_assert!(sup_dist(&two.x, &one.x) < 1e-9);
            prop_assert!(sup_dist(&two.v, &one.v) < 1e-9);
        }
    }

    #[test]
    fn circular_flow_keeps_energy(s in state(), t in 0.0..20.0f64) {
        let energy = |s: &State| s.x.iter().chain(&s.v).map(|a| a * a).sum::<f64>();
        let moved = advance(Flow::Circular, &s, t);
        prop_assert!((energy(&moved) - energy(&s)).abs() < 1e-9);
    }

    #[test]
    fn next_event_inverts_the_integral(
        levels in prop::collection::vec(0.0..5.0f64, 1..60),
        t_max in 0.1..10.0f64,
        frac in 0.001..0.999f64,
    ) {
        let grid = uniform_grid(t_max, levels.len());
        let env = Envelope::new(grid, levels, EnvelopeKind::Grid).unwrap();
        prop_assume!(env.total() > 0.0);
        let e = frac * env.total();
        match next_event(&env, e) {
            NextEvent::Candidate { tau, .. } => {
                prop_assert!((env.integral_to(tau) - e).abs() < 1e-10 * (1.0 + e));
                prop_assert!(env.level_at(tau) > 0.0);
            }
            NextEvent::HorizonReached => prop_assert!(false, "budget below total"),
        }
        prop_assert_eq!(next_event(&env, env.total() * 1.001 + 1e-12), NextEvent::HorizonReached);
    }

    #[test]
    fn tangent_bound_dominates_concave_functions(
        peak in -3.0..3.0f64,
        curv in 0.0..10.0f64,
        centre in -1.0..2.0f64,
        t0 in 0.0..1.0f64,
        width in 0.01..1.0f64,
    ) {
        let f = |t: f64| peak - curv * (t - centre).powi(2);
        let df = |t: f64| -2.0 * curv * (t - centre);
        let t1 = t0 + width;
        let bound = segment_bound(t0, t1, f(t0), f(t1), df(t0), df(t1));
        let top = (0..=200)
            .map(|k| f(t0 + width * k as f64 / 200.0))
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(bound >= top - 1e-9, "{bound} < {top}");
    }
}

fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn ks_one_sample(mut a: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    a.sort_by(f64::total_cmp);
    let n = a.len() as f64;
    a.iter()
        .enumerate()
        .map(|(k, &t)| {
            let f = cdf(t);
            (f - k as f64 / n).abs().max((f - (k + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// First accepted time under `env` for the rate `rate`, accumulating the
/// exponential budget across rejections.
fn first_event(env: &Envelope, rate: impl Fn(f64) -> f64, stream: &mut RandomStream) -> f64 {
    let mut e = stream.exp1();
    loop {
        let NextEvent::Candidate { tau, .. } = next_event(env, e) else {
            panic!("horizon reached");
        };
        match decide(rate(tau), env.level_at(tau), stream).outcome {
            Thinning::Accept => return tau,
            Thinning::Reject => e += stream.exp1(),
            Thinning::BoundError(r) => panic!("envelope broken: {r}"),
        }
    }
}

#[test]
fn thinning_a_linear_rate_matches_direct_inversion() {
    let (a, b) = (0.5, 1.0);
    let rate = |t: f64| a + b * t;
    let nodes = NodeData::from_fn(&uniform_grid(20.0, 50), rate, |_| b);
    let env = upper_bound_grid(&nodes, RateStrategy::Plain, 0.0).unwrap();
    let mut stream = RandomStream::new(31);
    let thinned: Vec<f64> = (0..10_000).map(|_| first_event(&env, rate, &mut stream)).collect();
    let direct: Vec<f64> = (0..10_000)
        .map(|_| {
            let e = stream.exp1();
            (-a + (a * a + 2.0 * b * e).sqrt()) / b
        })
        .collect();
    let d = ks_two_sample(thinned, direct);
    assert!(d < 0.02, "{d}");
}

#[test]
fn accumulated_budget_matches_fresh_clocks() {
    let env = Envelope::constant(1e3, 2.0).unwrap();
    let mut stream = RandomStream::new(32);
    let accumulated: Vec<f64> = (0..10_000)
        .map(|_| first_event(&env, |_| 1.0, &mut stream))
        .collect();
    let restarted: Vec<f64> = (0..10_000)
        .map(|_| {
            let mut t = 0.0;
            loop {
                let NextEvent::Candidate { tau, .. } = next_event(&env, stream.exp1()) else {
                    panic!("horizon reached");
                };
                t += tau;
                if decide(1.0, 2.0, &mut stream).outcome == Thinning::Accept {
                    return t;
                }
            }
        })
        .collect();
    let d = ks_two_sample(accumulated, restarted);
    assert!(d < 0.02, "{d}");
}

#[test]
fn thinned_homogeneous_process_has_exponential_gaps() {
    let env = Envelope::constant(1e3, 2.0).unwrap();
    let mut stream = RandomStream::new(33);
    let n = 100_000;
    let gaps: Vec<f64> = (0..n).map(|_| first_event(&env, |_| 1.0, &mut stream)).collect();
    let d = ks_one_sample(gaps, |t| 1.0 - (-t).exp());
    // asymptotic 1% critical value of the one-sample statistic
    let critical = 1.628 / (n as f64).sqrt();
    assert!(d < critical, "{d} >= {critical}");
}
