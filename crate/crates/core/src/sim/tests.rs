use super::*;
use crate::config::PatienceModel;

fn mm1(lambda: f64, mu: f64) -> SystemConfig {
    SystemConfig::with_rates(lambda, lambda, mu, mu)
        .unwrap()
        .patience(PatienceModel::Constant(f64::INFINITY))
        .seed(11)
}

fn overloaded(seed: u64) -> SystemConfig {
    SystemConfig::from_total(6.0, 1.0).unwrap().patience(PatienceModel::Constant(2.0)).seed(seed)
}

#[test]
fn mm1_sojourn_matches_closed_form() {
    let cfg = mm1(0.5, 1.0);
    let out = run(&cfg, &mut NeverAct, &RunOptions::new(40_000.0)).unwrap();
    let expected = 1.0 / (1.0 - 0.5);
    for q in 0..2 {
        let got = out.metrics.queues[q].mean_sojourn;
        assert!((got - expected).abs() / expected < 0.05, "queue {q}: {got}");
    }
    assert_eq!(out.metrics.reneged, 0);
}

#[test]
fn littles_law_holds() {
    let cfg = mm1(0.6, 1.0);
    let out = run(&cfg, &mut NeverAct, &RunOptions::new(40_000.0)).unwrap();
    for q in 0..2 {
        let m = &out.metrics.queues[q];
        let lambda_hat = m.arrivals as f64 / out.metrics.window;
        let l = lambda_hat * m.mean_sojourn;
        assert!((l - m.mean_length).abs() / m.mean_length < 0.05, "queue {q}: L={} lambda W={l}", m.mean_length);
    }
}

#[test]
fn every_request_is_resolved() {
    let cfg = overloaded(3);
    let out = run(&cfg, &mut MarkovFeed::default(), &RunOptions::new(500.0)).unwrap();
    let m = &out.metrics;
    assert!(m.admitted > 0);
    assert_eq!(m.admitted, m.completed + m.reneged);
    for r in &out.requests {
        let outcome = r.outcome.expect("resolved");
        let end = r.end.expect("ended");
        assert!(end >= r.entry_time());
        if outcome != Outcome::Reneged {
            let wait = r.wait().unwrap();
            assert!(wait <= r.patience.total_budget() + 1e-9, "served after patience ran out");
        }
        assert_eq!(outcome == Outcome::ServedAfterJockey, r.jockeys() > 0 && outcome != Outcome::Reneged);
    }
}

#[test]
fn overload_produces_reneges_and_jockeys() {
    let out = run(&overloaded(5), &mut MarkovFeed::default(), &RunOptions::new(500.0)).unwrap();
    assert!(out.metrics.reneged > 0);
    assert!(out.metrics.jockeying_requests > 0);
}

#[test]
fn same_seed_same_run() {
    let opts = RunOptions::new(200.0);
    let a = run(&overloaded(9), &mut MarkovFeed::default(), &opts).unwrap();
    let b = run(&overloaded(9), &mut MarkovFeed::default(), &opts).unwrap();
    assert_eq!(a, b);
    let c = run(&overloaded(10), &mut MarkovFeed::default(), &opts).unwrap();
    assert_ne!(a.metrics, c.metrics);
}

#[test]
fn trace_reproduces_metrics() {
    for landing in [LandingMode::Tail, LandingMode::PoissonAhead] {
        let cfg = overloaded(4).lambda_tar(0.5).landing(landing);
        let out = run(&cfg, &mut MarkovFeed::default(), &RunOptions::new(300.0)).unwrap();
        assert_eq!(drain_statistics(&out.trace).unwrap(), out.metrics);
    }
}

#[test]
fn trace_is_time_ordered() {
    let out = run(&overloaded(2), &mut MarkovFeed::default(), &RunOptions::new(100.0)).unwrap();
    assert!(out.trace.records.windows(2).all(|w| w[0].time <= w[1].time));
}

#[test]
fn join_shorter_balances_queues() {
    let cfg = mm1(0.4, 1.0).router(Router::JoinShorter);
    let out = run(&cfg, &mut NeverAct, &RunOptions::new(5_000.0)).unwrap();
    let [a, b] = [out.metrics.queues[0].arrivals as f64, out.metrics.queues[1].arrivals as f64];
    assert!((a - b).abs() / (a + b) < 0.05);
}

#[test]
fn baseline_only_expires() {
    let out = run(&overloaded(6), &mut NeverAct, &RunOptions::new(200.0)).unwrap();
    assert!(out.trace.records.iter().all(|r| r.kind != TraceKind::Renege && r.kind != TraceKind::Jockey));
    assert!(out.metrics.reneged > 0);
}

#[test]
fn rejects_bad_options() {
    let mut opts = RunOptions::new(10.0);
    opts.warmup = 20.0;
    assert!(run(&overloaded(0), &mut NeverAct, &opts).is_err());
}

#[test]
fn tagged_patient_wait_is_work_ahead() {
    let cfg = mm1(0.3, 1.0);
    for stream in 0..20 {
        let r = run_tagged(&cfg, &mut NeverAct, TaggedStart { ahead: 5, other: 2 }, stream).unwrap();
        assert_eq!(r.outcome, Outcome::Served);
        let work = r.ahead_work.unwrap();
        assert!((r.wait - work).abs() < 1e-9 * work.max(1.0), "{} vs {work}", r.wait);
    }
}

#[test]
fn tagged_hopeless_backlog_reneges_voluntarily() {
    let cfg = overloaded(1);
    let r = run_tagged(&cfg, &mut MarkovFeed::default(), TaggedStart { ahead: 200, other: 200 }, 0).unwrap();
    assert_eq!(r.outcome, Outcome::Reneged);
    assert!(r.voluntary_renege);
    assert_eq!(r.wait, 0.0);
}

#[test]
fn tagged_empty_system_is_served_at_once() {
    let r = run_tagged(&overloaded(1), &mut MarkovFeed::default(), TaggedStart { ahead: 0, other: 0 }, 0).unwrap();
    assert_eq!(r.outcome, Outcome::Served);
    assert_eq!(r.wait, 0.0);
    assert_eq!(r.ahead_work, Some(0.0));
}
