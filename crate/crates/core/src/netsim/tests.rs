use super::*;
use crate::spatial::{QuadratureConfig, SpatialConstants};
use crate::stability::saturated_success_prob;
use approx::assert_relative_eq;

fn fd(q: f64, a: f64) -> SystemParams {
    SystemParams {
        lambda: 0.2,
        a,
        q,
        ..SystemParams::default()
    }
}

fn fixed_state(clusters: &[([f64; 2], f64)], side: f64, seed: u64) -> NetworkState {
    let geoms = clusters
        .iter()
        .map(|&(center, angle)| ClusterGeometry { center, angle })
        .collect();
    NetworkState::new(geoms, Torus::new(side), StreamKey::new(seed, 0))
}

fn frozen(reception: ReceptionMode, saturated: bool) -> SimOptions {
    SimOptions {
        reception,
        saturated,
        relocate: false,
        record_links: true,
        cell_pruning: false,
    }
}

#[test]
fn auto_sized_region() {
    let ch = ChannelParams::default();
    let region = RegionConfig::default();
    assert_relative_eq!(
        region.side_for(0.2, &ch).unwrap(),
        50.0,
        max_relative = 1e-12
    );
    assert_relative_eq!(
        region.side_for(0.05, &ch).unwrap(),
        100.0,
        max_relative = 1e-12
    );
    // dense networks fall back to the channel-driven floor
    let floor = 20.0 * 2f64.powf(0.25);
    assert_relative_eq!(
        region.side_for(50.0, &ch).unwrap(),
        floor,
        max_relative = 1e-12
    );
    assert_relative_eq!(
        region.side_for(0.0, &ch).unwrap(),
        floor,
        max_relative = 1e-12
    );
    assert!(RegionConfig::fixed(10.0).side_for(0.2, &ch).is_err());
    assert!(RegionConfig::fixed(10.5).side_for(0.2, &ch).is_ok());
}

#[test]
fn peer_sits_at_distance_r() {
    let torus = Torus::new(30.0);
    let c = ClusterGeometry {
        center: [29.7, 0.2],
        angle: 0.3,
    };
    let v = c.peer(1.0, &torus);
    assert_relative_eq!(torus.dist_sq(c.center, v), 1.0, max_relative = 1e-12);
    assert!(v[0] < 30.0 && v[0] >= 0.0);
}

#[test]
fn poisson_cluster_count() {
    let draws = 10_000;
    let total: usize = (0..draws)
        .map(|i| {
            sample_topology(0.2, 50.0, StreamKey::new(11, i))
                .unwrap()
                .clusters
                .len()
        })
        .sum();
    let mean = total as f64 / draws as f64;
    assert!((mean / 500.0 - 1.0).abs() < 0.02, "mean count {mean}");
}

#[test]
fn topology_is_reproducible_and_empty_at_zero_intensity() {
    let a = sample_topology(0.2, 50.0, StreamKey::new(3, 1)).unwrap();
    let b = sample_topology(0.2, 50.0, StreamKey::new(3, 1)).unwrap();
    assert_eq!(a.clusters, b.clusters);
    assert!(a.queues.iter().all(|q| q.is_empty()));
    assert!(sample_topology(0.0, 50.0, StreamKey::new(3, 1))
        .unwrap()
        .clusters
        .is_empty());
    assert!(sample_topology(1e-9, 50.0, StreamKey::new(3, 1))
        .unwrap()
        .clusters
        .is_empty());
}

#[test]
fn isolated_saturated_cluster_always_succeeds() {
    for reception in [ReceptionMode::Marginal, ReceptionMode::Explicit] {
        let mut state = fixed_state(&[([5.0, 5.0], 1.0)], 30.0, 1);
        let opts = SimOptions {
            reception,
            saturated: true,
            ..SimOptions::default()
        };
        for _ in 0..500 {
            let r = state.advance_slot(&fd(1.0, 0.0), &opts);
            assert_eq!((r.attempts, r.successes, r.fd_links), (2, 2, 1));
        }
    }
}

/// Two clusters on a line: A = (0,0) -> (1,0), B = (3,0) -> (4,0). With all
/// four nodes transmitting, the SIR at each receiver is rebuilt by hand from
/// the same fading draws.
#[test]
fn two_cluster_sir_table() {
    use rand::Rng;
    use rand_distr::Exp1;

    let side = 40.0;
    let seed = 2024;
    let mut state = fixed_state(&[([0.0, 0.0], 0.0), ([3.0, 0.0], 0.0)], side, seed);
    let report = state.advance_slot(&fd(1.0, 0.0), &frozen(ReceptionMode::Explicit, true));

    let key = StreamKey::new(seed, 0);
    let mut srng = key.rng(0, Stream::SignalFading, 0);
    let signal: Vec<f64> = (0..4).map(|_| srng.sample(Exp1)).collect();
    let fades = |rx: u64, count: usize| -> Vec<f64> {
        let mut r = key.rng(0, Stream::InterferenceFading, rx);
        (0..count).map(|_| r.sample(Exp1)).collect()
    };
    // receiver -> interferer distances, in transmitter order
    let table: [(usize, usize, [f64; 2]); 4] = [
        (0, 1, [2.0, 3.0]), // rx (1,0) hears (3,0), (4,0)
        (1, 0, [3.0, 4.0]), // rx (0,0)
        (2, 3, [4.0, 3.0]), // rx (4,0) hears (0,0), (1,0)
        (3, 2, [3.0, 2.0]), // rx (3,0)
    ];
    assert_eq!(report.links.len(), 4);
    for (link, &(tx, rx, d)) in report.links.iter().zip(&table) {
        let z = fades(rx as u64, 2);
        let interference = z[0] / d[0].powi(4) + z[1] / d[1].powi(4);
        let sir = signal[tx] / interference;
        assert_eq!((link.tx, link.rx), (tx, rx));
        assert_relative_eq!(link.sir.unwrap(), sir, max_relative = 1e-12);
        assert_eq!(link.success, sir >= 2.0);
    }
}

#[test]
fn self_interference_models() {
    // One isolated cluster: only the residual self-interference can fail a link.
    let eta = 0.05;
    let run = |ic_model, both: bool| {
        let mut state = fixed_state(&[([5.0, 5.0], 0.0)], 30.0, 9);
        if !both {
            state.queues[0].push_back(0);
        }
        let params = SystemParams {
            q: 1.0,
            a: 0.0,
            eta,
            ic_model,
            ..fd(1.0, 0.0)
        };
        let opts = SimOptions {
            saturated: both,
            ..frozen(ReceptionMode::Marginal, both)
        };
        state.advance_slot(&params, &opts).links[0]
            .conditional_success
            .unwrap()
    };
    let beta = (-eta * 2.0f64).exp();
    assert_eq!(run(IcModel::Perfect, true), 1.0);
    assert_relative_eq!(run(IcModel::Bound, true), beta, max_relative = 1e-15);
    assert_relative_eq!(run(IcModel::Actual, true), beta, max_relative = 1e-15);
    // the receiver is silent: the actual model sees no residual
    assert_relative_eq!(run(IcModel::Bound, false), beta, max_relative = 1e-15);
    assert_eq!(run(IcModel::Actual, false), 1.0);
}

/// Under perfect cancellation the SIR of a link does not depend on whether
/// its receiver transmits.
#[test]
fn peer_activity_does_not_change_sir() {
    let base = sample_topology(0.2, 25.0, StreamKey::new(77, 0)).unwrap();
    assert!(base.clusters.len() > 50);
    for reception in [ReceptionMode::Explicit, ReceptionMode::Marginal] {
        let probe = |peer_busy: bool| {
            let mut state = base.clone();
            for (node, q) in state.queues.iter_mut().enumerate() {
                if node != 1 || peer_busy {
                    q.push_back(0);
                }
            }
            let report = state.advance_slot(&fd(1.0, 0.0), &frozen(reception, false));
            let link = *report.links.iter().find(|l| l.tx == 0).unwrap();
            (link, report.attempts)
        };
        let (busy, n_busy) = probe(true);
        let (idle, n_idle) = probe(false);
        assert_eq!(n_busy, n_idle + 1);
        assert_eq!(busy.sir, idle.sir);
        assert_eq!(busy.conditional_success, idle.conditional_success);
        assert_eq!(busy.success, idle.success);
    }
}

#[test]
fn half_duplex_respects_parity() {
    let params = SystemParams {
        duplex: Duplex::Half,
        ..fd(0.8, 0.0)
    };
    let mut state = sample_topology(0.2, 20.0, StreamKey::new(5, 0)).unwrap();
    let opts = SimOptions {
        saturated: true,
        record_links: true,
        ..SimOptions::default()
    };
    for t in 0..200u64 {
        let r = state.advance_slot(&params, &opts);
        assert_eq!(r.fd_links, 0);
        assert_eq!(r.hd_links, r.attempts);
        assert!(r.links.iter().all(|l| (l.tx % 2 == 0) == (t % 2 == 0)));
    }
}

#[test]
fn queues_are_conserved() {
    let params = fd(0.5, 0.2);
    let mut state = sample_topology(0.2, 20.0, StreamKey::new(8, 0)).unwrap();
    let opts = SimOptions {
        record_links: true,
        ..SimOptions::default()
    };
    let mut delivered_total = 0;
    for _ in 0..400 {
        let before: Vec<usize> = state.queues.iter().map(|q| q.len()).collect();
        let r = state.advance_slot(&params, &opts);
        delivered_total += r.completed_delays.len();
        for (node, q) in state.queues.iter().enumerate() {
            let dequeued = r.links.iter().filter(|l| l.tx == node && l.success).count();
            assert!(dequeued <= 1);
            let arrivals = q.len() as i64 - before[node] as i64 + dequeued as i64;
            assert!(arrivals == 0 || arrivals == 1);
            assert!(
                q.iter().zip(q.iter().skip(1)).all(|(a, b)| a <= b),
                "FIFO order"
            );
        }
        assert!(r.successes <= r.attempts);
        assert!(r.completed_delays.iter().all(|&d| d >= 1));
        assert_eq!(r.successes, r.completed_delays.len());
    }
    assert!(delivered_total > 0);
}

#[test]
fn zero_arrivals_are_flagged_degenerate() {
    let params = fd(0.5, 0.0);
    let run = RunConfig::new(200);
    let s = run_replication(
        &params,
        &RegionConfig::default(),
        &run,
        StreamKey::new(1, 0),
    )
    .unwrap();
    assert!(s.degenerate);
    assert_eq!(s.attempts, 0);
    assert_eq!(s.ps, None);
    assert_eq!(s.mean_delay, None);
    assert_eq!(s.nonempty, 0.0);
}

#[test]
fn replications_are_bit_identical() {
    let params = fd(0.5, 0.1);
    let region = RegionConfig::fixed(20.0);
    let run = RunConfig::new(300);
    let a = run_replication(&params, &region, &run, StreamKey::new(42, 3)).unwrap();
    let b = run_replication(&params, &region, &run, StreamKey::new(42, 3)).unwrap();
    assert_eq!(a, b);
    let c = run_replication(&params, &region, &run, StreamKey::new(43, 3)).unwrap();
    assert_ne!(a, c);
    let serial = run_replications(&params, &region, &run, 42, 3, 1).unwrap();
    let parallel = run_replications(&params, &region, &run, 42, 3, 3).unwrap();
    assert_eq!(serial, parallel);
    assert_eq!(serial[0].replication, 0);
}

#[test]
fn isolated_cluster_behaves_as_geo_geo_1() {
    // λL² = 1; pick the first seed that yields exactly one cluster.
    let side = 100.0;
    let lambda = 1e-4;
    let seed = (0..)
        .find(|&s| {
            sample_topology(lambda, side, StreamKey::new(s, 0))
                .unwrap()
                .clusters
                .len()
                == 1
        })
        .unwrap();
    let (a, q) = (0.1, 0.5);
    let params = SystemParams {
        lambda,
        a,
        q,
        ..SystemParams::default()
    };
    let run = RunConfig::new(400_000);
    let s = run_replication(
        &params,
        &RegionConfig::fixed(side),
        &run,
        StreamKey::new(seed, 0),
    )
    .unwrap();
    assert_eq!(s.clusters, 1);
    assert_eq!(s.ps, Some(1.0));
    let expected = (1.0 - a) / (q - a);
    let delay = s.mean_delay.unwrap();
    assert!(
        (delay / expected - 1.0).abs() < 0.03,
        "delay {delay} vs {expected}"
    );
    assert!(
        (s.nonempty / (a / q) - 1.0).abs() < 0.03,
        "busy {}",
        s.nonempty
    );
}

#[test]
fn marginal_and_explicit_reception_agree() {
    let params = fd(0.5, 0.0);
    let region = RegionConfig::fixed(30.0);
    let estimate = |reception| {
        let run = RunConfig {
            reception,
            ..RunConfig::new(1000).saturated()
        };
        let runs = run_replications(&params, &region, &run, 314, 16, 4).unwrap();
        runs.iter().map(|s| s.ps.unwrap()).collect::<Vec<f64>>()
    };
    let m = estimate(ReceptionMode::Marginal);
    let e = estimate(ReceptionMode::Explicit);
    // Both modes share topologies, so the paired differences cancel the
    // cluster-count noise that dominates each run.
    let n = m.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let se = |v: &[f64]| {
        let mu = mean(v);
        (v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / ((n - 1.0) * n)).sqrt()
    };
    let d: Vec<f64> = m.iter().zip(&e).map(|(a, b)| a - b).collect();
    assert!(
        mean(&d).abs() < 4.0 * se(&d) + 1e-3,
        "marginal {} explicit {}",
        mean(&m),
        mean(&e)
    );

    let sc = SpatialConstants::compute(&params.channel, 0.0, &QuadratureConfig::default()).unwrap();
    let analytic = saturated_success_prob(0.5, 0.2, &sc).unwrap();
    // one percent covers the finite-torus bias at this side
    assert!(
        (mean(&m) - analytic).abs() < 4.0 * se(&m) + 0.01 * analytic,
        "marginal {} analytic {analytic}",
        mean(&m)
    );
}

#[test]
fn cell_pruning_leaves_decisions_unchanged() {
    for (q, a, lambda) in [(0.7, 0.2, 0.2), (0.3, 0.1, 0.05), (0.9, 0.3, 0.4)] {
        let params = SystemParams { lambda, ..fd(q, a) };
        let side = 40.0;
        let key = StreamKey::new(9, 1);
        let mut pruned = sample_topology(lambda, side, key).unwrap();
        let mut plain = sample_topology(lambda, side, key).unwrap();
        let on = SimOptions::default();
        let off = SimOptions {
            cell_pruning: false,
            ..on
        };
        for _ in 0..300 {
            assert_eq!(
                pruned.advance_slot(&params, &on),
                plain.advance_slot(&params, &off)
            );
        }
        assert_eq!(pruned.queues, plain.queues);
    }
}
