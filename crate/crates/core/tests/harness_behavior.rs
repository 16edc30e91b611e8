use mdpsm_core::angle_optimizer::{sweep, AngleGrid};
use mdpsm_core::harness::{
    estimate_diversity, run_ber, run_ber_with, snr_at_ber, DetectorKind, RunOptions, StopRule,
};
use mdpsm_core::{Constellation, Scheme, SystemConfig};

fn theta_opt(a: Scheme, b: Scheme) -> f64 {
    let (ca, cb) = (Constellation::new(a), Constellation::new(b));
    sweep(&ca, &cb, &AngleGrid::default_for(&ca, &cb)).unwrap().optimal_thetas[0]
}

#[test]
fn noiseless_links_make_no_errors() {
    for a in Scheme::ALL {
        for b in Scheme::ALL {
            let cfg = SystemConfig::mdpsm(4, 4, 4, a, b, theta_opt(a, b));
            let c = run_ber(&cfg, &[f64::INFINITY], StopRule::fixed(10_000), 1).unwrap();
            assert_eq!(c.points[0].bit_errors, 0, "{cfg}");
            assert!(c.points[0].channel_uses >= 10_000);
        }
        let c = run_ber(&SystemConfig::psm(2, 2, a), &[f64::INFINITY], StopRule::fixed(10_000), 1).unwrap();
        assert_eq!(c.points[0].bit_errors, 0);
    }
}

#[test]
fn curves_do_not_depend_on_worker_count() {
    let cfg = SystemConfig::mdpsm(4, 4, 4, Scheme::Qpsk, Scheme::Qam16, 32.1);
    let grid = [0.0, 6.0, 12.0];
    let mut opts = RunOptions::new(77);
    opts.stop = StopRule { min_bit_errors: 500, max_channel_uses: 200_000 };
    opts.jobs = 1;
    let one = run_ber_with(&cfg, &grid, &opts).unwrap();
    opts.jobs = 3;
    let three = run_ber_with(&cfg, &grid, &opts).unwrap();
    assert_eq!(one, three);
    assert_eq!(one.to_csv(), three.to_csv());
    opts.seed = 78;
    assert_ne!(run_ber_with(&cfg, &grid, &opts).unwrap().points, one.points);
}

#[test]
fn joint_and_fast_runs_agree() {
    let cfg = SystemConfig::mdpsm(2, 2, 2, Scheme::Bpsk, Scheme::Psk8, 15.0);
    let mut opts = RunOptions::new(5);
    opts.stop = StopRule::fixed(50_000);
    let fast = run_ber_with(&cfg, &[5.0, 15.0], &opts).unwrap();
    opts.detector = DetectorKind::Joint;
    assert_eq!(fast.points, run_ber_with(&cfg, &[5.0, 15.0], &opts).unwrap().points);
}

#[test]
fn ber_falls_with_snr() {
    let cfg = SystemConfig::mdpsm(2, 2, 2, Scheme::Qpsk, Scheme::Qpsk, 30.0);
    let grid: Vec<f64> = (0..8).map(|i| i as f64 * 3.0).collect();
    let c = run_ber(&cfg, &grid, StopRule { min_bit_errors: 400, max_channel_uses: 2_000_000 }, 3).unwrap();
    for w in c.points.windows(2) {
        let sigma = |p: &mdpsm_core::harness::BerPoint| (p.ber / p.bits_tested as f64).sqrt();
        assert!(w[1].ber <= w[0].ber + 2.0 * (sigma(&w[0]) + sigma(&w[1])), "{:?}", w);
    }
    for p in &c.points {
        assert!(p.bit_errors >= 400 || p.capped);
        assert_eq!(p.ber, p.bit_errors as f64 / p.bits_tested as f64);
    }
}

#[test]
fn mdpsm_trails_at_low_snr_and_leads_at_high_snr() {
    let md = SystemConfig::mdpsm(4, 4, 4, Scheme::Qpsk, Scheme::Qpsk, 33.0);
    let psm = SystemConfig::psm(4, 4, Scheme::Qpsk);
    let stop = StopRule { min_bit_errors: 1000, max_channel_uses: 3_000_000 };
    let grid = [0.0, 30.0];
    let a = run_ber(&md, &grid, stop, 9).unwrap();
    let b = run_ber(&psm, &grid, stop, 9).unwrap();
    assert!(a.points[0].ber > b.points[0].ber, "{} vs {}", a.points[0].ber, b.points[0].ber);
    assert!(a.points[1].ber < b.points[1].ber, "{} vs {}", a.points[1].ber, b.points[1].ber);
}

#[test]
fn sparse_curves_cannot_be_fitted() {
    let cfg = SystemConfig::psm(2, 2, Scheme::Qpsk);
    let c = run_ber(&cfg, &[0.0, 5.0], StopRule::fixed(20_000), 1).unwrap();
    assert!(estimate_diversity(&c, None).is_err());
    assert!(estimate_diversity(&c, Some((0.0, 5.0))).is_err());
    assert!(snr_at_ber(&c, 1e-9).is_none());
}
