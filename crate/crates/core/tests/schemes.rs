use pnc_sim::channel::ChannelParams;
use pnc_sim::lattice::frame_capacity;
use pnc_sim::schemes::*;

fn sim(name: &str) -> Simulator {
    Simulator::new(preset(name).unwrap()).unwrap()
}

fn run(s: &Simulator, sigma2: f64, frames: u64, seed: u64) -> Vec<TrialResult> {
    (0..frames)
        .map(|i| {
            s.run_frame(
                &NoisePlan::uniform(sigma2),
                &ChannelParams::perfect(sigma2),
                seed,
                i,
            )
        })
        .collect()
}

#[test]
fn every_preset_is_error_free_without_noise() {
    for p in all_presets() {
        let name = p.name.clone();
        let s = Simulator::new(p).unwrap();
        let res = run(&s, 0.0, 10, 21);
        assert!(res.iter().all(|r| r.success_a && r.success_b), "{name}");
    }
}

#[test]
fn split_totals() {
    for (name, ka, kb) in [
        ("table1-alem-537", 281, 537),
        ("table1-slem-588", 332, 588),
        ("table1-stem-639", 383, 639),
        ("table2-alem-385", 242, 385),
        ("dlem-472", 242, 472),
        ("table3-alem-614", 358, 614),
    ] {
        let s = sim(name);
        assert_eq!((s.k_a(), s.k_b()), (ka, kb), "{name}");
    }
    // floor(R N) per level, summed
    assert_eq!(
        frame_capacity(256, &[0.003, 0.45, 0.65, 1.0]),
        115 + 166 + 256
    );
}

#[test]
fn timing_of_table1_pair() {
    let alem = sim("table1-alem-537");
    let slem = sim("table1-slem-537");
    let ta = alem.timing(0);
    let ts = slem.timing(0);
    // slot 0 is empty when the shaped level is uncoded
    assert_eq!(ta.slots[0], 0.0);
    assert!((ta.slots[1] - 256e-6).abs() < 1e-18);
    assert!((ta.total() - 768e-6).abs() < 1e-15);
    assert!((ts.total() - 896e-6).abs() < 1e-15);
    assert!((ts.total() - ta.total() - ts.slots[3]).abs() <= 4.0 * f64::EPSILON * ts.total());
    assert!((slem.t3_sym() - 128e-6).abs() < 1e-18);
}

#[test]
fn doubling_bandwidth_halves_durations() {
    for name in [
        "table1-alem-588",
        "table1-slem-588",
        "table1-stem-588",
        "table2-alem-385",
    ] {
        let base = sim(name);
        let mut p = preset(name).unwrap();
        p.w *= 2.0;
        let fast = Simulator::new(p).unwrap();
        for k in [0, 50, 150] {
            let (a, b) = (base.timing(k), fast.timing(k));
            for i in 0..5 {
                assert_eq!(a.slots[i], 2.0 * b.slots[i], "{name} slot {i}");
            }
        }
    }
}

#[test]
fn dlem_picks_the_shorter_total() {
    let d = sim("dlem-385");
    let alem = sim("table2-alem-385");
    let slem = sim("table2-slem-385");
    let t_sym = slem.timing(0).total();
    for k in [0usize, 1, 30, 60, 61, 121, 122, 200, 400] {
        let t_asym = alem.timing(k).total();
        assert_eq!(d.dlem_prefers_symmetric(k), t_sym <= t_asym, "K_e={k}");
    }
    assert!(!d.dlem_prefers_symmetric(0));
}

#[test]
fn dlem_frames_follow_the_rule() {
    let d = sim("dlem-472");
    for r in run(&d, 0.0, 30, 4) {
        assert!(r.success);
        if r.symmetric {
            assert_eq!(r.k_ehat, 0);
        } else {
            assert!(!d.dlem_prefers_symmetric(r.k_ehat));
            assert!(r.timing.slots[0] > 0.0);
        }
    }
}

#[test]
fn correction_is_sent_when_the_shaped_level_is_coded() {
    let s = sim("table2-alem-385");
    for r in run(&s, 0.0, 10, 8) {
        assert!(r.k_ehat > 0);
        assert!(r.timing.slots[0] > 0.0);
        assert_eq!(r.timing.slots[3], 0.0);
    }
}

#[test]
fn frames_are_reproducible_and_seed_dependent() {
    let s = sim("table1-alem-537");
    let sigma2 = s.sigma2(5.5).unwrap();
    let a = run(&s, sigma2, 40, 1);
    let b = run(&s, sigma2, 40, 1);
    let c = run(&s, sigma2, 40, 2);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn errors_fall_with_snr() {
    let s = sim("table1-slem-537");
    let low = aggregate(&run(&s, s.sigma2(4.0).unwrap(), 60, 3), s.k_b()).unwrap();
    let high = aggregate(&run(&s, s.sigma2(9.0).unwrap(), 60, 3), s.k_b()).unwrap();
    assert!(low.fer > 0.5, "{low:?}");
    assert_eq!(high.fer, 0.0);
}

fn ok(success: bool, t: f64) -> TrialResult {
    TrialResult {
        success,
        success_a: success,
        success_b: true,
        timing: Timing {
            slots: [0.0, t, 0.0, 0.0, 0.0],
        },
        k_ehat: 0,
        symmetric: false,
    }
}

#[test]
fn aggregate_definitions() {
    let all: Vec<_> = (0..10).map(|_| ok(true, 1e-3)).collect();
    assert_eq!(aggregate(&all, 100).unwrap().fer, 0.0);
    let none: Vec<_> = (0..100).map(|_| ok(false, 1e-3)).collect();
    let m = aggregate(&none, 100).unwrap();
    assert_eq!(m.fer, 1.0);
    assert_eq!(m.throughput_bps, 0.0);
    let half: Vec<_> = (0..100).map(|i| ok(i % 2 == 0, 1e-3)).collect();
    let m = aggregate(&half, 537).unwrap();
    assert_eq!(m.frame_errors, 50);
    assert!((m.throughput_bps - 50.0 * 537.0 / 0.1).abs() < 1e-6);
    assert!(aggregate(&[], 1).is_err());
}

#[test]
fn sigma2_follows_the_snr_definition() {
    let s = sim("table1-alem-537");
    let n0 = s.p_a() * 256.0 / (281.0 * 10f64.powf(0.8));
    assert!((s.sigma2(8.0).unwrap() - n0 / 2.0).abs() < 1e-15);
}
