use qmac::capacity::{
    cq_rates, optimize_cq_region, optimize_qq_region, qq_rates, tensor_power_rates, CQInput,
    MacEvaluator, QQInput, RegionOptions, TensorPowerInput, TensorPowerRates,
};
use qmac::channels::Channel;
use qmac::optimize::{rng_for, Budget};
use qmac::random::random_pure;
use qmac::region::{hausdorff, timeshare, Pentagon, RatePoint, Region2D};
use qmac::zoo::{erasure_mac, erasure_point, identity_mac, phase_flip_mac};
use qmac::{max_entangled, CMatrix, Error, PureState, SystemShape};

fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

fn small_opts(samples: usize, seed: u64) -> RegionOptions {
    RegionOptions {
        samples,
        budget: Budget {
            restarts: 4,
            evals: 400,
        },
        seed,
        parallel: false,
    }
}

fn qubit(i: usize) -> PureState {
    PureState::basis(SystemShape::single("A'", 2), i).unwrap()
}

fn erasure_input(q: f64, d: usize) -> CQInput {
    CQInput::new(vec![1.0 - q, q], vec![qubit(1), qubit(0)], max_entangled(d)).unwrap()
}

/// Traces out Alice: `K_a = <a|_A' (x) 1_B'`.
fn ignores_alice() -> Channel {
    let kraus = (0..2)
        .map(|a| {
            let mut k = CMatrix::zeros(2, 4);
            for b in 0..2 {
                k = &k + &CMatrix::unit_rect(2, 4, b, 2 * a + b);
            }
            k
        })
        .collect();
    Channel::new(
        kraus,
        SystemShape::new([("A'", 2), ("B'", 2)]).unwrap(),
        SystemShape::single("C", 2),
    )
    .unwrap()
    .into_mac2(&["A'"], &["B'"])
    .unwrap()
}

#[test]
fn erasure_quarter_point_matches_closed_form() {
    let ch = erasure_mac(2).unwrap().channel;
    let p = cq_rates(&ch, &erasure_input(0.25, 2), 1).unwrap();
    assert!((p.x - 0.811278124459).abs() < 1e-9);
    assert!((p.y - 0.5).abs() < 1e-10);
}

#[test]
fn erasure_d3_quarter_point() {
    let ch = erasure_mac(3).unwrap().channel;
    let p = cq_rates(&ch, &erasure_input(0.25, 3), 1).unwrap();
    let oracle = erasure_point(3, 0.25).unwrap();
    assert!((p.x - oracle.x).abs() < 1e-9);
    assert!((p.y - 0.5 * 3f64.log2()).abs() < 1e-9);
    assert!((oracle.y - 0.792481250360).abs() < 1e-9);
}

#[test]
fn unentangled_bob_gives_zero_q() {
    let ch = erasure_mac(2).unwrap().channel;
    let bob = PureState::basis(SystemShape::new([("B", 2), ("B'", 2)]).unwrap(), 1).unwrap();
    let input = CQInput::new(vec![0.6, 0.4], vec![qubit(1), qubit(0)], bob).unwrap();
    let p = cq_rates(&ch, &input, 1).unwrap();
    assert!(p.y.abs() < 1e-10);
}

#[test]
fn single_state_ensemble_gives_zero_r() {
    let ch = erasure_mac(2).unwrap().channel;
    let input = CQInput::new(vec![1.0], vec![qubit(1)], max_entangled(2)).unwrap();
    let p = cq_rates(&ch, &input, 1).unwrap();
    assert!(p.x.abs() < 1e-10);
    assert!((p.y - 1.0).abs() < 1e-10);
}

#[test]
fn phase_flip_caps_on_max_entangled_inputs() {
    for p in [0.0, 0.1, 0.25, 0.5] {
        let ch = phase_flip_mac(p).unwrap().channel;
        let input = QQInput::new(max_entangled(2), max_entangled(2));
        let r = qq_rates(&ch, &input, 1).unwrap();
        assert!((r.raw[0] - 1.0).abs() < 1e-9, "p={p} a={}", r.raw[0]);
        assert!((r.raw[1] - 1.0).abs() < 1e-9, "p={p} b={}", r.raw[1]);
        assert!(
            (r.raw[2] - (2.0 - h2(p))).abs() < 1e-9,
            "p={p} s={}",
            r.raw[2]
        );
        assert!(!r.sum_violation);
    }
}

#[test]
fn unentangled_qq_inputs_give_zero_caps() {
    let ch = phase_flip_mac(0.1).unwrap().channel;
    let s = SystemShape::new([("A", 2), ("A'", 2)]).unwrap();
    let input = QQInput::new(
        PureState::basis(s.clone(), 0).unwrap(),
        PureState::basis(s, 3).unwrap(),
    );
    let r = qq_rates(&ch, &input, 1).unwrap();
    for c in r.raw {
        assert!(c.abs() < 1e-10);
    }
}

#[test]
fn product_of_optima_is_additive_at_k2() {
    let ch = phase_flip_mac(0.1).unwrap().channel;
    let one = QQInput::new(max_entangled(2), max_entangled(2));
    let two = one.product(&one).unwrap();
    let r1 = qq_rates(&ch, &one, 1).unwrap();
    let TensorPowerRates::Qq(r2) = tensor_power_rates(&ch, 2, &TensorPowerInput::Qq(two)).unwrap()
    else {
        panic!("qq input gives qq rates")
    };
    for i in 0..3 {
        assert!((r1.raw[i] - r2.raw[i]).abs() < 1e-9);
    }
}

#[test]
fn correlated_two_use_inputs_respect_single_letter_sum_cap() {
    let p = 0.1;
    let ch = phase_flip_mac(p).unwrap().channel;
    let ev = MacEvaluator::new(&ch, 2).unwrap();
    let shape = SystemShape::new([("R", 4), ("S1", 2), ("S2", 2)]).unwrap();
    for t in 0..5 {
        let mut rng = rng_for(11, t, 0);
        let input = QQInput::new(
            random_pure(shape.clone(), &mut rng),
            random_pure(shape.clone(), &mut rng),
        );
        let r = ev.qq_rates(&input).unwrap();
        assert!(r.raw[2] <= 2.0 - h2(p) + 1e-6, "trial {t}: {}", r.raw[2]);
    }
}

#[test]
fn alternating_inputs_reproduce_timeshared_midpoint() {
    let ch = erasure_mac(2).unwrap().channel;
    let (a, b) = (erasure_input(0.1, 2), erasure_input(0.4, 2));
    let pa = cq_rates(&ch, &a, 1).unwrap();
    let pb = cq_rates(&ch, &b, 1).unwrap();
    let TensorPowerRates::Cq(mid) =
        tensor_power_rates(&ch, 2, &TensorPowerInput::Cq(a.product(&b).unwrap())).unwrap()
    else {
        panic!("cq input gives cq rates")
    };
    let expect = timeshare(pa, pb, 0.5);
    assert!((mid.x - expect.x).abs() < 1e-9);
    assert!((mid.y - expect.y).abs() < 1e-9);
}

#[test]
fn dimension_and_arity_errors() {
    // two uses of a 10-dim input exceed the 64-dim limit
    let big = erasure_mac(5).unwrap().channel;
    assert!(MacEvaluator::new(&big, 1).is_ok());
    match MacEvaluator::new(&big, 2) {
        Err(Error::DimensionOverflow { .. }) => {}
        other => panic!("expected overflow, got {other:?}"),
    }
    assert!(matches!(
        MacEvaluator::new(&erasure_mac(2).unwrap().channel, 3),
        Err(Error::Arity(_)) | Err(Error::InvalidParameter(_))
    ));
    let single = Channel::identity(SystemShape::single("A", 2));
    assert!(MacEvaluator::new(&single, 1).is_err());
}

#[test]
fn channel_ignoring_alice_collapses_to_r_zero() {
    let res = optimize_cq_region(&ignores_alice(), &small_opts(5, 3)).unwrap();
    for p in &res.region.hull {
        assert!(p.x.abs() < 1e-9, "R = {}", p.x);
    }
    let top = res.region.hull.iter().map(|p| p.y).fold(0.0, f64::max);
    assert!((top - 1.0).abs() < 1e-3, "top {top} {:?}", res.sweep);
}

#[test]
fn erasure_d3_region_reaches_quarter_point() {
    let nc = erasure_mac(3).unwrap();
    let res = optimize_cq_region(&nc.channel, &small_opts(9, 5)).unwrap();
    let q = erasure_point(3, 0.25).unwrap();
    assert!(res.region.contains(RatePoint::new(q.x - 0.02, q.y - 0.02)));
    // and stays under the closed-form boundary
    let d = hausdorff(&res.region, &nc.oracle_region(65).unwrap());
    assert!(d < 0.05, "hausdorff {d}");
    for r in &res.sweep {
        assert!(r.raw[0] <= 1.0 + 1e-9 && r.raw[1] <= 3f64.log2() + 1e-9);
    }
}

#[test]
fn phase_flip_half_sum_cap_and_noiseless_square() {
    let res = optimize_qq_region(&phase_flip_mac(0.5).unwrap().channel, &small_opts(3, 1)).unwrap();
    let best_sum = res.pentagons.iter().map(|p| p.sum_cap).fold(0.0, f64::max);
    assert!((best_sum - 1.0).abs() < 5e-3, "sum {best_sum}");
    for p in &res.pentagons {
        assert!(p.a_cap <= 1.0 + 1e-6 && p.b_cap <= 1.0 + 1e-6 && p.sum_cap <= 1.0 + 1e-6);
    }

    let id = identity_mac(2, 2).unwrap();
    let res = optimize_qq_region(&id.channel, &small_opts(3, 1)).unwrap();
    let square = Region2D::from_pentagons(["Qa", "Qb"], &[Pentagon::new(1.0, 1.0, 2.0)]);
    assert!(hausdorff(&res.region, &square) < 5e-3);
}

#[test]
fn optimizer_hull_contains_sweep_points_and_their_timeshares() {
    let res = optimize_cq_region(&erasure_mac(2).unwrap().channel, &small_opts(5, 9)).unwrap();
    let pts: Vec<RatePoint> = res
        .sweep
        .iter()
        .map(|r| RatePoint::new(r.raw[0], r.raw[1]).clamped())
        .collect();
    for a in &pts {
        assert!(res.region.contains(*a));
        for b in &pts {
            for t in [0.25, 0.5, 0.75] {
                assert!(res.region.contains(timeshare(*a, *b, t)));
            }
        }
    }
}

#[test]
fn region_plumbing_examples() {
    let r = Region2D::from_pentagons(["Qa", "Qb"], &[Pentagon::new(1.0, 1.0, 1.5)]);
    assert!(r.contains(RatePoint::new(0.7, 0.7)));
    assert!(!r.contains(RatePoint::new(0.9, 0.7)));
    let u = Region2D::union(&[r.clone(), r.clone()]);
    assert_eq!(u.hull, r.hull);
    let m = timeshare(RatePoint::new(1.0, 0.0), RatePoint::new(0.0, 1.0), 0.5);
    assert_eq!((m.x, m.y), (0.5, 0.5));
}

#[test]
fn fixed_seed_is_reproducible_across_scheduling() {
    let ch = erasure_mac(2).unwrap().channel;
    let a = optimize_cq_region(&ch, &small_opts(5, 21)).unwrap();
    let b = optimize_cq_region(&ch, &small_opts(5, 21)).unwrap();
    let c = optimize_cq_region(
        &ch,
        &RegionOptions {
            parallel: true,
            ..small_opts(5, 21)
        },
    )
    .unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}
