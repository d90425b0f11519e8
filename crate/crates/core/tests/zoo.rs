use qmac::channels::{apply_all, complement, verify_degrading};
use qmac::info::{coherent_info_channel, entropy};
use qmac::io::{parse_json, to_json, RegionFile, RegionMeta};
use qmac::optimize::{rng_for, Budget};
use qmac::random::{random_density, random_pure};
use qmac::zoo::{
    degradable_sum_rate_check, dephasing_capacity, dephasing_channel, erasure_cq_curve,
    erasure_mac, identity_mac, parse_channel_id, phase_flip_mac, phase_flip_pentagon,
};
use qmac::{c64, CMatrix, DensityMatrix, PureState, SystemShape, C64};

fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

fn one(label: &str, d: usize) -> SystemShape {
    SystemShape::single(label, d)
}

#[test]
fn erasure_matches_direct_action() {
    for d in [2, 3] {
        let nc = erasure_mac(d).unwrap();
        for t in 0..10 {
            let mut rng = rng_for(5, d as u64, t);
            let tau = random_density(one("A'", 2), 2, &mut rng);
            let rho = random_density(one("B'", d), d, &mut rng);
            let out = apply_all(&nc.channel, &tau.tensor(&rho).unwrap()).unwrap();
            // tau_00 |0><0| + tau_11 rho on span{|1>, ..., |d>}
            let t00 = tau.mat().get(0, 0);
            let t11 = tau.mat().get(1, 1);
            let expect = CMatrix::from_fn(d + 1, d + 1, |i, j| match (i, j) {
                (0, 0) => t00,
                (0, _) | (_, 0) => C64::default(),
                _ => t11 * rho.mat().get(i - 1, j - 1),
            });
            assert!((out.mat() - &expect).max_abs() < 1e-12);
        }
    }
}

#[test]
fn erasure_curve_endpoints() {
    let r = erasure_cq_curve(2, &[0.0, 0.5]).unwrap();
    let ys: Vec<f64> = r.hull.iter().map(|p| p.y).collect();
    let xs: Vec<f64> = r.hull.iter().map(|p| p.x).collect();
    assert!(ys.iter().any(|&y| (y - 1.0).abs() < 1e-12));
    assert!(xs.iter().any(|&x| (x - 1.0).abs() < 1e-12));
    assert!(erasure_cq_curve(2, &[0.6]).is_err());
}

#[test]
fn phase_flip_matches_direct_action() {
    let zz = CMatrix::from_real_diagonal(&[1.0, -1.0, -1.0, 1.0]);
    for (t, p) in [0.0, 0.1, 0.37, 1.0].into_iter().enumerate() {
        let nc = phase_flip_mac(p).unwrap();
        let mut rng = rng_for(6, t as u64, 0);
        let rho = random_density(
            SystemShape::new([("A'", 2), ("B'", 2)]).unwrap(),
            3,
            &mut rng,
        );
        let out = apply_all(&nc.channel, &rho).unwrap();
        let expect = &rho.mat().scale(1.0 - p) + &(&(&zz * rho.mat()) * &zz).scale(p);
        assert!((out.mat() - &expect).max_abs() < 1e-12);
    }
    let nc = phase_flip_mac(0.1).unwrap();
    let pi4 = qmac::max_mixed(4);
    let pi4 = DensityMatrix::new(pi4.mat().clone(), nc.channel.in_shape().clone()).unwrap();
    assert!((entropy(&apply_all(&nc.channel, &pi4).unwrap()).unwrap() - 2.0).abs() < 1e-12);
    assert!(phase_flip_mac(1.2).is_err());
}

#[test]
fn phase_flip_pentagon_caps() {
    for (p, s) in [(0.0, 2.0), (0.5, 1.0), (0.1, 2.0 - h2(0.1))] {
        let pent = phase_flip_pentagon(p).unwrap();
        assert_eq!((pent.a_cap, pent.b_cap), (1.0, 1.0));
        assert!((pent.sum_cap - s).abs() < 1e-12);
    }
    assert!((phase_flip_pentagon(0.1).unwrap().sum_cap - 1.531).abs() < 1e-5);
}

fn random_phis(d: usize, de: usize, seed: u64) -> Vec<PureState> {
    let mut rng = rng_for(seed, 0, 0);
    (0..d)
        .map(|_| random_pure(one("E", de), &mut rng))
        .collect()
}

#[test]
fn dephasing_matches_direct_action_and_degrades() {
    for seed in 0..5 {
        let phis = random_phis(3, 2, seed);
        let nc = dephasing_channel(&phis).unwrap();
        let mut rng = rng_for(seed, 1, 0);
        let rho = random_density(one("A'", 3), 3, &mut rng);
        let out = apply_all(&nc.channel, &rho).unwrap();
        let overlap = |i: usize, j: usize| -> C64 {
            (0..2)
                .map(|e| phis[j].amplitude(e).conj() * phis[i].amplitude(e))
                .sum()
        };
        let expect = CMatrix::from_fn(3, 3, |i, j| rho.mat().get(i, j) * overlap(i, j));
        assert!((out.mat() - &expect).max_abs() < 1e-12);

        let env = apply_all(&complement(&nc.channel), &rho).unwrap();
        let mut mix = CMatrix::zeros(2, 2);
        for (x, phi) in phis.iter().enumerate() {
            mix = &mix + &phi.vec().outer().scale(rho.mat().get(x, x).re);
        }
        assert!((env.mat() - &mix).max_abs() < 1e-12);

        let degrading = nc.degrading_candidate.as_ref().unwrap();
        assert!(verify_degrading(&nc.channel, degrading).unwrap() < 1e-8);

        for x in 0..3 {
            let basis = PureState::basis(one("A'", 3), x).unwrap().to_density();
            let fixed = apply_all(&nc.channel, &basis).unwrap();
            assert!((fixed.mat() - basis.mat()).max_abs() < 1e-12);
        }
    }
}

#[test]
fn dephasing_extremes_and_phase_flip_embedding() {
    let orth: Vec<PureState> = (0..2)
        .map(|i| PureState::basis(one("E", 2), i).unwrap())
        .collect();
    let delta = dephasing_channel(&orth).unwrap();
    let budget = Budget {
        restarts: 3,
        evals: 400,
    };
    assert!(dephasing_capacity(&delta, budget, 1).unwrap().abs() < 1e-9);

    let same = vec![orth[0].clone(), orth[0].clone()];
    let id = dephasing_channel(&same).unwrap();
    assert!((dephasing_capacity(&id, budget, 1).unwrap() - 1.0).abs() < 1e-9);

    // Z (x) Z with probability p: phi_x = (sqrt(1-p), +-sqrt(p)) by parity of x
    let p: f64 = 0.1;
    let phis: Vec<PureState> = [1.0, -1.0, -1.0, 1.0]
        .iter()
        .map(|s| {
            PureState::from_amplitudes(
                vec![c64((1.0 - p).sqrt(), 0.0), c64(s * p.sqrt(), 0.0)],
                one("E", 2),
            )
            .unwrap()
        })
        .collect();
    let nc = dephasing_channel(&phis).unwrap();
    let cap = dephasing_capacity(&nc, budget, 2).unwrap();
    assert!((cap - (2.0 - h2(p))).abs() < 1e-6);
}

#[test]
fn dephasing_capacity_matches_brute_force_over_diagonal_inputs() {
    let phis = random_phis(2, 2, 17);
    let nc = dephasing_channel(&phis).unwrap();
    let cap = dephasing_capacity(
        &nc,
        Budget {
            restarts: 4,
            evals: 400,
        },
        3,
    )
    .unwrap();
    let mut best = f64::NEG_INFINITY;
    for i in 0..=2000 {
        let q = i as f64 / 2000.0;
        let rho =
            DensityMatrix::new(CMatrix::from_real_diagonal(&[1.0 - q, q]), one("A'", 2)).unwrap();
        best = best.max(coherent_info_channel(&rho, &nc.channel).unwrap());
    }
    assert!((cap - best).abs() < 1e-4, "{cap} vs {best}");
}

#[test]
fn dephasing_increases_entropy() {
    let delta = dephasing_channel(
        &(0..3)
            .map(|i| PureState::basis(one("E", 3), i).unwrap())
            .collect::<Vec<_>>(),
    )
    .unwrap();
    for t in 0..20 {
        let mut rng = rng_for(8, t, 0);
        let rho = random_density(one("A'", 3), 1 + t as usize % 3, &mut rng);
        let out = apply_all(&delta.channel, &rho).unwrap();
        assert!(entropy(&out).unwrap() >= entropy(&rho).unwrap() - 1e-9);
    }
}

#[test]
fn sum_rate_checks_stay_under_single_letter_caps() {
    let r = degradable_sum_rate_check(&phase_flip_mac(0.1).unwrap(), 5, 3, 1e-6).unwrap();
    assert!(r.failures.is_empty() && r.max_per_use <= 2.0 - h2(0.1) + 1e-6);
    let r = degradable_sum_rate_check(&identity_mac(2, 2).unwrap(), 5, 3, 1e-6).unwrap();
    assert!(r.failures.is_empty() && r.max_per_use <= 2.0 + 1e-9);
    let nc = dephasing_channel(&random_phis(2, 2, 4)).unwrap();
    let r = degradable_sum_rate_check(&nc, 5, 3, 1e-4).unwrap();
    assert!(r.failures.is_empty(), "{r:?}");
    assert!(degradable_sum_rate_check(&erasure_mac(2).unwrap(), 1, 0, 1e-6).is_err());
}

#[test]
fn channel_ids_and_region_files() {
    let nc = parse_channel_id("phaseflip:p=0.1").unwrap();
    assert_eq!(nc.channel.in_dim(), 4);
    assert!(parse_channel_id("erasure").is_err());
    assert!(parse_channel_id("erasure:d=x").is_err());
    assert!(parse_channel_id("nosuch:d=2").is_err());

    let region = nc.oracle_region(3).unwrap();
    let meta = RegionMeta {
        channel: nc.id.clone(),
        k: 1,
        seed: Some(7),
        samples: None,
        restarts: None,
        evals: None,
        hausdorff: None,
    };
    let text = to_json(&RegionFile::new(&region, meta));
    let back: RegionFile = parse_json(&text, "region").unwrap();
    assert_eq!(to_json(&back), text);
    assert!(parse_json::<RegionFile>(&text.replace("\"axes\"", "\"axis\""), "region").is_err());
}
