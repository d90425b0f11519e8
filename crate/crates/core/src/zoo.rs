//! The channels worked out by hand, with their closed-form answers.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::capacity::QQInput;
use crate::channels::{complement, tensor_power, verify_degrading, Arity, Channel};
use crate::error::{Error, Result};
use crate::info::{coherent_info_channel, entropy, h2, shannon_entropy};
use crate::optimize::{pattern_search, rng_for, start_point, Budget, INITIAL_STEP};
use crate::random::random_pure;
use crate::region::{Pentagon, RatePoint, Region2D};
use crate::states::{DensityMatrix, PureState};
use crate::tensor::{c64, CMatrix, SystemShape, C64};

/// Largest `verify_degrading` distance accepted as a certificate.
pub const DEGRADING_TOL: f64 = 1e-6;

/// Which closed form, if any, describes a named channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ClosedForm {
    /// cq region with boundary `(H(q), (1 - 2q) log d)`.
    Erasure {
        d: usize,
    },
    /// qq pentagon `(1, 1, 2 - H(p))`.
    PhaseFlip {
        p: f64,
    },
    /// `Q = max_p H(X) - H(sum p(x) phi_x)`.
    Dephasing {
        phis: Vec<Vec<[f64; 2]>>,
    },
    Identity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedChannel {
    pub id: String,
    pub channel: Channel,
    pub closed_form: Option<ClosedForm>,
    /// A map `D` with `D o N = N^c`, when one is known.
    pub degrading_candidate: Option<Channel>,
}

impl NamedChannel {
    /// Oracle region for the optimizer, when the closed form gives one.
    pub fn oracle_region(&self, samples: usize) -> Option<Region2D> {
        match self.closed_form.as_ref()? {
            ClosedForm::Erasure { d } => {
                let n = samples.max(2);
                let grid: Vec<f64> = (0..n).map(|i| 0.5 * i as f64 / (n - 1) as f64).collect();
                erasure_cq_curve(*d, &grid).ok()
            }
            ClosedForm::PhaseFlip { p } => Some(Region2D::from_pentagons(
                ["Qa", "Qb"],
                &[phase_flip_pentagon(*p).ok()?],
            )),
            ClosedForm::Identity => {
                let Arity::Mac2 { alice, bob } = self.channel.arity() else {
                    return None;
                };
                let s = self.channel.in_shape();
                let la = (s.dim_of_all(&strs(alice)).ok()? as f64).log2();
                let lb = (s.dim_of_all(&strs(bob)).ok()? as f64).log2();
                Some(Region2D::from_pentagons(
                    ["Qa", "Qb"],
                    &[Pentagon::new(la, lb, la + lb)],
                ))
            }
            ClosedForm::Dephasing { .. } => None,
        }
    }
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// `N(tau (x) rho) = tau_00 |0><0| + tau_11 rho`, with Bob's basis state `|i>`
/// landing on output `|i + 1>` and `|0>` flagging an erasure.
pub fn erasure_mac(d: usize) -> Result<NamedChannel> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "erasure MAC needs d >= 2, got {d}"
        )));
    }
    let (dc, din) = (d + 1, 2 * d);
    // input index a * d + b for Alice a, Bob b
    let mut kraus: Vec<CMatrix> = (0..d).map(|j| CMatrix::unit_rect(dc, din, 0, j)).collect();
    let mut n1 = CMatrix::zeros(dc, din);
    for i in 0..d {
        n1 = &n1 + &CMatrix::unit_rect(dc, din, i + 1, d + i);
    }
    kraus.push(n1);
    let channel = Channel::new(
        kraus,
        SystemShape::new([("A'", 2), ("B'", d)])?,
        SystemShape::single("C", dc),
    )?
    .into_mac2(&["A'"], &["B'"])?;
    Ok(NamedChannel {
        id: format!("erasure:d={d}"),
        channel,
        closed_form: Some(ClosedForm::Erasure { d }),
        degrading_candidate: None,
    })
}

/// Boundary point `(H(q), (1 - 2q) log d)`.
pub fn erasure_point(d: usize, q: f64) -> Result<RatePoint> {
    if !(0.0..=0.5).contains(&q) {
        return Err(Error::InvalidParameter(format!("q = {q} outside [0, 1/2]")));
    }
    Ok(RatePoint::new(h2(q), (1.0 - 2.0 * q) * (d as f64).log2()))
}

/// Closed-form cq region: the curve points with their corner rectangles.
pub fn erasure_cq_curve(d: usize, q_grid: &[f64]) -> Result<Region2D> {
    let pts = q_grid
        .iter()
        .map(|&q| erasure_point(d, q))
        .collect::<Result<Vec<_>>>()?;
    Ok(Region2D::from_rectangles(["R", "Q"], &pts))
}

fn sigma_z2() -> CMatrix {
    CMatrix::from_real_diagonal(&[1.0, -1.0, -1.0, 1.0])
}

/// `N_p(rho) = (1 - p) rho + p (Z (x) Z) rho (Z (x) Z)` on two qubits, one per sender.
pub fn phase_flip_mac(p: f64) -> Result<NamedChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
    }
    let kraus = vec![
        CMatrix::identity(4).scale((1.0 - p).sqrt()),
        sigma_z2().scale(p.sqrt()),
    ];
    let channel = Channel::new(
        kraus,
        SystemShape::new([("A'", 2), ("B'", 2)])?,
        SystemShape::single("C", 4),
    )?
    .into_mac2(&["A'"], &["B'"])?;
    let comm = channel.kraus_commutator_norm();
    if comm > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "phase-flip Kraus commutator {comm:.3e}"
        )));
    }
    let degrading = complement(&channel)
        .single()
        .relabel_in(SystemShape::single("C", 4))?;
    Ok(NamedChannel {
        id: format!("phaseflip:p={p}"),
        channel,
        closed_form: Some(ClosedForm::PhaseFlip { p }),
        degrading_candidate: Some(degrading),
    })
}

pub fn phase_flip_pentagon(p: f64) -> Result<Pentagon> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
    }
    Ok(Pentagon::new(1.0, 1.0, 2.0 - h2(p)))
}

/// Noiseless two-sender channel on `A' (x) B'`.
pub fn identity_mac(da: usize, db: usize) -> Result<NamedChannel> {
    let channel = Channel::identity(SystemShape::new([("A'", da), ("B'", db)])?)
        .relabel_out(SystemShape::single("C", da * db))?
        .into_mac2(&["A'"], &["B'"])?;
    let degrading = complement(&channel)
        .single()
        .relabel_in(SystemShape::single("C", da * db))?;
    Ok(NamedChannel {
        id: format!("identity:da={da},db={db}"),
        channel,
        closed_form: Some(ClosedForm::Identity),
        degrading_candidate: Some(degrading),
    })
}

fn encode_phis(phis: &[PureState]) -> Vec<Vec<[f64; 2]>> {
    phis.iter()
        .map(|p| {
            (0..p.dim())
                .map(|i| [p.amplitude(i).re, p.amplitude(i).im])
                .collect()
        })
        .collect()
}

fn decode_phis(raw: &[Vec<[f64; 2]>]) -> Vec<CMatrix> {
    raw.iter()
        .map(|v| CMatrix::from_fn(v.len(), 1, |i, _| c64(v[i][0], v[i][1])))
        .collect()
}

/// Generalized dephasing channel with isometry `U = sum_x |x>^B |phi_x>^E <x|^A'`.
///
/// Kraus operators `N_e = sum_x <e|phi_x> |x><x|`; the complement sends `rho`
/// to `sum_x <x|rho|x> phi_x`, which is also the degrading map.
pub fn dephasing_channel(phis: &[PureState]) -> Result<NamedChannel> {
    let d = phis.len();
    if d < 2 {
        return Err(Error::InvalidParameter(
            "dephasing channel needs at least two states".into(),
        ));
    }
    let de = phis[0].dim();
    if phis.iter().any(|p| p.dim() != de) {
        return Err(Error::DimensionMismatch(
            "environment states differ in dimension".into(),
        ));
    }
    let kraus: Vec<CMatrix> = (0..de)
        .map(|e| {
            let diag: Vec<C64> = phis.iter().map(|p| p.amplitude(e)).collect();
            CMatrix::from_fn(d, d, |i, j| if i == j { diag[i] } else { C64::default() })
        })
        .collect();
    let channel = Channel::new(
        kraus,
        SystemShape::single("A'", d),
        SystemShape::single("B", d),
    )?;
    let degrading = complement(&channel).relabel_in(SystemShape::single("B", d))?;
    Ok(NamedChannel {
        id: format!("dephasing:d={d}"),
        channel,
        closed_form: Some(ClosedForm::Dephasing {
            phis: encode_phis(phis),
        }),
        degrading_candidate: Some(degrading),
    })
}

/// `H(X) - H(sum_x p(x) phi_x)`.
pub fn dephasing_objective(phis: &[CMatrix], probs: &[f64]) -> Result<f64> {
    let de = phis[0].rows();
    let mut m = CMatrix::zeros(de, de);
    for (p, v) in probs.iter().zip(phis) {
        m = &m + &v.outer().scale(*p);
    }
    let env = DensityMatrix::from_unnormalized(m, SystemShape::single("E", de))?;
    Ok(shannon_entropy(probs)? - entropy(&env)?)
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Maximizes the dephasing objective over the probability simplex. The first
/// restart starts at the uniform distribution.
pub fn dephasing_capacity(nc: &NamedChannel, budget: Budget, seed: u64) -> Result<f64> {
    let Some(ClosedForm::Dephasing { phis }) = &nc.closed_form else {
        return Err(Error::WrongFamily("dephasing"));
    };
    let phis = decode_phis(phis);
    let d = phis.len();
    let mut best = f64::NEG_INFINITY;
    for r in 0..budget.restarts.max(1) {
        let mut rng = rng_for(seed, 0, r as u64);
        let x0 = if r == 0 {
            vec![0.0; d]
        } else {
            start_point(d, r - 1, 2.0, &mut rng)
        };
        let mut f =
            |z: &[f64]| dephasing_objective(&phis, &softmax(z)).unwrap_or(f64::NEG_INFINITY);
        let res = pattern_search(&mut f, x0, INITIAL_STEP, budget.evals);
        best = best.max(res.value);
    }
    Ok(best)
}

/// Result of sampling two-use inputs against the single-letter sum-rate maximum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdditivityReport {
    pub trials: usize,
    /// Single-letter maximum of the sum coherent information.
    pub cap: f64,
    pub max_per_use: f64,
    /// `cap + tol - max_per_use`; negative means a violation.
    pub worst_margin: f64,
    /// Seeds of trials that exceeded `cap + tol`.
    pub failures: Vec<u64>,
}

/// Single-letter maximum of `I_c(rho, N)` for the channel families that have one.
pub fn single_letter_sum_cap(nc: &NamedChannel, budget: Budget, seed: u64) -> Result<f64> {
    match &nc.closed_form {
        Some(ClosedForm::PhaseFlip { p }) => Ok(2.0 - h2(*p)),
        Some(ClosedForm::Identity) => Ok((nc.channel.in_dim() as f64).log2()),
        Some(ClosedForm::Dephasing { .. }) => dephasing_capacity(nc, budget, seed),
        _ => Err(Error::WrongFamily("phase-flip, identity or dephasing")),
    }
}

/// Samples random two-use inputs and checks the per-use sum coherent
/// information never beats the single-letter maximum. Two-sender channels get
/// product inputs `Psi_1 (x) Psi_2`, each sender entangled across both uses.
pub fn degradable_sum_rate_check(
    nc: &NamedChannel,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<AdditivityReport> {
    let Some(d) = &nc.degrading_candidate else {
        return Err(Error::NotDegradable(f64::INFINITY));
    };
    let dist = verify_degrading(&nc.channel, d)?;
    if dist > DEGRADING_TOL {
        return Err(Error::NotDegradable(dist));
    }
    let cap = single_letter_sum_cap(nc, Budget::default(), seed)?;
    let two = tensor_power(&nc.channel, 2)?;
    let mut max_per_use = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for t in 0..trials {
        let trial_seed = crate::optimize::split_seed(seed, 1, t as u64);
        let v = sum_rate_trial(&nc.channel, &two, trial_seed)?;
        max_per_use = max_per_use.max(v);
        if v > cap + tol {
            failures.push(trial_seed);
        }
    }
    Ok(AdditivityReport {
        trials,
        cap,
        max_per_use,
        worst_margin: cap + tol - max_per_use,
        failures,
    })
}

/// Per-use `I_c(rho, N^{(x)2})` for one random input seeded by `trial_seed`.
pub fn sum_rate_trial(ch: &Channel, two: &Channel, trial_seed: u64) -> Result<f64> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(trial_seed);
    let rho = match ch.arity() {
        Arity::Mac2 { alice, bob } => {
            let s = ch.in_shape();
            let da = s.dim_of_all(&strs(alice))?;
            let db = s.dim_of_all(&strs(bob))?;
            // per-sender state on (ref, use 1, use 2), references as large as the inputs
            let sender = |d: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Result<PureState> {
                let shape = SystemShape::new([("R", d * d), ("S1", d), ("S2", d)])?;
                Ok(random_pure(shape, rng))
            };
            let input = QQInput::new(sender(da, &mut rng)?, sender(db, &mut rng)?);
            two_use_marginal(ch, &input)?
        }
        Arity::Single => {
            let d = ch.in_dim();
            let shape = SystemShape::new([("R", d * d), ("S1", d), ("S2", d)])?;
            random_pure(shape, &mut rng).reduced(&["S1", "S2"])?
        }
    };
    let rho = rho.with_shape(two.in_shape().clone())?;
    Ok(coherent_info_channel(&rho, two)? / 2.0)
}

/// `tr_{refs}(Psi_1 (x) Psi_2)` ordered as the two-use input `[A'1 B'1 A'2 B'2]`.
fn two_use_marginal(ch: &Channel, input: &QQInput) -> Result<DensityMatrix> {
    let a = input.alice_state.reduced(&["S1", "S2"])?;
    let b = input.bob_state.reduced(&["S1", "S2"])?;
    let a = a.with_shape(SystemShape::new([
        ("a1", a.shape().dims()[0]),
        ("a2", a.shape().dims()[1]),
    ])?)?;
    let b = b.with_shape(SystemShape::new([
        ("b1", b.shape().dims()[0]),
        ("b2", b.shape().dims()[1]),
    ])?)?;
    let _ = ch;
    a.tensor(&b)?.permute(&["a1", "b1", "a2", "b2"])
}

/// Parses `erasure:d=2`, `phaseflip:p=0.1`, `identity:da=2,db=2` and
/// `dephasing:file=path` (a JSON list of environment vectors).
pub fn parse_channel_id(id: &str) -> Result<NamedChannel> {
    let bad = |msg: String| Error::format("channel", msg);
    let (family, rest) = id
        .split_once(':')
        .ok_or_else(|| bad(format!("'{id}' is not of the form family:key=value")))?;
    let params: Vec<(&str, &str)> = rest
        .split(',')
        .map(|kv| {
            kv.split_once('=')
                .ok_or_else(|| bad(format!("malformed parameter '{kv}'")))
        })
        .collect::<Result<_>>()?;
    let get = |key: &str| -> Result<&str> {
        params
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| bad(format!("{family} needs parameter '{key}'")))
    };
    let int = |key: &str| -> Result<usize> {
        get(key)?
            .parse()
            .map_err(|_| bad(format!("parameter '{key}' is not a positive integer")))
    };
    match family {
        "erasure" => erasure_mac(int("d")?),
        "phaseflip" => {
            let p: f64 = get("p")?
                .parse()
                .map_err(|_| bad("parameter 'p' is not a number".into()))?;
            phase_flip_mac(p)
        }
        "identity" => identity_mac(int("da")?, int("db")?),
        "dephasing" => {
            let path = get("file")?;
            let phis = crate::io::read_dephasing_file(Path::new(path))?;
            let mut nc = dephasing_channel(&phis)?;
            nc.id = id.to_string();
            Ok(nc)
        }
        other => Err(bad(format!("unknown channel family '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{cq_rates, qq_rates, CQInput};
    use crate::channels::{apply_all, choi};
    use crate::states::max_entangled;

    fn direct_erasure_action(d: usize, tau: &CMatrix, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(d + 1, d + 1);
        out.set(0, 0, tau.get(0, 0));
        for i in 0..d {
            for j in 0..d {
                out.set(i + 1, j + 1, tau.get(1, 1) * rho.get(i, j));
            }
        }
        out
    }

    #[test]
    fn erasure_matches_direct_action() {
        let mut rng = rng_for(3, 0, 0);
        for d in 2..=3 {
            let nc = erasure_mac(d).unwrap();
            assert_eq!(nc.channel.kraus().len(), d + 1);
            assert!(nc.channel.cptp_margin() < 1e-12);
            for _ in 0..5 {
                let tau = crate::random::random_mixed(SystemShape::single("A'", 2), &mut rng);
                let rho = crate::random::random_mixed(SystemShape::single("B'", d), &mut rng);
                let out = apply_all(&nc.channel, &tau.tensor(&rho).unwrap()).unwrap();
                let want = direct_erasure_action(d, tau.mat(), rho.mat());
                assert!((out.mat() - &want).max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn erasure_curve_endpoints() {
        let p0 = erasure_point(2, 0.0).unwrap();
        let p1 = erasure_point(2, 0.5).unwrap();
        assert_eq!((p0.x, p0.y), (0.0, 1.0));
        assert!((p1.x - 1.0).abs() < 1e-15 && p1.y.abs() < 1e-15);
        let p = erasure_point(2, 0.25).unwrap();
        assert!((p.x - 0.811_278_124_459_132_8).abs() < 1e-12 && (p.y - 0.5).abs() < 1e-15);
        assert!(erasure_point(2, 0.6).is_err());
    }

    #[test]
    fn erasure_rates_match_curve_for_d3() {
        let nc = erasure_mac(3).unwrap();
        let a = SystemShape::single("A'", 2);
        let input = CQInput::new(
            vec![0.75, 0.25],
            vec![
                PureState::basis(a.clone(), 1).unwrap(),
                PureState::basis(a, 0).unwrap(),
            ],
            max_entangled(3),
        )
        .unwrap();
        let p = cq_rates(&nc.channel, &input, 1).unwrap();
        let want = erasure_point(3, 0.25).unwrap();
        assert!((p.x - want.x).abs() < 1e-10 && (p.y - want.y).abs() < 1e-10);
        assert!((want.y - 0.5 * 3f64.log2()).abs() < 1e-15);
    }

    #[test]
    fn phase_flip_structure() {
        let nc = phase_flip_mac(0.1).unwrap();
        assert!(nc.channel.kraus_commutator_norm() < 1e-12);
        let d = nc.degrading_candidate.as_ref().unwrap();
        assert!(verify_degrading(&nc.channel, d).unwrap() < 1e-12);
        let pi4 = crate::states::max_mixed_on(nc.channel.in_shape().clone());
        let out = apply_all(&nc.channel, &pi4).unwrap();
        assert!((entropy(&out).unwrap() - 2.0).abs() < 1e-12);
        let id = phase_flip_mac(0.0).unwrap();
        let ident = Channel::identity(SystemShape::single("x", 4));
        assert!((&choi(&id.channel) - &choi(&ident)).max_abs() < 1e-12);
    }

    #[test]
    fn phase_flip_caps() {
        for p in [0.0, 0.1, 0.25, 0.5] {
            let nc = phase_flip_mac(p).unwrap();
            let r = qq_rates(
                &nc.channel,
                &QQInput::new(max_entangled(2), max_entangled(2)),
                1,
            )
            .unwrap();
            let want = phase_flip_pentagon(p).unwrap();
            assert!((r.pentagon.a_cap - 1.0).abs() < 1e-9);
            assert!((r.pentagon.b_cap - 1.0).abs() < 1e-9);
            assert!((r.pentagon.sum_cap - want.sum_cap).abs() < 1e-9, "p={p}");
        }
        assert!((phase_flip_pentagon(0.1).unwrap().sum_cap - 1.531_004_406_410_718).abs() < 1e-12);
    }

    fn qubit(re: &[f64]) -> PureState {
        PureState::normalized(
            CMatrix::from_fn(re.len(), 1, |i, _| c64(re[i], 0.0)),
            SystemShape::single("E", re.len()),
        )
        .unwrap()
    }

    #[test]
    fn dephasing_extremes() {
        let orth = dephasing_channel(&[qubit(&[1.0, 0.0]), qubit(&[0.0, 1.0])]).unwrap();
        let same = dephasing_channel(&[qubit(&[1.0, 0.0]), qubit(&[1.0, 0.0])]).unwrap();
        let b = Budget {
            restarts: 4,
            evals: 400,
        };
        assert!(dephasing_capacity(&orth, b, 1).unwrap().abs() < 1e-9);
        assert!((dephasing_capacity(&same, b, 1).unwrap() - 1.0).abs() < 1e-9);
        let ident = Channel::identity(SystemShape::single("x", 2));
        assert!((&choi(&same.channel) - &choi(&ident)).max_abs() < 1e-12);
        for nc in [&orth, &same] {
            let d = nc.degrading_candidate.as_ref().unwrap();
            assert!(verify_degrading(&nc.channel, d).unwrap() < 1e-12);
        }
        assert!(matches!(
            dephasing_capacity(&erasure_mac(2).unwrap(), b, 1),
            Err(Error::WrongFamily(_))
        ));
    }

    #[test]
    fn phase_flip_as_dephasing() {
        let p: f64 = 0.1;
        let z = [1.0, -1.0, -1.0, 1.0];
        let phis: Vec<PureState> = z
            .iter()
            .map(|s| qubit(&[(1.0 - p).sqrt(), p.sqrt() * s]))
            .collect();
        let nc = dephasing_channel(&phis).unwrap();
        let q = dephasing_capacity(
            &nc,
            Budget {
                restarts: 4,
                evals: 2000,
            },
            5,
        )
        .unwrap();
        assert!((q - (2.0 - h2(p))).abs() < 1e-8, "{q}");
    }

    #[test]
    fn additivity_on_phase_flip() {
        let nc = phase_flip_mac(0.1).unwrap();
        let r = degradable_sum_rate_check(&nc, 5, 11, 1e-6).unwrap();
        assert!(r.failures.is_empty(), "{r:?}");
        assert!(r.max_per_use <= r.cap + 1e-6);
        let erasure = erasure_mac(2).unwrap();
        assert!(matches!(
            degradable_sum_rate_check(&erasure, 1, 0, 1e-6),
            Err(Error::NotDegradable(_))
        ));
    }

    #[test]
    fn parses_ids() {
        assert_eq!(
            parse_channel_id("erasure:d=3").unwrap().channel.out_dim(),
            4
        );
        assert_eq!(
            parse_channel_id("phaseflip:p=0.25").unwrap().id,
            "phaseflip:p=0.25"
        );
        for bad in ["erasure", "erasure:d=x", "nope:d=2", "phaseflip:q=1"] {
            assert!(
                matches!(parse_channel_id(bad), Err(Error::Format { .. })),
                "{bad}"
            );
        }
    }
}
