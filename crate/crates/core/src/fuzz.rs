//! Randomized checks of the entropy and distance inequalities the coding
//! theorems rest on. Every trial draws from its own seeded stream, so a
//! failure can be replayed from the seed alone.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{apply, tensor_power, Channel};
use crate::error::{Error, Result};
use crate::info::{
    coherent_info_channel, coherent_info_state, cond_entropy, cond_mutual_info, h2, holevo,
    marginal_entropy, mutual_info,
};
use crate::metrics::{
    continuity_bound, fid_trace_sandwich, gentle_measurement, special_triangle, transitivity_bound,
};
use crate::optimize::Budget;
use crate::random::{
    random_channel, random_density, random_ensemble, random_povm, random_pure, random_unitary,
};
use crate::states::{DensityMatrix, PureState};
use crate::tensor::{c64, CMatrix, SystemShape};
use crate::zoo::{dephasing_capacity, dephasing_channel, phase_flip_mac, sum_rate_trial};

/// Default failure threshold on margins.
pub const FUZZ_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Ssa,
    Dataproc,
    Holevo,
    Jointsub,
    Superadd,
    Metrics,
    Degradable,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Ssa,
        Suite::Dataproc,
        Suite::Holevo,
        Suite::Jointsub,
        Suite::Superadd,
        Suite::Metrics,
        Suite::Degradable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Ssa => "ssa",
            Suite::Dataproc => "dataproc",
            Suite::Holevo => "holevo",
            Suite::Jointsub => "jointsub",
            Suite::Superadd => "superadd",
            Suite::Metrics => "metrics",
            Suite::Degradable => "degradable",
        }
    }

    /// Slack allowed below zero before a margin counts as a failure. The
    /// additivity suite compares against numerically optimized capacities.
    pub fn tolerance(self) -> f64 {
        match self {
            Suite::Degradable => 1e-6,
            _ => FUZZ_TOL,
        }
    }

    fn id(self) -> u64 {
        Suite::ALL.iter().position(|s| *s == self).expect("listed") as u64 + 1
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown fuzz suite '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzFailure {
    pub trial: usize,
    /// Reproduces the trial via [`run_trial`].
    pub seed: u64,
    pub check: String,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub suite: Suite,
    pub trials: usize,
    pub tolerance: f64,
    pub worst_margin: f64,
    pub worst_check: String,
    pub failures: Vec<FuzzFailure>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Named margins of one trial; each should be nonnegative.
pub type Margins = Vec<(&'static str, f64)>;

fn shape(factors: &[(&str, usize)]) -> SystemShape {
    SystemShape::new(factors.iter().map(|(l, d)| (l.to_string(), *d))).expect("valid shape")
}

/// Mixed state on `factors`, obtained by tracing a reference of random size out of a pure state.
fn random_marginal(factors: &[(&str, usize)], rng: &mut ChaCha8Rng) -> Result<DensityMatrix> {
    let r = rng.random_range(1..=4usize);
    let mut all = factors.to_vec();
    all.push(("ref", r));
    let keep: Vec<&str> = factors.iter().map(|(l, _)| *l).collect();
    random_pure(shape(&all), rng).reduced(&keep)
}

fn random_state(factors: &[(&str, usize)], rng: &mut ChaCha8Rng) -> DensityMatrix {
    let s = shape(factors);
    let rank = rng.random_range(1..=s.dim());
    random_density(s, rank, rng)
}

fn ssa(rng: &mut ChaCha8Rng) -> Result<Margins> {
    let rho = random_marginal(&[("A", 2), ("B", 2), ("C", 2)], rng)?;
    let (ha, hb, hab) = (
        marginal_entropy(&rho, &["A"])?,
        marginal_entropy(&rho, &["B"])?,
        marginal_entropy(&rho, &["A", "B"])?,
    );
    Ok(vec![
        (
            "I(A;B|C) >= 0",
            cond_mutual_info(&rho, &["A"], &["B"], &["C"])?,
        ),
        (
            "I(A;C|B) >= 0",
            cond_mutual_info(&rho, &["A"], &["C"], &["B"])?,
        ),
        ("H(A) + H(B) >= H(AB)", ha + hb - hab),
        ("H(AB) >= |H(A) - H(B)|", hab - (ha - hb).abs()),
    ])
}

fn dataproc(rng: &mut ChaCha8Rng) -> Result<Margins> {
    let da = rng.random_range(2..=3usize);
    let rho = random_marginal(&[("A", da), ("B", 2)], rng)?;
    let n_kraus = rng.random_range(1..=3usize);
    let ch = random_channel(shape(&[("B", 2)]), shape(&[("C", 2)]), n_kraus, rng);
    let out = apply(&ch, &rho, &["B"])?;
    Ok(vec![
        (
            "I_c(A>B) >= I_c(A>C)",
            coherent_info_state(&rho, &["A"], &["B"])? - coherent_info_state(&out, &["A"], &["C"])?,
        ),
        (
            "I(A;B) >= I(A;C)",
            mutual_info(&rho, &["A"], &["B"])? - mutual_info(&out, &["A"], &["C"])?,
        ),
    ])
}

fn holevo_trial(rng: &mut ChaCha8Rng) -> Result<Margins> {
    let d = rng.random_range(2..=3usize);
    let n = rng.random_range(2..=4usize);
    let rank = rng.random_range(1..=d);
    let e = random_ensemble(shape(&[("B", d)]), n, rank, rng)?;
    let outcomes = rng.random_range(2..=4usize);
    let povm = random_povm(d, outcomes, rng);
    let mut joint = vec![vec![0.0; outcomes]; n];
    for (x, (p, rho)) in e.probs().iter().zip(e.states()).enumerate() {
        for (y, lam) in povm.iter().enumerate() {
            joint[x][y] = p * (lam * rho.mat()).trace().re.max(0.0);
        }
    }
    let px: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let py: Vec<f64> = (0..outcomes)
        .map(|y| joint.iter().map(|r| r[y]).sum())
        .collect();
    let mut ixy = 0.0;
    for x in 0..n {
        for y in 0..outcomes {
            let pxy = joint[x][y];
            if pxy > 0.0 {
                ixy += pxy * (pxy / (px[x] * py[y])).log2();
            }
        }
    }
    Ok(vec![("I(X;B) >= I(X;Y)", holevo(&e)? - ixy)])
}

fn jointsub(rng: &mut ChaCha8Rng) -> Result<Margins> {
    let rho = random_marginal(&[("A", 2), ("B", 2), ("C", 2), ("D", 2)], rng)?;
    let lhs = cond_entropy(&rho, &["A", "B"], &["C", "D"])?;
    let rhs = cond_entropy(&rho, &["A"], &["C"])? + cond_entropy(&rho, &["B"], &["D"])?;
    Ok(vec![("H(A|C) + H(B|D) >= H(AB|CD)", rhs - lhs)])
}

fn superadd(rng: &mut ChaCha8Rng) -> Result<Margins> {
    let dc = rng.random_range(2..=3usize);
    let rho = random_state(&[("A", 2), ("B", 2), ("C", dc), ("D", 2)], rng);
    let joint = coherent_info_state(&rho, &["A", "B"], &["C", "D"])?;
    let parts =
        coherent_info_state(&rho, &["A"], &["C"])? + coherent_info_state(&rho, &["B"], &["D"])?;
    Ok(vec![("I_c(AB>CD) >= I_c(A>C) + I_c(B>D)", joint - parts)])
}

/// Operator with spectrum in `[1 - 2 eps, 1]`, eigenbasis random.
fn near_identity(d: usize, eps: f64, rng: &mut ChaCha8Rng) -> CMatrix {
    let u = random_unitary(d, rng);
    let diag: Vec<f64> = (0..d)
        .map(|_| 1.0 - 2.0 * eps * rng.random::<f64>())
        .collect();
    (&(&u * &CMatrix::from_real_diagonal(&diag)) * &u.adjoint()).hermitian_part()
}

fn metrics(rng: &mut ChaCha8Rng) -> Result<Margins> {
    let q = shape(&[("A", 2)]);
    let rho = random_state(&[("A", 2)], rng);
    let sigma = random_state(&[("A", 2)], rng);
    let s = fid_trace_sandwich(&rho, &sigma)?;
    let [m1, m2, m3, m4] = s.margins();

    let phi = random_pure(q.clone(), rng);
    let tri = special_triangle(&phi, &rho, &sigma)?;

    // Omega close to phi (x) rho so the bound is not vacuous
    let phi_a = random_pure(shape(&[("A", 2)]), rng);
    let rho_b = random_state(&[("B", 2)], rng);
    let noise = random_state(&[("A", 2), ("B", 2)], rng);
    let t = 0.3 * rng.random::<f64>();
    let omega = phi_a.to_density().tensor(&rho_b)?.mix(&noise, t)?;
    let trans = transitivity_bound(&phi_a, &rho_b, &omega)?;

    let d = rng.random_range(2..=3usize);
    let rho_g = random_state(&[("A", d)], rng);
    let lam = near_identity(d, 0.2 * rng.random::<f64>(), rng);
    let gentle = gentle_measurement(&rho_g, &lam)?;

    let rho_ab = random_state(&[("A", 2), ("B", 2)], rng);
    let other = random_state(&[("A", 2), ("B", 2)], rng);
    let delta = 0.1 * rng.random::<f64>();
    let sigma_ab = rho_ab.mix(&other, delta)?;
    let cont = continuity_bound(&rho_ab, &sigma_ab, &["A"], &["B"])?;

    Ok(vec![
        ("T/2 <= 1 - sqrt(F)", m1.margin()),
        ("sqrt(1 - F) <= T/2", m2.margin()),
        ("F >= 1 - T", m3.margin()),
        ("1 - T^2/4 >= F", m4.margin()),
        ("special triangle", tri.margin()),
        ("transitivity", trans.margin()),
        ("gentle measurement", gentle.bound.margin()),
        ("continuity", cont.bound.margin()),
    ])
}

fn qubit_env(rng: &mut ChaCha8Rng) -> PureState {
    let amps = vec![
        c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
        c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
    ];
    PureState::normalized(CMatrix::column(amps).expect("finite"), shape(&[("E", 2)]))
        .unwrap_or_else(|_| PureState::basis(shape(&[("E", 2)]), 0).expect("basis"))
}

/// Even trials: phase-flip MAC with random `p`; odd trials: random qubit dephasing channel.
fn degradable(rng: &mut ChaCha8Rng, trial: usize) -> Result<Margins> {
    let input_seed: u64 = rng.random();
    let (ch, cap): (Channel, f64) = if trial.is_multiple_of(2) {
        let p = rng.random::<f64>();
        (phase_flip_mac(p)?.channel, 2.0 - h2(p))
    } else {
        let nc = dephasing_channel(&[qubit_env(rng), qubit_env(rng)])?;
        let cap = dephasing_capacity(
            &nc,
            Budget {
                restarts: 3,
                evals: 400,
            },
            input_seed,
        )?;
        (nc.channel, cap)
    };
    let two = tensor_power(&ch, 2)?;
    let per_use = sum_rate_trial(&ch, &two, input_seed)?;
    // single-use sanity: the capacity is attained, never exceeded, by one use
    let pi = crate::states::max_mixed_on(ch.in_shape().clone());
    let one = coherent_info_channel(&pi, &ch)?;
    Ok(vec![
        ("per-use I_c(N x N) <= single-letter max", cap - per_use),
        ("I_c(pi, N) <= single-letter max", cap - one),
    ])
}

/// Runs trial `trial` of `suite` from its own seed.
pub fn run_trial(suite: Suite, trial: usize, seed: u64) -> Result<Margins> {
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    match suite {
        Suite::Ssa => ssa(&mut rng),
        Suite::Dataproc => dataproc(&mut rng),
        Suite::Holevo => holevo_trial(&mut rng),
        Suite::Jointsub => jointsub(&mut rng),
        Suite::Superadd => superadd(&mut rng),
        Suite::Metrics => metrics(&mut rng),
        Suite::Degradable => degradable(&mut rng, trial),
    }
}

/// Seed of trial `trial` for a run with master seed `seed`.
pub fn trial_seed(suite: Suite, seed: u64, trial: usize) -> u64 {
    crate::optimize::split_seed(seed, suite.id(), trial as u64)
}

pub fn run_suite(suite: Suite, trials: usize, seed: u64, parallel: bool) -> Result<FuzzReport> {
    let idx: Vec<usize> = (0..trials).collect();
    let run = |&t: &usize| -> Result<(usize, u64, Margins)> {
        let s = trial_seed(suite, seed, t);
        Ok((t, s, run_trial(suite, t, s)?))
    };
    let results = run_all(&idx, parallel, run)?;
    let tol = suite.tolerance();
    let mut worst = f64::INFINITY;
    let mut worst_check = String::new();
    let mut failures = Vec::new();
    for (t, s, margins) in results {
        for (check, m) in margins {
            if m < worst {
                worst = m;
                worst_check = check.to_string();
            }
            if m < -tol || !m.is_finite() {
                failures.push(FuzzFailure {
                    trial: t,
                    seed: s,
                    check: check.to_string(),
                    margin: m,
                });
            }
        }
    }
    Ok(FuzzReport {
        suite,
        trials,
        tolerance: tol,
        worst_margin: worst,
        worst_check,
        failures,
    })
}

#[cfg(feature = "parallel")]
fn run_all<T, R, F>(items: &[T], parallel: bool, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    use rayon::prelude::*;
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
fn run_all<T, R, F>(items: &[T], _parallel: bool, f: F) -> Result<Vec<R>>
where
    F: Fn(&T) -> Result<R>,
{
    items.iter().map(f).collect()
}
