//! Rate formulas for the two MAC coding theorems and their numerical optimization.
//!
//! Classical-quantum (cq) rates: Alice sends classical messages, Bob sends
//! quantum information. For an ensemble `{p(x), phi_x}` on `A'^k` and a pure
//! state `Psi` on `B (x) B'^k`,
//!
//! ```text
//! omega^{X B C^k} = sum_x p(x) |x><x| (x) N^{(x)k}(phi_x (x) Psi)
//! R = I(X; C^k) / k,   Q = I_c(B > C^k X) / k
//! ```
//!
//! Quantum-quantum (qq) rates: both senders send quantum information from
//! pure states `Psi_1` on `A (x) A'^k` and `Psi_2` on `B (x) B'^k`, giving a pentagon
//! with caps `I_c(A > B C^k)`, `I_c(B > A C^k)` and `I_c(AB > C^k)`, each over `k`.

use serde::{Deserialize, Serialize};

use crate::channels::{apply_pure_state, tensor_power, Arity, Channel};
use crate::error::{Error, Result};
use crate::info::{coherent_info_state, entropy, marginal_entropy, mutual_info};
use crate::optimize::{pattern_search, rng_for, start_point, Budget, INITIAL_STEP};
use crate::region::{Pentagon, PentagonReport, RatePoint, Region2D};
use crate::states::{check_distribution, DensityMatrix, PureState};
use crate::tensor::{c64, index_map, CMatrix, SystemShape, C64};

/// Largest input or output dimension of `N^{(x)k}` the evaluator accepts.
pub const MAX_DIM: usize = 64;

/// A two-sender channel rewritten on inputs `[A', B']` and output `[C]`, with
/// its `k`-fold tensor power on `[A'1, B'1, ..., A'k, B'k] -> [C1, ..., Ck]`.
#[derive(Clone, Debug)]
pub struct MacEvaluator {
    base: Channel,
    power: Channel,
    k: usize,
}

impl MacEvaluator {
    pub fn new(ch: &Channel, k: usize) -> Result<Self> {
        if !(1..=2).contains(&k) {
            return Err(Error::InvalidParameter(format!(
                "k = {k}; only k = 1, 2 are supported"
            )));
        }
        let Arity::Mac2 { alice, bob } = ch.arity() else {
            return Err(Error::Arity(
                "rate formulas need a two-sender channel".into(),
            ));
        };
        let order: Vec<&str> = alice.iter().chain(bob).map(String::as_str).collect();
        let src = ch.in_shape();
        let map = index_map(src, &order)?;
        let da: usize = src.dim_of_all(&alice.iter().map(String::as_str).collect::<Vec<_>>())?;
        let db = src.dim() / da;
        let dc = ch.out_dim();
        for dim in [da * db, dc] {
            let total = dim.checked_pow(k as u32).unwrap_or(usize::MAX);
            if total > MAX_DIM {
                return Err(Error::DimensionOverflow {
                    dim: total,
                    limit: MAX_DIM,
                });
            }
        }
        let kraus = ch
            .kraus()
            .iter()
            .map(|m| CMatrix::from_fn(dc, da * db, |r, c| m.get(r, map[c])))
            .collect();
        let in_shape = SystemShape::new([("A'", da), ("B'", db)])?;
        let base = match ch.kind() {
            crate::channels::ChannelKind::TracePreserving => {
                Channel::new(kraus, in_shape, SystemShape::single("C", dc))?
            }
            crate::channels::ChannelKind::TraceReducing => {
                Channel::trace_reducing(kraus, in_shape, SystemShape::single("C", dc))?
            }
        }
        .into_mac2(&["A'"], &["B'"])?;
        let power = tensor_power(&base, k)?;
        Ok(MacEvaluator { base, power, k })
    }

    pub fn base(&self) -> &Channel {
        &self.base
    }

    pub fn power(&self) -> &Channel {
        &self.power
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `(|A'|, |B'|, |C|)` for one channel use.
    pub fn dims(&self) -> (usize, usize, usize) {
        let d = self.base.in_shape().dims();
        (d[0], d[1], self.base.out_dim())
    }

    fn alice_shape(&self) -> SystemShape {
        let da = self.dims().0;
        SystemShape::new((1..=self.k).map(|j| (format!("A'{j}"), da))).expect("distinct labels")
    }

    /// `[ref, B'1, ..., B'k]`; the reference dimension is whatever is left over.
    fn sender_shape(
        &self,
        ref_label: &str,
        prime: &str,
        d: usize,
        total: usize,
    ) -> Result<SystemShape> {
        let dk = d.pow(self.k as u32);
        if !total.is_multiple_of(dk) {
            return Err(Error::DimensionMismatch(format!(
                "state of dimension {total} is not a purification on {prime}^{} (dim {dk})",
                self.k
            )));
        }
        let mut f = vec![(ref_label.to_string(), total / dk)];
        f.extend((1..=self.k).map(|j| (format!("{prime}{j}"), d)));
        SystemShape::new(f)
    }

    fn input_labels(&self) -> Vec<String> {
        self.power
            .in_shape()
            .labels()
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn out_labels(&self) -> Vec<String> {
        self.power
            .out_shape()
            .labels()
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    /// `N^{(x)k}(phi (x) Psi)` on `[C1..Ck, B]`.
    fn cq_branch(&self, phi: &PureState, bob: &PureState) -> Result<DensityMatrix> {
        let (da, db, _) = self.dims();
        let phi = phi.with_shape(self.alice_shape())?;
        if phi.dim() != da.pow(self.k as u32) {
            return Err(Error::DimensionMismatch("Alice state dimension".into()));
        }
        let bob = bob.with_shape(self.sender_shape("B", "B'", db, bob.dim())?)?;
        let joint = phi.tensor(&bob)?;
        let labels = self.input_labels();
        let on: Vec<&str> = labels.iter().map(String::as_str).collect();
        apply_pure_state(&self.power, &joint, &on)
    }

    /// `omega^{A C^k B}` for the qq setting.
    pub fn qq_state(&self, input: &QQInput) -> Result<DensityMatrix> {
        let (da, db, _) = self.dims();
        let a = &input.alice_state;
        let b = &input.bob_state;
        let a = a.with_shape(self.sender_shape("A", "A'", da, a.dim())?)?;
        let b = b.with_shape(self.sender_shape("B", "B'", db, b.dim())?)?;
        let joint = a.tensor(&b)?;
        let labels = self.input_labels();
        let on: Vec<&str> = labels.iter().map(String::as_str).collect();
        apply_pure_state(&self.power, &joint, &on)
    }

    /// The full cq state `omega^{X C^k B}`; the rate functions avoid building it.
    pub fn cq_state(&self, input: &CQInput) -> Result<DensityMatrix> {
        let branches = input
            .states
            .iter()
            .map(|phi| self.cq_branch(phi, &input.bob_state))
            .collect::<Result<Vec<_>>>()?;
        let e = crate::states::Ensemble::new(input.probs.clone(), branches)?;
        crate::states::CQState::new(e, "X").map(|s| s.assemble())
    }

    /// `(I(X; C^k), I_c(B > C^k X)) / k` evaluated on the assembled `omega`.
    pub fn cq_rates(&self, input: &CQInput) -> Result<RatePoint> {
        let omega = self.cq_state(input)?;
        let outs = self.out_labels();
        let c: Vec<&str> = outs.iter().map(String::as_str).collect();
        let mut cx = c.clone();
        cx.push("X");
        let k = self.k as f64;
        Ok(RatePoint::new(
            mutual_info(&omega, &["X"], &c)? / k,
            coherent_info_state(&omega, &["B"], &cx)? / k,
        ))
    }

    /// Same rates from the blocks of `omega`: `H(XC) = H(p) + sum p H(rho_x^C)`,
    /// and the `H(p)` terms cancel.
    pub fn cq_rates_blockwise(&self, input: &CQInput) -> Result<RatePoint> {
        let outs = self.out_labels();
        let c: Vec<&str> = outs.iter().map(String::as_str).collect();
        let mut avg: Option<(CMatrix, SystemShape)> = None;
        let mut cond_c = 0.0;
        let mut cond_bc = 0.0;
        for (p, phi) in input.probs.iter().zip(&input.states) {
            if *p <= 0.0 {
                continue;
            }
            let rho = self.cq_branch(phi, &input.bob_state)?;
            let rho_c = rho.reduced(&c)?;
            cond_c += p * entropy(&rho_c)?;
            cond_bc += p * entropy(&rho)?;
            let scaled = rho_c.mat().scale(*p);
            avg = Some(match avg {
                None => (scaled, rho_c.shape().clone()),
                Some((m, s)) => (&m + &scaled, s),
            });
        }
        let (m, shape) = avg.ok_or(Error::InvalidEnsemble("no positive weights".into()))?;
        let h_avg = entropy(&DensityMatrix::from_unnormalized(m, shape)?)?;
        let k = self.k as f64;
        Ok(RatePoint::new((h_avg - cond_c) / k, (cond_c - cond_bc) / k))
    }

    pub fn qq_rates(&self, input: &QQInput) -> Result<PentagonReport> {
        let omega = self.qq_state(input)?;
        let outs = self.out_labels();
        let c: Vec<&str> = outs.iter().map(String::as_str).collect();
        let mut bc = c.clone();
        bc.push("B");
        let mut ac = c.clone();
        ac.push("A");
        let h_abc = entropy(&omega)?;
        let h_bc = marginal_entropy(&omega, &bc)?;
        let h_ac = marginal_entropy(&omega, &ac)?;
        let h_c = marginal_entropy(&omega, &c)?;
        let k = self.k as f64;
        Ok(Pentagon::report(
            (h_bc - h_abc) / k,
            (h_ac - h_abc) / k,
            (h_c - h_abc) / k,
        ))
    }
}

/// Alice's pure-state ensemble on `A'^k` and Bob's pure state on `B (x) B'^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct CQInput {
    pub probs: Vec<f64>,
    pub states: Vec<PureState>,
    pub bob_state: PureState,
}

impl CQInput {
    pub fn new(probs: Vec<f64>, states: Vec<PureState>, bob_state: PureState) -> Result<Self> {
        if probs.len() != states.len() || probs.is_empty() {
            return Err(Error::InvalidEnsemble(format!(
                "{} probabilities for {} states",
                probs.len(),
                states.len()
            )));
        }
        check_distribution(&probs)?;
        if states.iter().any(|s| s.dim() != states[0].dim()) {
            return Err(Error::InvalidEnsemble(
                "states of different dimension".into(),
            ));
        }
        Ok(CQInput {
            probs,
            states,
            bob_state,
        })
    }

    /// Copies of a one-use input placed side by side: `phi_x (x) phi_y` with
    /// weight `p(x) p(y)`, and `Psi (x) Psi` reordered to `[B B, B'1 B'2]`.
    pub fn product(&self, other: &CQInput) -> Result<CQInput> {
        let mut probs = Vec::new();
        let mut states = Vec::new();
        for (p, a) in self.probs.iter().zip(&self.states) {
            for (q, b) in other.probs.iter().zip(&other.states) {
                probs.push(p * q);
                states.push(product_pure(a, b)?);
            }
        }
        let bob = product_sender(&self.bob_state, &other.bob_state)?;
        CQInput::new(probs, states, bob)
    }
}

/// Pure states of both senders, each with its own reference system.
#[derive(Clone, Debug, PartialEq)]
pub struct QQInput {
    pub alice_state: PureState,
    pub bob_state: PureState,
}

impl QQInput {
    pub fn new(alice_state: PureState, bob_state: PureState) -> Self {
        QQInput {
            alice_state,
            bob_state,
        }
    }

    /// Two one-use inputs as a two-use input with references grouped first.
    pub fn product(&self, other: &QQInput) -> Result<QQInput> {
        Ok(QQInput {
            alice_state: product_sender(&self.alice_state, &other.alice_state)?,
            bob_state: product_sender(&self.bob_state, &other.bob_state)?,
        })
    }
}

fn flat(psi: &PureState, label: &str) -> Result<PureState> {
    psi.with_shape(SystemShape::single(label, psi.dim()))
}

fn product_pure(a: &PureState, b: &PureState) -> Result<PureState> {
    let t = flat(a, "u")?.tensor(&flat(b, "v")?)?;
    flat(&t, "A'")
}

/// `(R1 S1) (x) (R2 S2)` as `(R1 R2) (S1 S2)`, where each factor is a
/// one-use sender state `[ref, prime]` with the last factor as the channel input.
fn product_sender(a: &PureState, b: &PureState) -> Result<PureState> {
    let split = |s: &PureState, tag: &str| -> Result<PureState> {
        let dims = s.shape().dims();
        let d_in = *dims.last().expect("nonempty shape");
        let d_ref = s.dim() / d_in;
        s.with_shape(SystemShape::new([
            (format!("r{tag}"), d_ref),
            (format!("s{tag}"), d_in),
        ])?)
    };
    let t = split(a, "1")?.tensor(&split(b, "2")?)?;
    let p = t.permute(&["r1", "r2", "s1", "s2"])?;
    let dims = p.shape().dims();
    p.with_shape(SystemShape::new([
        ("R", dims[0] * dims[1]),
        ("S1", dims[2]),
        ("S2", dims[3]),
    ])?)
}

pub fn cq_rates(ch: &Channel, input: &CQInput, k: usize) -> Result<RatePoint> {
    MacEvaluator::new(ch, k)?.cq_rates(input)
}

pub fn qq_rates(ch: &Channel, input: &QQInput, k: usize) -> Result<PentagonReport> {
    MacEvaluator::new(ch, k)?.qq_rates(input)
}

/// Rates of a two-use input, per channel use.
#[derive(Clone, Debug, PartialEq)]
pub enum TensorPowerInput {
    Cq(CQInput),
    Qq(QQInput),
}

#[derive(Clone, Debug, PartialEq)]
pub enum TensorPowerRates {
    Cq(RatePoint),
    Qq(PentagonReport),
}

pub fn tensor_power_rates(
    ch: &Channel,
    k: usize,
    input: &TensorPowerInput,
) -> Result<TensorPowerRates> {
    let ev = MacEvaluator::new(ch, k)?;
    Ok(match input {
        TensorPowerInput::Cq(i) => TensorPowerRates::Cq(ev.cq_rates(i)?),
        TensorPowerInput::Qq(i) => TensorPowerRates::Qq(ev.qq_rates(i)?),
    })
}

/// Ensemble size used by the cq optimizer: `min{|A'|, |C|}^2 + 1`.
pub fn cq_support_size(da: usize, dc: usize) -> usize {
    da.min(dc).pow(2) + 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionOptions {
    /// Number of scalarization weights, evenly spaced on `[0, 1]`.
    pub samples: usize,
    pub budget: Budget,
    pub seed: u64,
    /// Spread restarts over the rayon pool when the `parallel` feature is on.
    pub parallel: bool,
}

impl Default for RegionOptions {
    fn default() -> Self {
        RegionOptions {
            samples: 33,
            budget: Budget::default(),
            seed: 0,
            parallel: true,
        }
    }
}

/// Best input found for one weight `lambda` on the first coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub lambda: f64,
    pub value: f64,
    /// Unclamped rates: `[R, Q]` for cq, `[a_cap, b_cap, sum_cap]` for qq.
    pub raw: Vec<f64>,
    pub restart: usize,
    pub evals: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionResult {
    pub region: Region2D,
    pub sweep: Vec<SweepRecord>,
    /// Pentagons behind a qq region, one per sweep record.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub pentagons: Vec<Pentagon>,
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Unit vector from `2d` reals; the zero vector maps to `|0>`.
fn decode_state(x: &[f64], shape: SystemShape) -> PureState {
    let d = x.len() / 2;
    let amps: Vec<C64> = (0..d).map(|i| c64(x[2 * i], x[2 * i + 1])).collect();
    let v = CMatrix::column(amps).expect("finite parameters");
    PureState::normalized(v, shape.clone())
        .unwrap_or_else(|_| PureState::basis(shape, 0).expect("nonempty shape"))
}

fn lambdas(samples: usize) -> Vec<f64> {
    let n = samples.max(2);
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

struct Candidate {
    value: f64,
    first: f64,
    x: Vec<f64>,
    restart: usize,
    evals: usize,
}

/// Runs every `(lambda, restart)` search and keeps the best per lambda: higher
/// objective, then larger first coordinate, then lower restart index.
fn sweep<F, G>(opts: &RegionOptions, dim: usize, objective: F, first: G) -> Vec<(f64, Candidate)>
where
    F: Fn(&[f64], f64) -> f64 + Sync,
    G: Fn(&[f64]) -> f64 + Sync,
{
    let ls = lambdas(opts.samples);
    let restarts = opts.budget.restarts.max(1);
    let tasks: Vec<(usize, usize)> = (0..ls.len())
        .flat_map(|i| (0..restarts).map(move |r| (i, r)))
        .collect();
    let run = |&(i, r): &(usize, usize)| -> Candidate {
        let lam = ls[i];
        let mut rng = rng_for(opts.seed, i as u64, r as u64);
        let x0 = start_point(dim, r, 1.0, &mut rng);
        let mut f = |x: &[f64]| objective(x, lam);
        let res = pattern_search(&mut f, x0, INITIAL_STEP, opts.budget.evals);
        Candidate {
            value: res.value,
            first: first(&res.x),
            x: res.x,
            restart: r,
            evals: res.evals,
        }
    };
    let results: Vec<Candidate> = run_tasks(&tasks, opts.parallel, run);
    let mut best: Vec<Option<Candidate>> = (0..ls.len()).map(|_| None).collect();
    for ((i, _), c) in tasks.iter().zip(results) {
        let slot = &mut best[*i];
        let better = match slot {
            None => true,
            Some(b) => {
                c.value > b.value + 1e-12
                    || ((c.value - b.value).abs() <= 1e-12 && c.first > b.first)
            }
        };
        if better {
            *slot = Some(c);
        }
    }
    ls.into_iter()
        .zip(best)
        .map(|(l, c)| (l, c.expect("at least one restart")))
        .collect()
}

#[cfg(feature = "parallel")]
fn run_tasks<T, R, F>(tasks: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if parallel {
        tasks.par_iter().map(f).collect()
    } else {
        tasks.iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
fn run_tasks<T, R, F>(tasks: &[T], _parallel: bool, f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    tasks.iter().map(f).collect()
}

/// Layout of the cq search vector: logits, Alice's states, Bob's state.
struct CqParams {
    n: usize,
    da: usize,
    db: usize,
}

impl CqParams {
    fn dim(&self) -> usize {
        self.n + self.n * 2 * self.da + 2 * self.db * self.db
    }

    fn decode(&self, x: &[f64]) -> CQInput {
        let probs = softmax(&x[..self.n]);
        let mut off = self.n;
        let a_shape = SystemShape::single("A'", self.da);
        let states = (0..self.n)
            .map(|_| {
                let s = decode_state(&x[off..off + 2 * self.da], a_shape.clone());
                off += 2 * self.da;
                s
            })
            .collect();
        let b_shape = SystemShape::new([("B", self.db), ("B'", self.db)]).expect("distinct labels");
        let bob_state = decode_state(&x[off..], b_shape);
        CQInput {
            probs,
            states,
            bob_state,
        }
    }
}

/// Traces the cq region by maximizing `lambda R + (1 - lambda) Q` over inputs
/// with `min{|A'|,|C|}^2 + 1` ensemble members.
pub fn optimize_cq_region(ch: &Channel, opts: &RegionOptions) -> Result<RegionResult> {
    let ev = MacEvaluator::new(ch, 1)?;
    let (da, db, dc) = ev.dims();
    let params = CqParams {
        n: cq_support_size(da, dc),
        da,
        db,
    };
    let rates = |x: &[f64]| -> RatePoint {
        ev.cq_rates(&params.decode(x))
            .unwrap_or(RatePoint::new(f64::NAN, f64::NAN))
    };
    let best = sweep(
        opts,
        params.dim(),
        |x, lam| {
            let p = rates(x).clamped();
            lam * p.x + (1.0 - lam) * p.y
        },
        |x| rates(x).clamped().x,
    );
    let mut sweep_records = Vec::with_capacity(best.len());
    let mut corners = Vec::with_capacity(best.len());
    for (lam, c) in best {
        let raw = rates(&c.x);
        corners.push(raw.clamped());
        sweep_records.push(SweepRecord {
            lambda: lam,
            value: c.value,
            raw: vec![raw.x, raw.y],
            restart: c.restart,
            evals: c.evals,
        });
    }
    Ok(RegionResult {
        region: Region2D::from_rectangles(["R", "Q"], &corners),
        sweep: sweep_records,
        pentagons: Vec::new(),
    })
}

fn best_vertex(p: &Pentagon, lam: f64) -> (f64, f64) {
    p.vertices()
        .into_iter()
        .map(|v| (lam * v.x + (1.0 - lam) * v.y, v.x))
        .fold(
            (f64::NEG_INFINITY, 0.0),
            |acc, v| if v.0 > acc.0 { v } else { acc },
        )
}

/// Traces the qq region; each input contributes its pentagon and the search
/// maximizes the pentagon's support function in direction `(lambda, 1 - lambda)`.
pub fn optimize_qq_region(ch: &Channel, opts: &RegionOptions) -> Result<RegionResult> {
    let ev = MacEvaluator::new(ch, 1)?;
    let (da, db, _) = ev.dims();
    let a_shape = SystemShape::new([("A", da), ("A'", da)])?;
    let b_shape = SystemShape::new([("B", db), ("B'", db)])?;
    let na = 2 * da * da;
    let decode = |x: &[f64]| QQInput {
        alice_state: decode_state(&x[..na], a_shape.clone()),
        bob_state: decode_state(&x[na..], b_shape.clone()),
    };
    let report = |x: &[f64]| ev.qq_rates(&decode(x)).ok();
    let best = sweep(
        opts,
        na + 2 * db * db,
        |x, lam| match report(x) {
            Some(r) => best_vertex(&r.pentagon, lam).0,
            None => f64::NEG_INFINITY,
        },
        |x| report(x).map_or(0.0, |r| r.pentagon.a_cap),
    );
    let mut sweep_records = Vec::with_capacity(best.len());
    let mut pentagons = Vec::with_capacity(best.len());
    for (lam, c) in best {
        let r = ev.qq_rates(&decode(&c.x))?;
        pentagons.push(r.pentagon);
        sweep_records.push(SweepRecord {
            lambda: lam,
            value: c.value,
            raw: r.raw.to_vec(),
            restart: c.restart,
            evals: c.evals,
        });
    }
    Ok(RegionResult {
        region: Region2D::from_pentagons(["Qa", "Qb"], &pentagons),
        sweep: sweep_records,
        pentagons,
    })
}
