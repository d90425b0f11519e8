//! Completely positive maps in Kraus and isometric form.

use crate::error::{Error, Result};
use crate::states::{check_povm, DensityMatrix, PureState};
use crate::tensor::{
    herm_eigenvalues, kron, mat_fn, permute_systems, permute_vector, trace_norm, CMatrix, MatFn,
    SystemShape, C64,
};

/// Tolerance on `sum_i K_i^† K_i = 1` and on `V^† V = 1`.
pub const CPTP_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Arity {
    Single,
    /// Two senders. Every input label belongs to exactly one of them.
    Mac2 {
        alice: Vec<String>,
        bob: Vec<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelKind {
    TracePreserving,
    TraceReducing,
}

/// A completely positive map `rho -> sum_i K_i rho K_i^†`.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    kraus: Vec<CMatrix>,
    in_shape: SystemShape,
    out_shape: SystemShape,
    arity: Arity,
    kind: ChannelKind,
}

fn kraus_gram(kraus: &[CMatrix], din: usize) -> CMatrix {
    let mut g = CMatrix::zeros(din, din);
    for k in kraus {
        g = &g + &(&k.adjoint() * k);
    }
    g
}

impl Channel {
    /// Trace-preserving channel; fails if `sum K^† K` deviates from the identity.
    pub fn new(kraus: Vec<CMatrix>, in_shape: SystemShape, out_shape: SystemShape) -> Result<Self> {
        let ch = Channel::unchecked(kraus, in_shape, out_shape, ChannelKind::TracePreserving)?;
        let dev = ch.cptp_margin();
        if dev > CPTP_TOL {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(ch)
    }

    /// Trace non-increasing map; fails if `sum K^† K` has an eigenvalue above one.
    pub fn trace_reducing(
        kraus: Vec<CMatrix>,
        in_shape: SystemShape,
        out_shape: SystemShape,
    ) -> Result<Self> {
        let ch = Channel::unchecked(kraus, in_shape, out_shape, ChannelKind::TraceReducing)?;
        let g = kraus_gram(&ch.kraus, ch.in_dim());
        let top = herm_eigenvalues(&g)?.first().copied().unwrap_or(0.0);
        if top > 1.0 + CPTP_TOL {
            return Err(Error::NotTraceReducing(top - 1.0));
        }
        Ok(ch)
    }

    fn unchecked(
        kraus: Vec<CMatrix>,
        in_shape: SystemShape,
        out_shape: SystemShape,
        kind: ChannelKind,
    ) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidParameter("empty Kraus list".into()));
        }
        let (dout, din) = (out_shape.dim(), in_shape.dim());
        for (i, k) in kraus.iter().enumerate() {
            if k.rows() != dout || k.cols() != din {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator {i} is {}x{}, expected {dout}x{din}",
                    k.rows(),
                    k.cols()
                )));
            }
            if !k.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(Channel {
            kraus,
            in_shape,
            out_shape,
            arity: Arity::Single,
            kind,
        })
    }

    /// Declares the input as owned by two senders.
    pub fn into_mac2(mut self, alice: &[&str], bob: &[&str]) -> Result<Self> {
        let mut all: Vec<&str> = alice.to_vec();
        all.extend_from_slice(bob);
        if alice.is_empty() || bob.is_empty() || all.len() != self.in_shape.len() {
            return Err(Error::Arity(format!(
                "sender labels {alice:?} / {bob:?} do not partition {}",
                self.in_shape
            )));
        }
        self.in_shape.reordered(&all).map_err(|_| {
            Error::Arity(format!(
                "sender labels {alice:?} / {bob:?} do not partition {}",
                self.in_shape
            ))
        })?;
        self.arity = Arity::Mac2 {
            alice: alice.iter().map(|s| s.to_string()).collect(),
            bob: bob.iter().map(|s| s.to_string()).collect(),
        };
        Ok(self)
    }

    pub fn single(mut self) -> Self {
        self.arity = Arity::Single;
        self
    }

    pub fn identity(shape: SystemShape) -> Self {
        let d = shape.dim();
        Channel::new(vec![CMatrix::identity(d)], shape.clone(), shape).expect("identity is CPTP")
    }

    /// `rho -> sum_x <x|rho|x> |x><x|` on a single labelled factor.
    pub fn completely_dephasing(label: &str, d: usize) -> Self {
        let shape = SystemShape::single(label, d);
        let kraus = (0..d).map(|x| CMatrix::unit(d, x, x)).collect();
        Channel::new(kraus, shape.clone(), shape).expect("dephasing is CPTP")
    }

    /// `rho -> tr(rho) sigma`.
    pub fn replacement(in_shape: SystemShape, sigma: &DensityMatrix) -> Result<Self> {
        let eig = crate::tensor::herm_eig(sigma.mat())?;
        let (din, dout) = (in_shape.dim(), sigma.dim());
        let mut kraus = Vec::new();
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam <= crate::states::NULL_TOL {
                continue;
            }
            for a in 0..din {
                kraus.push(CMatrix::from_fn(dout, din, |b, c| {
                    if c == a {
                        eig.eigenvectors.get(b, k) * lam.sqrt()
                    } else {
                        C64::default()
                    }
                }));
            }
        }
        Channel::new(kraus, in_shape, sigma.shape().clone())
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn in_shape(&self) -> &SystemShape {
        &self.in_shape
    }

    pub fn out_shape(&self) -> &SystemShape {
        &self.out_shape
    }

    pub fn in_dim(&self) -> usize {
        self.in_shape.dim()
    }

    pub fn out_dim(&self) -> usize {
        self.out_shape.dim()
    }

    pub fn arity(&self) -> &Arity {
        &self.arity
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    /// Operator norm of `sum K^† K - 1`.
    pub fn cptp_margin(&self) -> f64 {
        let g = kraus_gram(&self.kraus, self.in_dim());
        (&g - &CMatrix::identity(self.in_dim())).operator_norm()
    }

    /// Renames or regroups the input factors; only the total dimension must agree.
    pub fn relabel_in(&self, shape: SystemShape) -> Result<Self> {
        if shape.dim() != self.in_shape.dim() {
            return Err(Error::DimensionMismatch(format!(
                "relabelling {} as {shape}",
                self.in_shape
            )));
        }
        let mut ch = self.clone();
        ch.in_shape = shape;
        ch.arity = Arity::Single;
        Ok(ch)
    }

    pub fn relabel_out(&self, shape: SystemShape) -> Result<Self> {
        if shape.dim() != self.out_shape.dim() {
            return Err(Error::DimensionMismatch(format!(
                "relabelling {} as {shape}",
                self.out_shape
            )));
        }
        let mut ch = self.clone();
        ch.out_shape = shape;
        Ok(ch)
    }

    /// Largest commutator norm among pairs of Kraus operators; zero for
    /// generalized dephasing channels. Infinite for non-square operators.
    pub fn kraus_commutator_norm(&self) -> f64 {
        if self.in_dim() != self.out_dim() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for (i, a) in self.kraus.iter().enumerate() {
            for b in &self.kraus[i + 1..] {
                worst = worst.max((&(a * b) - &(b * a)).max_abs());
            }
        }
        worst
    }
}

struct Placement {
    /// Labels in the order the Kraus operators act: `on`, then the rest.
    work_order: Vec<String>,
    rest_dim: usize,
    out_work_shape: SystemShape,
    final_order: Vec<String>,
}

fn placement(ch: &Channel, shape: &SystemShape, on: &[&str]) -> Result<Placement> {
    if on.len() != ch.in_shape.len() {
        return Err(Error::DimensionMismatch(format!(
            "channel input {} applied on {} labels",
            ch.in_shape,
            on.len()
        )));
    }
    for (l, (_, d)) in on.iter().zip(ch.in_shape.factors()) {
        let have = shape.dim_of(l)?;
        if have != *d {
            return Err(Error::DimensionMismatch(format!(
                "factor `{l}` has dimension {have}, channel expects {d}"
            )));
        }
    }
    let rest = shape.without(on)?;
    let out_work_shape = ch.out_shape.concat(&rest)?;
    let first = shape
        .labels()
        .into_iter()
        .position(|l| on.contains(&l))
        .unwrap_or(0);
    let mut final_order: Vec<String> = Vec::with_capacity(out_work_shape.len());
    for (i, l) in shape.labels().into_iter().enumerate() {
        if i == first {
            final_order.extend(ch.out_shape.labels().into_iter().map(String::from));
        }
        if !on.contains(&l) {
            final_order.push(l.to_string());
        }
    }
    let mut work_order: Vec<String> = on.iter().map(|s| s.to_string()).collect();
    work_order.extend(rest.labels().into_iter().map(String::from));
    Ok(Placement {
        work_order,
        rest_dim: rest.dim(),
        out_work_shape,
        final_order,
    })
}

fn as_strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// Applies `ch` to the factors `on` of an operator; `on[i]` feeds input factor `i`.
///
/// The output factors take the place of the first `on` label; all other
/// factors keep their relative order.
pub fn apply_operator(
    ch: &Channel,
    m: &CMatrix,
    shape: &SystemShape,
    on: &[&str],
) -> Result<(CMatrix, SystemShape)> {
    let p = placement(ch, shape, on)?;
    let (work, _) = permute_systems(m, shape, &as_strs(&p.work_order))?;
    let id = CMatrix::identity(p.rest_dim);
    let dout = p.out_work_shape.dim();
    let mut acc = CMatrix::zeros(dout, dout);
    for k in &ch.kraus {
        let l = if p.rest_dim == 1 {
            k.clone()
        } else {
            kron(k, &id)
        };
        acc = &acc + &(&(&l * &work) * &l.adjoint());
    }
    permute_systems(&acc, &p.out_work_shape, &as_strs(&p.final_order))
}

pub fn apply(ch: &Channel, rho: &DensityMatrix, on: &[&str]) -> Result<DensityMatrix> {
    let (m, s) = apply_operator(ch, rho.mat(), rho.shape(), on)?;
    Ok(DensityMatrix::from_trusted(m, s))
}

/// Applies `ch` to all of `rho`, matching input factors by position.
pub fn apply_all(ch: &Channel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.shape().dims() != ch.in_shape.dims() {
        return Err(Error::DimensionMismatch(format!(
            "state on {} for channel input {}",
            rho.shape(),
            ch.in_shape
        )));
    }
    let on = rho.shape().labels();
    apply(ch, rho, &on)
}

/// Unnormalized branches `(K_i (x) 1) psi`, one per Kraus operator, in the output layout.
pub fn apply_pure(
    ch: &Channel,
    psi: &PureState,
    on: &[&str],
) -> Result<(Vec<CMatrix>, SystemShape)> {
    let p = placement(ch, psi.shape(), on)?;
    let (work, _) = permute_vector(psi.vec(), psi.shape(), &as_strs(&p.work_order))?;
    let r = p.rest_dim;
    let din = ch.in_dim();
    let final_order = as_strs(&p.final_order);
    let mut out = Vec::with_capacity(ch.kraus.len());
    let mut shape = p.out_work_shape.clone();
    // (K (x) 1) v computed as K * reshape(v, din x r)
    let v = CMatrix::from_fn(din, r, |a, s| work.get(a * r + s, 0));
    for k in &ch.kraus {
        let w = k * &v;
        let flat = CMatrix::from_fn(w.rows() * r, 1, |i, _| w.get(i / r, i % r));
        let (permuted, s) = permute_vector(&flat, &p.out_work_shape, &final_order)?;
        shape = s;
        out.push(permuted);
    }
    Ok((out, shape))
}

/// Output state for a pure input, `sum_i W_i W_i^†`.
pub fn apply_pure_state(ch: &Channel, psi: &PureState, on: &[&str]) -> Result<DensityMatrix> {
    let (branches, shape) = apply_pure(ch, psi, on)?;
    let d = shape.dim();
    let mut m = CMatrix::zeros(d, d);
    for w in &branches {
        m = &m + &w.outer();
    }
    Ok(DensityMatrix::from_trusted(m, shape))
}

/// Stinespring isometry `V: A -> E (x) B`, environment factor slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    mat: CMatrix,
    in_shape: SystemShape,
    out_shape: SystemShape,
    env_shape: SystemShape,
}

impl Isometry {
    pub fn new(
        mat: CMatrix,
        in_shape: SystemShape,
        out_shape: SystemShape,
        env_shape: SystemShape,
    ) -> Result<Self> {
        let rows = env_shape.dim() * out_shape.dim();
        if mat.rows() != rows || mat.cols() != in_shape.dim() {
            return Err(Error::DimensionMismatch(format!(
                "isometry is {}x{}, expected {rows}x{}",
                mat.rows(),
                mat.cols(),
                in_shape.dim()
            )));
        }
        env_shape.concat(&out_shape)?;
        let dev = isometry_deviation(&mat);
        if dev > CPTP_TOL {
            return Err(Error::NotIsometry(dev));
        }
        Ok(Isometry {
            mat,
            in_shape,
            out_shape,
            env_shape,
        })
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn in_shape(&self) -> &SystemShape {
        &self.in_shape
    }

    pub fn out_shape(&self) -> &SystemShape {
        &self.out_shape
    }

    pub fn env_shape(&self) -> &SystemShape {
        &self.env_shape
    }

    pub fn env_dim(&self) -> usize {
        self.env_shape.dim()
    }

    /// Shape of `V rho V^†`.
    pub fn joint_shape(&self) -> SystemShape {
        self.env_shape
            .concat(&self.out_shape)
            .expect("checked disjoint")
    }

    /// `V rho V^†` on `E (x) B`.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.in_shape.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state on {} for isometry input {}",
                rho.shape(),
                self.in_shape
            )));
        }
        let m = &(&self.mat * rho.mat()) * &self.mat.adjoint();
        Ok(DensityMatrix::from_trusted(m, self.joint_shape()))
    }

    /// `(W (x) 1_B) V` for an isometry `W` on the environment.
    pub fn with_environment_isometry(&self, w: &CMatrix, env_label: &str) -> Result<Isometry> {
        if w.cols() != self.env_dim() {
            return Err(Error::DimensionMismatch(format!(
                "environment isometry has {} columns, environment dimension is {}",
                w.cols(),
                self.env_dim()
            )));
        }
        let dev = isometry_deviation(w);
        if dev > CPTP_TOL {
            return Err(Error::NotIsometry(dev));
        }
        let lifted = kron(w, &CMatrix::identity(self.out_shape.dim()));
        Isometry::new(
            &lifted * &self.mat,
            self.in_shape.clone(),
            self.out_shape.clone(),
            SystemShape::single(env_label, w.rows()),
        )
    }
}

fn isometry_deviation(v: &CMatrix) -> f64 {
    (&(&v.adjoint() * v) - &CMatrix::identity(v.cols())).operator_norm()
}

/// Stacks the Kraus operators: `V = sum_i |i>_E (x) K_i`.
pub fn kraus_to_isometry(ch: &Channel) -> Result<Isometry> {
    if ch.kind != ChannelKind::TracePreserving {
        return Err(Error::NotTracePreserving(ch.cptp_margin()));
    }
    let env = ch.out_shape.fresh_label("E");
    Isometry::new(
        CMatrix::vstack(&ch.kraus)?,
        ch.in_shape.clone(),
        ch.out_shape.clone(),
        SystemShape::single(&env, ch.kraus.len()),
    )
}

/// Splits `V` into its `|B| x |A|` row blocks.
pub fn isometry_to_kraus(v: &Isometry) -> Result<Channel> {
    let dout = v.out_shape.dim();
    let kraus = (0..v.env_dim())
        .map(|e| v.mat.row_block(e * dout, dout))
        .collect();
    Channel::new(kraus, v.in_shape.clone(), v.out_shape.clone())
}

/// Complementary map `A -> E` from the Kraus-index environment: `F_b[e, a] = K_e[b, a]`.
///
/// Works for trace-reducing maps too; the result has the same trace behaviour.
pub fn complement(ch: &Channel) -> Channel {
    complement_padded(ch, ch.kraus.len(), &ch.out_shape.fresh_label("E"))
}

fn complement_padded(ch: &Channel, env_dim: usize, env_label: &str) -> Channel {
    let m = ch.kraus.len();
    debug_assert!(env_dim >= m);
    let din = ch.in_dim();
    let kraus = (0..ch.out_dim())
        .map(|b| {
            CMatrix::from_fn(env_dim, din, |e, a| {
                if e < m {
                    ch.kraus[e].get(b, a)
                } else {
                    C64::default()
                }
            })
        })
        .collect();
    Channel {
        kraus,
        in_shape: ch.in_shape.clone(),
        out_shape: SystemShape::single(env_label, env_dim),
        arity: ch.arity.clone(),
        kind: ch.kind,
    }
}

/// Kraus products `A_j B_i`: first `inner`, then `outer`.
pub fn compose(outer: &Channel, inner: &Channel) -> Result<Channel> {
    if outer.in_shape.dims() != inner.out_shape.dims() {
        return Err(Error::DimensionMismatch(format!(
            "cannot feed {} into {}",
            inner.out_shape, outer.in_shape
        )));
    }
    let mut kraus = Vec::with_capacity(outer.kraus.len() * inner.kraus.len());
    for a in &outer.kraus {
        for b in &inner.kraus {
            kraus.push(a * b);
        }
    }
    let kind = if outer.kind == ChannelKind::TracePreserving
        && inner.kind == ChannelKind::TracePreserving
    {
        ChannelKind::TracePreserving
    } else {
        ChannelKind::TraceReducing
    };
    Ok(Channel {
        kraus,
        in_shape: inner.in_shape.clone(),
        out_shape: outer.out_shape.clone(),
        arity: inner.arity.clone(),
        kind,
    })
}

/// Parallel composition `a (x) b` on concatenated shapes.
pub fn tensor(a: &Channel, b: &Channel) -> Result<Channel> {
    let in_shape = a.in_shape.concat(&b.in_shape)?;
    let out_shape = a.out_shape.concat(&b.out_shape)?;
    let mut kraus = Vec::with_capacity(a.kraus.len() * b.kraus.len());
    for x in &a.kraus {
        for y in &b.kraus {
            kraus.push(kron(x, y));
        }
    }
    let kind = if a.kind == ChannelKind::TracePreserving && b.kind == ChannelKind::TracePreserving {
        ChannelKind::TracePreserving
    } else {
        ChannelKind::TraceReducing
    };
    let arity = match (&a.arity, &b.arity) {
        (Arity::Mac2 { alice: a1, bob: b1 }, Arity::Mac2 { alice: a2, bob: b2 }) => Arity::Mac2 {
            alice: a1.iter().chain(a2).cloned().collect(),
            bob: b1.iter().chain(b2).cloned().collect(),
        },
        _ => Arity::Single,
    };
    Ok(Channel {
        kraus,
        in_shape,
        out_shape,
        arity,
        kind,
    })
}

/// `ch^{(x) k}` with copy `j` (1-based) labelled by appending `j` to every label.
pub fn tensor_power(ch: &Channel, k: usize) -> Result<Channel> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "tensor power k must be at least 1".into(),
        ));
    }
    let copy = |j: usize| -> Channel {
        let suffix = j.to_string();
        let arity = match &ch.arity {
            Arity::Single => Arity::Single,
            Arity::Mac2 { alice, bob } => Arity::Mac2 {
                alice: alice.iter().map(|l| format!("{l}{suffix}")).collect(),
                bob: bob.iter().map(|l| format!("{l}{suffix}")).collect(),
            },
        };
        Channel {
            kraus: ch.kraus.clone(),
            in_shape: ch.in_shape.with_suffix(&suffix),
            out_shape: ch.out_shape.with_suffix(&suffix),
            arity,
            kind: ch.kind,
        }
    };
    let mut acc = copy(1);
    for j in 2..=k {
        acc = tensor(&acc, &copy(j))?;
    }
    Ok(acc)
}

/// Action table `J = sum_{a,a'} |a><a'| (x) N(|a><a'|)`, input factor first.
pub fn choi(ch: &Channel) -> CMatrix {
    let (din, dout) = (ch.in_dim(), ch.out_dim());
    let n = din * dout;
    let mut j = CMatrix::zeros(n, n);
    for k in &ch.kraus {
        let v = CMatrix::from_fn(n, 1, |i, _| k.get(i % dout, i / dout));
        j = &j + &v.outer();
    }
    j
}

/// Trace norm of the difference of action tables.
pub fn action_distance(a: &Channel, b: &Channel) -> Result<f64> {
    if a.in_dim() != b.in_dim() || a.out_dim() != b.out_dim() {
        return Err(Error::DimensionMismatch(format!(
            "comparing {} -> {} with {} -> {}",
            a.in_shape, a.out_shape, b.in_shape, b.out_shape
        )));
    }
    Ok(trace_norm(&(&choi(a) - &choi(b))))
}

/// `||J(N^c) - J(D o N)||_1`; zero certifies `D` as a degrading map for `N`.
pub fn verify_degrading(n: &Channel, d: &Channel) -> Result<f64> {
    if d.in_dim() != n.out_dim() {
        return Err(Error::DimensionMismatch(format!(
            "degrading map input {} does not match channel output {}",
            d.in_shape, n.out_shape
        )));
    }
    let nc = complement(n);
    if d.out_dim() != nc.out_dim() {
        return Err(Error::DimensionMismatch(format!(
            "degrading map output {} does not match environment {}",
            d.out_shape, nc.out_shape
        )));
    }
    action_distance(&nc, &compose(d, n)?)
}

/// Block-controlled channel `|x><x| (x) sigma -> N_x(sigma)` on `X (x) B`.
pub fn controlled(x_label: &str, channels: &[Channel]) -> Result<Channel> {
    let first = channels
        .first()
        .ok_or_else(|| Error::InvalidParameter("no channels to control".into()))?;
    if let Some(c) = channels
        .iter()
        .find(|c| c.in_dim() != first.in_dim() || c.out_dim() != first.out_dim())
    {
        return Err(Error::DimensionMismatch(format!(
            "controlled family mixes {} -> {} with {} -> {}",
            first.in_shape, first.out_shape, c.in_shape, c.out_shape
        )));
    }
    let n = channels.len();
    let (din, dout) = (first.in_dim(), first.out_dim());
    let in_shape = SystemShape::single(x_label, n).concat(&first.in_shape)?;
    let mut kraus = Vec::new();
    for (x, c) in channels.iter().enumerate() {
        for k in &c.kraus {
            kraus.push(CMatrix::from_fn(dout, n * din, |b, col| {
                if col / din == x {
                    k.get(b, col % din)
                } else {
                    C64::default()
                }
            }));
        }
    }
    Channel::new(kraus, in_shape, first.out_shape.clone())
}

/// Splits a channel on `X (x) B` into the per-`x` channels `N_x` on `B`.
pub fn cq_channel_decompose(ch: &Channel, x_label: &str) -> Result<Vec<Channel>> {
    let n = ch.in_shape.dim_of(x_label)?;
    let mut order = vec![x_label];
    order.extend(ch.in_shape.labels().into_iter().filter(|l| *l != x_label));
    let map = crate::tensor::index_map(&ch.in_shape, &order)?;
    let b_shape = ch.in_shape.without(&[x_label])?;
    let db = b_shape.dim();
    (0..n)
        .map(|x| {
            let kraus: Vec<CMatrix> = ch
                .kraus
                .iter()
                .map(|k| CMatrix::from_fn(ch.out_dim(), db, |r, c| k.get(r, map[x * db + c])))
                .filter(|k| k.max_abs() > 0.0)
                .collect();
            let kraus = if kraus.is_empty() {
                vec![CMatrix::zeros(ch.out_dim(), db)]
            } else {
                kraus
            };
            match ch.kind {
                ChannelKind::TracePreserving => {
                    Channel::new(kraus, b_shape.clone(), ch.out_shape.clone())
                }
                ChannelKind::TraceReducing => {
                    Channel::trace_reducing(kraus, b_shape.clone(), ch.out_shape.clone())
                }
            }
        })
        .collect()
}

/// A labelled family of trace-reducing maps whose sum is trace preserving.
#[derive(Clone, Debug, PartialEq)]
pub struct Instrument {
    labels: Vec<String>,
    components: Vec<Channel>,
}

impl Instrument {
    pub fn new(labels: Vec<String>, components: Vec<Channel>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidParameter("instrument without components".into()))?;
        if labels.len() != components.len() {
            return Err(Error::InvalidParameter(format!(
                "{} labels for {} components",
                labels.len(),
                components.len()
            )));
        }
        for c in &components {
            if c.in_shape.dims() != first.in_shape.dims()
                || c.out_shape.dims() != first.out_shape.dims()
            {
                return Err(Error::DimensionMismatch(
                    "instrument components act on different shapes".into(),
                ));
            }
        }
        let all: Vec<CMatrix> = components.iter().flat_map(|c| c.kraus.clone()).collect();
        let dev = (&kraus_gram(&all, first.in_dim()) - &CMatrix::identity(first.in_dim()))
            .operator_norm();
        if dev > CPTP_TOL {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(Instrument { labels, components })
    }

    /// Components `p(s) N_s` from channels `N_s` and a distribution `p`.
    pub fn from_channels(probs: &[f64], channels: &[Channel]) -> Result<Self> {
        if probs.len() != channels.len() {
            return Err(Error::InvalidParameter(format!(
                "{} probabilities for {} channels",
                probs.len(),
                channels.len()
            )));
        }
        crate::states::check_distribution(probs)?;
        let components = probs
            .iter()
            .zip(channels)
            .map(|(&p, c)| {
                let kraus = c.kraus.iter().map(|k| k.scale(p.sqrt())).collect();
                Channel::unchecked(
                    kraus,
                    c.in_shape.clone(),
                    c.out_shape.clone(),
                    ChannelKind::TraceReducing,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let labels = (0..probs.len()).map(|s| s.to_string()).collect();
        Instrument::new(labels, components)
    }

    /// Lüders instrument `rho -> sqrt(L_y) rho sqrt(L_y)` for a POVM.
    pub fn measuring(povm: &[CMatrix], shape: SystemShape) -> Result<Self> {
        check_povm(povm, shape.dim())?;
        let components = povm
            .iter()
            .map(|e| {
                Channel::unchecked(
                    vec![mat_fn(e, MatFn::Sqrt)?],
                    shape.clone(),
                    shape.clone(),
                    ChannelKind::TraceReducing,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let labels = (0..povm.len()).map(|s| s.to_string()).collect();
        Instrument::new(labels, components)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn components(&self) -> &[Channel] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn in_shape(&self) -> &SystemShape {
        &self.components[0].in_shape
    }

    /// The instrument as a channel `A -> X (x) B` with Kraus operators `|s> (x) K`.
    pub fn as_channel(&self, x_label: &str) -> Result<Channel> {
        let n = self.components.len();
        let out = SystemShape::single(x_label, n).concat(&self.components[0].out_shape)?;
        let mut kraus = Vec::new();
        for (s, c) in self.components.iter().enumerate() {
            let ket = CMatrix::from_fn(n, 1, |i, _| {
                if i == s {
                    crate::tensor::c64(1.0, 0.0)
                } else {
                    C64::default()
                }
            });
            for k in &c.kraus {
                kraus.push(kron(&ket, k));
            }
        }
        Channel::new(kraus, self.in_shape().clone(), out)
    }

    /// Sum of the components.
    pub fn total(&self) -> Result<Channel> {
        let c = &self.components[0];
        let kraus = self
            .components
            .iter()
            .flat_map(|c| c.kraus.clone())
            .collect();
        Channel::new(kraus, c.in_shape.clone(), c.out_shape.clone())
    }
}

/// Complement whose components are the complements of the input components,
/// all embedded in one environment of size `max_s (Kraus count of N_s)`.
pub fn instrument_complement(ins: &Instrument) -> Result<Instrument> {
    let m = ins
        .components
        .iter()
        .map(|c| c.kraus.len())
        .max()
        .unwrap_or(1);
    let env = ins.components[0].out_shape.fresh_label("E");
    let components = ins
        .components
        .iter()
        .map(|c| complement_padded(c, m, &env))
        .collect();
    Instrument::new(ins.labels.clone(), components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{max_mixed, PureState};
    use crate::tensor::c64;

    fn qubit() -> SystemShape {
        SystemShape::single("A", 2)
    }

    fn plus() -> PureState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PureState::from_amplitudes(vec![c64(s, 0.0), c64(s, 0.0)], qubit()).unwrap()
    }

    fn amplitude_damping(g: f64) -> Channel {
        let k0 = CMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c64(1.0, 0.0),
            (1, 1) => c64((1.0 - g).sqrt(), 0.0),
            _ => C64::default(),
        });
        let k1 = CMatrix::from_fn(2, 2, |i, j| {
            if (i, j) == (0, 1) {
                c64(g.sqrt(), 0.0)
            } else {
                C64::default()
            }
        });
        Channel::new(vec![k0, k1], qubit(), qubit()).unwrap()
    }

    #[test]
    fn rejects_non_tp() {
        let k = CMatrix::identity(2).scale(0.9);
        assert!(matches!(
            Channel::new(vec![k.clone()], qubit(), qubit()),
            Err(Error::NotTracePreserving(_))
        ));
        assert!(Channel::trace_reducing(vec![k], qubit(), qubit()).is_ok());
        let big = CMatrix::identity(2).scale(1.1);
        assert!(Channel::trace_reducing(vec![big], qubit(), qubit()).is_err());
    }

    #[test]
    fn apply_examples() {
        let rho = plus().to_density();
        let out = apply(&Channel::identity(qubit()), &rho, &["A"]).unwrap();
        assert_eq!(out.mat(), rho.mat());

        let out = apply(&Channel::completely_dephasing("A", 2), &rho, &["A"]).unwrap();
        assert!((out.mat() - max_mixed(2).mat()).max_abs() < 1e-15);
    }

    #[test]
    fn apply_on_subsystem_places_output() {
        let shape = SystemShape::new([("R", 2), ("A", 2), ("S", 3)]).unwrap();
        let d = shape.dim();
        let rho = DensityMatrix::from_trusted(CMatrix::identity(d).scale(1.0 / d as f64), shape);
        let widen =
            Channel::replacement(qubit(), &max_mixed(5).relabel("A", "W").unwrap()).unwrap();
        let out = apply(&widen, &rho, &["A"]).unwrap();
        assert_eq!(out.shape().labels(), vec!["R", "W", "S"]);
        assert_eq!(out.shape().dims(), vec![2, 5, 3]);
    }

    #[test]
    fn apply_pure_matches_mixed_path() {
        let shape = SystemShape::new([("R", 2), ("A", 2)]).unwrap();
        let psi = PureState::normalized(
            CMatrix::column(vec![
                c64(0.3, 0.1),
                c64(0.2, -0.4),
                c64(-0.5, 0.0),
                c64(0.1, 0.6),
            ])
            .unwrap(),
            shape,
        )
        .unwrap();
        let ch = amplitude_damping(0.3);
        let a = apply(&ch, &psi.to_density(), &["A"]).unwrap();
        let b = apply_pure_state(&ch, &psi, &["A"]).unwrap();
        assert_eq!(a.shape(), b.shape());
        assert!((a.mat() - b.mat()).max_abs() < 1e-14);
    }

    #[test]
    fn isometry_round_trip() {
        let id = Channel::identity(qubit());
        let v = kraus_to_isometry(&id).unwrap();
        assert_eq!(v.env_dim(), 1);
        assert_eq!(v.mat(), &CMatrix::identity(2));

        let ch = amplitude_damping(0.4);
        let v = kraus_to_isometry(&ch).unwrap();
        let back = isometry_to_kraus(&v).unwrap();
        assert!(action_distance(&ch, &back).unwrap() < 1e-14);

        let rho = plus().to_density();
        let joint = v.apply(&rho).unwrap();
        let env = v.env_shape().labels()[0].to_string();
        let b = joint.partial_trace(&[env.as_str()]).unwrap();
        assert!((b.mat() - apply_all(&ch, &rho).unwrap().mat()).max_abs() < 1e-14);
        let e = joint.partial_trace(&["A"]).unwrap();
        assert!((e.mat() - apply_all(&complement(&ch), &rho).unwrap().mat()).max_abs() < 1e-14);
    }

    #[test]
    fn complement_of_identity_is_trivial() {
        let c = complement(&Channel::identity(qubit()));
        assert_eq!(c.out_dim(), 1);
        let out = apply_all(&c, &plus().to_density()).unwrap();
        assert!((out.mat().get(0, 0).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn compose_and_tensor() {
        let dz = Channel::completely_dephasing("A", 2);
        let rho = plus().to_density();
        let twice = compose(&dz, &dz).unwrap();
        assert!(action_distance(&twice, &dz).unwrap() < 1e-14);
        let ad = amplitude_damping(0.2);
        let c = compose(&Channel::identity(qubit()), &ad).unwrap();
        assert!(action_distance(&c, &ad).unwrap() < 1e-14);

        let t = tensor(
            &ad,
            &dz.relabel_in(SystemShape::single("B", 2))
                .unwrap()
                .relabel_out(SystemShape::single("B", 2))
                .unwrap(),
        )
        .unwrap();
        let pair = rho.tensor(&rho.relabel("A", "B").unwrap()).unwrap();
        let out = apply_all(&t, &pair).unwrap();
        let expect = apply_all(&ad, &rho)
            .unwrap()
            .tensor(&apply_all(&dz, &rho).unwrap().relabel("A", "B").unwrap())
            .unwrap();
        assert!((out.mat() - expect.mat()).max_abs() < 1e-14);
    }

    #[test]
    fn tensor_power_labels() {
        let ch = Channel::identity(SystemShape::new([("A'", 2), ("B'", 2)]).unwrap())
            .into_mac2(&["A'"], &["B'"])
            .unwrap();
        let p = tensor_power(&ch, 2).unwrap();
        assert_eq!(p.in_shape().labels(), vec!["A'1", "B'1", "A'2", "B'2"]);
        assert_eq!(
            p.arity(),
            &Arity::Mac2 {
                alice: vec!["A'1".into(), "A'2".into()],
                bob: vec!["B'1".into(), "B'2".into()]
            }
        );
    }

    #[test]
    fn degrading_identity() {
        let id = Channel::identity(qubit());
        let d = complement(&id).relabel_in(qubit()).unwrap();
        assert!(verify_degrading(&id, &d).unwrap() < 1e-10);
    }

    #[test]
    fn controlled_round_trip() {
        let n0 = amplitude_damping(0.3);
        let n1 = Channel::completely_dephasing("A", 2);
        let c = controlled("X", &[n0.clone(), n1.clone()]).unwrap();
        let parts = cq_channel_decompose(&c, "X").unwrap();
        assert!(action_distance(&parts[0], &n0).unwrap() < 1e-14);
        assert!(action_distance(&parts[1], &n1).unwrap() < 1e-14);
    }

    #[test]
    fn measuring_instrument_complement_is_block_diagonal() {
        let ins = Instrument::measuring(&crate::states::basis_povm(2), qubit()).unwrap();
        let comp = instrument_complement(&ins).unwrap();
        let ch = comp.as_channel("X").unwrap();
        let out = apply_all(&ch, &plus().to_density()).unwrap();
        let m = comp.components()[0].out_dim();
        for i in 0..out.dim() {
            for j in 0..out.dim() {
                if i / m != j / m {
                    assert!(out.mat().get(i, j).norm() < 1e-15);
                }
            }
        }
        assert!((out.mat().trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_component_instrument_complement() {
        let ch = amplitude_damping(0.3);
        let ins = Instrument::from_channels(&[1.0], std::slice::from_ref(&ch)).unwrap();
        let comp = instrument_complement(&ins).unwrap();
        assert!(action_distance(&comp.components()[0], &complement(&ch)).unwrap() < 1e-14);
    }
}
