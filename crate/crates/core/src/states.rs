//! Validated quantum states, ensembles and cq states.

use crate::error::{Error, Result};
use crate::tensor::{
    c64, herm_eig, kron, mat_fn, partial_trace, permute_systems, permute_vector, psd_eigenvalues,
    CMatrix, MatFn, SystemShape, C64, HERMITIAN_TOL,
};

pub const TRACE_TOL: f64 = 1e-8;
pub const NORM_TOL: f64 = 1e-10;
pub const PROB_TOL: f64 = 1e-9;
/// Eigenvalues and probabilities at or below this are treated as zero.
pub const NULL_TOL: f64 = 1e-12;

/// A Hermitian, positive semidefinite, unit-trace matrix tagged with its shape.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
    shape: SystemShape,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix, shape: SystemShape) -> Result<Self> {
        check_dims(&mat, &shape)?;
        if !mat.is_finite() {
            return Err(Error::NonFinite);
        }
        let dev = mat.hermiticity_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {:.12} != 1", tr.re)));
        }
        psd_eigenvalues(&mat)?;
        Ok(DensityMatrix { mat, shape })
    }

    /// For matrices produced by CPTP maps from valid states; skips the spectral check.
    pub(crate) fn from_trusted(mat: CMatrix, shape: SystemShape) -> Self {
        debug_assert_eq!(mat.rows(), shape.dim());
        DensityMatrix { mat, shape }
    }

    /// Normalizes a nonzero PSD matrix to unit trace.
    pub fn from_unnormalized(mat: CMatrix, shape: SystemShape) -> Result<Self> {
        let tr = mat.trace().re;
        if tr <= NULL_TOL {
            return Err(Error::InvalidState(format!(
                "trace {tr:.3e} too small to normalize"
            )));
        }
        DensityMatrix::new(mat.scale(1.0 / tr), shape)
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn into_parts(self) -> (CMatrix, SystemShape) {
        (self.mat, self.shape)
    }

    pub fn partial_trace(&self, traced: &[&str]) -> Result<DensityMatrix> {
        let (m, s) = partial_trace(&self.mat, &self.shape, traced)?;
        Ok(DensityMatrix::from_trusted(m, s))
    }

    /// Marginal on `keep`, in this state's factor order.
    pub fn reduced(&self, keep: &[&str]) -> Result<DensityMatrix> {
        self.shape.select(keep)?;
        let traced: Vec<&str> = self
            .shape
            .labels()
            .into_iter()
            .filter(|l| !keep.contains(l))
            .collect();
        self.partial_trace(&traced)
    }

    pub fn permute(&self, order: &[&str]) -> Result<DensityMatrix> {
        let (m, s) = permute_systems(&self.mat, &self.shape, order)?;
        Ok(DensityMatrix::from_trusted(m, s))
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let shape = self.shape.concat(&other.shape)?;
        Ok(DensityMatrix::from_trusted(
            kron(&self.mat, &other.mat),
            shape,
        ))
    }

    pub fn relabel(&self, from: &str, to: &str) -> Result<DensityMatrix> {
        Ok(DensityMatrix::from_trusted(
            self.mat.clone(),
            self.shape.relabel(from, to)?,
        ))
    }

    pub fn with_shape(&self, shape: SystemShape) -> Result<DensityMatrix> {
        check_dims(&self.mat, &shape)?;
        Ok(DensityMatrix::from_trusted(self.mat.clone(), shape))
    }

    /// Eigenvalues, descending, clipped to be nonnegative.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        psd_eigenvalues(&self.mat)
    }

    /// `(1 - t) self + t other`.
    pub fn mix(&self, other: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "mixing {} with {}",
                self.shape, other.shape
            )));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidProbability(t));
        }
        let m = &self.mat.scale(1.0 - t) + &other.mat.scale(t);
        Ok(DensityMatrix::from_trusted(m, self.shape.clone()))
    }
}

fn check_dims(mat: &CMatrix, shape: &SystemShape) -> Result<()> {
    if !mat.is_square() {
        return Err(Error::NotSquare {
            rows: mat.rows(),
            cols: mat.cols(),
        });
    }
    if mat.rows() != shape.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix for shape {shape}",
            mat.rows(),
            mat.cols()
        )));
    }
    Ok(())
}

/// A unit vector with its global phase fixed: the first nonzero entry is real and positive.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    vec: CMatrix,
    shape: SystemShape,
}

impl PureState {
    pub fn new(vec: CMatrix, shape: SystemShape) -> Result<Self> {
        if vec.cols() != 1 || vec.rows() != shape.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vector for shape {shape}",
                vec.rows(),
                vec.cols()
            )));
        }
        if !vec.is_finite() {
            return Err(Error::NonFinite);
        }
        let norm = vec.frobenius_norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {norm:.12} != 1")));
        }
        Ok(PureState {
            vec: canonical_phase(vec),
            shape,
        })
    }

    /// Scales a nonzero vector to unit norm.
    pub fn normalized(vec: CMatrix, shape: SystemShape) -> Result<Self> {
        let norm = vec.frobenius_norm();
        if !norm.is_finite() || norm <= NULL_TOL {
            return Err(Error::InvalidState(format!(
                "cannot normalize vector of norm {norm:.3e}"
            )));
        }
        PureState::new(vec.scale(1.0 / norm), shape)
    }

    pub fn from_amplitudes(amps: Vec<C64>, shape: SystemShape) -> Result<Self> {
        PureState::new(CMatrix::column(amps)?, shape)
    }

    /// Computational basis vector `|index>`.
    pub fn basis(shape: SystemShape, index: usize) -> Result<Self> {
        let d = shape.dim();
        if index >= d {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} >= {d}"
            )));
        }
        let mut amps = vec![C64::default(); d];
        amps[index] = c64(1.0, 0.0);
        PureState::from_amplitudes(amps, shape)
    }

    pub fn vec(&self) -> &CMatrix {
        &self.vec
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn amplitude(&self, i: usize) -> C64 {
        self.vec.get(i, 0)
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_trusted(self.vec.outer(), self.shape.clone())
    }

    pub fn overlap(&self, other: &PureState) -> C64 {
        self.vec.inner_product(&other.vec)
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let shape = self.shape.concat(&other.shape)?;
        Ok(PureState {
            vec: canonical_phase(kron(&self.vec, &other.vec)),
            shape,
        })
    }

    pub fn permute(&self, order: &[&str]) -> Result<PureState> {
        let (v, s) = permute_vector(&self.vec, &self.shape, order)?;
        Ok(PureState { vec: v, shape: s })
    }

    pub fn relabel(&self, from: &str, to: &str) -> Result<PureState> {
        Ok(PureState {
            vec: self.vec.clone(),
            shape: self.shape.relabel(from, to)?,
        })
    }

    pub fn with_shape(&self, shape: SystemShape) -> Result<PureState> {
        PureState::new(self.vec.clone(), shape)
    }

    pub fn reduced(&self, keep: &[&str]) -> Result<DensityMatrix> {
        self.to_density().reduced(keep)
    }
}

fn canonical_phase(vec: CMatrix) -> CMatrix {
    let lead = (0..vec.rows())
        .map(|i| vec.get(i, 0))
        .find(|z| z.norm() > NULL_TOL);
    match lead {
        Some(z) if z.im != 0.0 || z.re < 0.0 => vec.scale_complex(z.conj() / z.norm()),
        _ => vec,
    }
}

/// Probability-weighted family of states on a common shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    probs: Vec<f64>,
    states: Vec<DensityMatrix>,
}

impl Ensemble {
    pub fn new(probs: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self> {
        if probs.is_empty() || probs.len() != states.len() {
            return Err(Error::InvalidEnsemble(format!(
                "{} probabilities for {} states",
                probs.len(),
                states.len()
            )));
        }
        check_distribution(&probs)?;
        let shape = states[0].shape();
        if let Some(s) = states.iter().find(|s| s.shape() != shape) {
            return Err(Error::InvalidEnsemble(format!(
                "states on {} and {}",
                shape,
                s.shape()
            )));
        }
        Ok(Ensemble { probs, states })
    }

    pub fn from_pure(probs: Vec<f64>, states: &[PureState]) -> Result<Self> {
        Ensemble::new(probs, states.iter().map(PureState::to_density).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn shape(&self) -> &SystemShape {
        self.states[0].shape()
    }

    /// `sum_x p(x) rho_x`.
    pub fn average(&self) -> DensityMatrix {
        let d = self.shape().dim();
        let mut m = CMatrix::zeros(d, d);
        for (p, s) in self.probs.iter().zip(&self.states) {
            m = &m + &s.mat().scale(*p);
        }
        DensityMatrix::from_trusted(m, self.shape().clone())
    }
}

pub(crate) fn check_distribution(probs: &[f64]) -> Result<()> {
    for &p in probs {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidProbability(p));
        }
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidEnsemble(format!(
            "probabilities sum to {total:.12}"
        )));
    }
    Ok(())
}

/// An ensemble viewed as the block-diagonal state `sum_x p(x) |x><x| (x) rho_x`.
#[derive(Clone, Debug, PartialEq)]
pub struct CQState {
    pub ensemble: Ensemble,
    pub classical_label: String,
    pub quantum_shape: SystemShape,
}

impl CQState {
    pub fn new(ensemble: Ensemble, classical_label: &str) -> Result<Self> {
        let quantum_shape = ensemble.shape().clone();
        if quantum_shape.contains(classical_label) {
            return Err(Error::DuplicateLabel(classical_label.to_string()));
        }
        Ok(CQState {
            ensemble,
            classical_label: classical_label.to_string(),
            quantum_shape,
        })
    }

    pub fn assemble(&self) -> DensityMatrix {
        let n = self.ensemble.len();
        let d = self.quantum_shape.dim();
        let mut m = CMatrix::zeros(n * d, n * d);
        for (x, (p, s)) in self
            .ensemble
            .probs
            .iter()
            .zip(&self.ensemble.states)
            .enumerate()
        {
            for i in 0..d {
                for j in 0..d {
                    m.set(x * d + i, x * d + j, s.mat().get(i, j) * *p);
                }
            }
        }
        let shape = SystemShape::single(&self.classical_label, n)
            .concat(&self.quantum_shape)
            .expect("label checked disjoint");
        DensityMatrix::from_trusted(m, shape)
    }

    /// Reads the diagonal blocks of a state whose leading factor is `x_label`.
    ///
    /// Blocks with weight at or below the null threshold get the maximally
    /// mixed state as a placeholder. Off-diagonal blocks are ignored.
    pub fn decompose(state: &DensityMatrix, x_label: &str) -> Result<Self> {
        let labels = state.shape().labels();
        if labels.first() != Some(&x_label) {
            let mut order = vec![x_label];
            order.extend(labels.iter().copied().filter(|l| *l != x_label));
            if !state.shape().contains(x_label) {
                return Err(Error::UnknownLabel(x_label.to_string()));
            }
            return CQState::decompose(&state.permute(&order)?, x_label);
        }
        let n = state.shape().dim_of(x_label)?;
        let quantum_shape = state.shape().without(&[x_label])?;
        let d = quantum_shape.dim();
        let mut probs = Vec::with_capacity(n);
        let mut states = Vec::with_capacity(n);
        for x in 0..n {
            let block = CMatrix::from_fn(d, d, |i, j| state.mat().get(x * d + i, x * d + j));
            let p = block.trace().re;
            probs.push(p.max(0.0));
            states.push(if p > NULL_TOL {
                DensityMatrix::from_trusted(block.scale(1.0 / p), quantum_shape.clone())
            } else {
                max_mixed_on(quantum_shape.clone())
            });
        }
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        CQState::new(Ensemble::new(probs, states)?, x_label)
    }
}

/// Assembles an ensemble as a cq state on `X (x) A`.
pub fn cq_assemble(e: &Ensemble) -> Result<DensityMatrix> {
    let label = e.shape().fresh_label("X");
    Ok(CQState::new(e.clone(), &label)?.assemble())
}

/// Eigenbasis purification on `R (x) B` with `|R|` equal to the numerical rank.
pub fn purify(rho: &DensityMatrix) -> Result<PureState> {
    let eig = herm_eig(rho.mat())?;
    let support: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&k| eig.eigenvalues[k] > NULL_TOL)
        .collect();
    if let Some(&min) = eig.eigenvalues.last() {
        if min < crate::tensor::PSD_FLOOR {
            return Err(Error::NotPositive(min));
        }
    }
    let r = support.len().max(1);
    let d = rho.dim();
    let mut amps = vec![C64::default(); r * d];
    for (slot, &k) in support.iter().enumerate() {
        let w = eig.eigenvalues[k].sqrt();
        for i in 0..d {
            amps[slot * d + i] = eig.eigenvectors.get(i, k) * w;
        }
    }
    let reference = rho.shape().fresh_label("R");
    let shape = SystemShape::single(&reference, r).concat(rho.shape())?;
    PureState::normalized(CMatrix::column(amps)?, shape)
}

#[derive(Clone, Debug)]
pub struct Schmidt {
    /// Descending, strictly positive.
    pub coeffs: Vec<f64>,
    /// Columns are the left Schmidt vectors.
    pub left: CMatrix,
    pub right: CMatrix,
    pub left_shape: SystemShape,
    pub right_shape: SystemShape,
}

impl Schmidt {
    pub fn reassemble(&self) -> CMatrix {
        let n = self.left_shape.dim() * self.right_shape.dim();
        let mut v = CMatrix::zeros(n, 1);
        for (k, &c) in self.coeffs.iter().enumerate() {
            let l = CMatrix::from_fn(self.left.rows(), 1, |i, _| self.left.get(i, k));
            let r = CMatrix::from_fn(self.right.rows(), 1, |i, _| self.right.get(i, k));
            v = &v + &kron(&l, &r).scale(c);
        }
        v
    }
}

/// Schmidt decomposition across `cut | rest`, with `cut` as the left side.
pub fn schmidt(psi: &PureState, cut: &[&str]) -> Result<Schmidt> {
    let left_shape = psi.shape().select(cut)?;
    let right_shape = psi.shape().without(cut)?;
    if left_shape.is_empty() || right_shape.is_empty() {
        return Err(Error::InvalidSelection("cut is not a bipartition".into()));
    }
    let mut order = left_shape.labels();
    order.extend(right_shape.labels());
    let v = psi.permute(&order)?;
    let (dl, dr) = (left_shape.dim(), right_shape.dim());
    let m = CMatrix::from_fn(dl, dr, |a, b| v.amplitude(a * dr + b));
    let svd = m
        .inner()
        .clone()
        .try_svd(true, true, f64::EPSILON, 10_000)
        .ok_or(Error::EigenFailed)?;
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let mut idx: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > NULL_TOL)
        .collect();
    idx.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("finite")
    });
    let coeffs = idx.iter().map(|&k| svd.singular_values[k]).collect();
    let left = CMatrix::from_fn(dl, idx.len(), |i, k| u[(i, idx[k])]);
    let right = CMatrix::from_fn(dr, idx.len(), |j, k| vt[(idx[k], j)]);
    Ok(Schmidt {
        coeffs,
        left,
        right,
        left_shape,
        right_shape,
    })
}

/// One POVM outcome. `state` is `None` when the probability is negligible.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub prob: f64,
    pub state: Option<DensityMatrix>,
}

pub const POVM_TOL: f64 = 1e-8;

pub(crate) fn check_povm(povm: &[CMatrix], d: usize) -> Result<()> {
    if povm.is_empty() {
        return Err(Error::PovmIncomplete(1.0));
    }
    let mut sum = CMatrix::zeros(d, d);
    for e in povm {
        if e.rows() != d || e.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "POVM element {}x{} on dimension {d}",
                e.rows(),
                e.cols()
            )));
        }
        psd_eigenvalues(e)?;
        sum = &sum + e;
    }
    let dev = (&sum - &CMatrix::identity(d)).operator_norm();
    if dev > POVM_TOL {
        return Err(Error::PovmIncomplete(dev));
    }
    Ok(())
}

/// Outcome probabilities `tr(L rho)` and post-measurement states `sqrt(L) rho sqrt(L) / p`.
pub fn measure_povm(rho: &DensityMatrix, povm: &[CMatrix]) -> Result<Vec<Outcome>> {
    check_povm(povm, rho.dim())?;
    povm.iter()
        .map(|e| {
            let prob = (e * rho.mat()).trace().re.max(0.0);
            let state = if prob > NULL_TOL {
                let s = mat_fn(e, MatFn::Sqrt)?;
                let post = &(&s * rho.mat()) * &s;
                Some(DensityMatrix::from_trusted(
                    post.scale(1.0 / prob),
                    rho.shape().clone(),
                ))
            } else {
                None
            };
            Ok(Outcome { prob, state })
        })
        .collect()
}

/// Rank-one projectors onto the computational basis of dimension `d`.
pub fn basis_povm(d: usize) -> Vec<CMatrix> {
    (0..d).map(|i| CMatrix::unit(d, i, i)).collect()
}

/// `sum_i |ii> / sqrt(k)` on `A (x) B`.
pub fn max_entangled(k: usize) -> PureState {
    assert!(k >= 1, "dimension must be positive");
    let shape = SystemShape::new([("A", k), ("B", k)]).expect("distinct labels");
    max_entangled_on(shape)
}

/// Maximally entangled state on a two-factor shape with equal dimensions.
pub fn max_entangled_on(shape: SystemShape) -> PureState {
    let dims = shape.dims();
    assert!(
        dims.len() == 2 && dims[0] == dims[1],
        "need two equal factors"
    );
    let k = dims[0];
    let w = 1.0 / (k as f64).sqrt();
    let mut amps = vec![C64::default(); k * k];
    for i in 0..k {
        amps[i * k + i] = c64(w, 0.0);
    }
    PureState {
        vec: CMatrix::column(amps).expect("finite"),
        shape,
    }
}

/// `1/d` on label `A`.
pub fn max_mixed(d: usize) -> DensityMatrix {
    max_mixed_on(SystemShape::single("A", d))
}

pub fn max_mixed_on(shape: SystemShape) -> DensityMatrix {
    let d = shape.dim();
    DensityMatrix::from_trusted(CMatrix::identity(d).scale(1.0 / d as f64), shape)
}
