//! Dense complex matrices and multipartite index bookkeeping.
//!
//! Tensor products follow a single global layout: row-major storage with the
//! leftmost factor varying slowest, so `kron(a, b)` has `(i, j)` block
//! `a[i][j] * b`. [`permute_systems`] is the only way to reorder factors.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;

/// Hermiticity deviation accepted before symmetrizing.
pub const HERMITIAN_TOL: f64 = 1e-8;
/// Eigenvalues in `[PSD_FLOOR, 0)` are clipped to zero; anything lower is an error.
pub const PSD_FLOOR: f64 = -1e-7;

const EIG_MAX_ITER: usize = 10_000;

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense complex matrix. Column vectors are `n x 1` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix(DMatrix<C64>);

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        CMatrix(DMatrix::identity(n, n))
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(CMatrix(DMatrix::from_row_slice(rows, cols, &data)))
    }

    pub fn column(data: Vec<C64>) -> Result<Self> {
        let n = data.len();
        Self::from_row_major(n, 1, data)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        CMatrix(DMatrix::from_fn(rows, cols, f))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                c64(diag[i], 0.0)
            } else {
                C64::default()
            }
        })
    }

    /// Matrix unit `|i><j|` of size `n x n`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        Self::unit_rect(n, n, i, j)
    }

    /// `|i><j|` as a `rows x cols` matrix.
    pub fn unit_rect(rows: usize, cols: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        m.0[(i, j)] = c64(1.0, 0.0);
        m
    }

    pub fn from_inner(inner: DMatrix<C64>) -> Self {
        CMatrix(inner)
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, value: C64) {
        self.0[(row, col)] = value;
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                out.push(self.0[(r, c)]);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        CMatrix(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, factor: f64) -> Self {
        CMatrix(self.0.map(|z| z * factor))
    }

    pub fn scale_complex(&self, factor: C64) -> Self {
        CMatrix(self.0.map(|z| z * factor))
    }

    pub fn kron(&self, other: &CMatrix) -> Self {
        kron(self, other)
    }

    /// `v v^†` for a column vector.
    pub fn outer(&self) -> Self {
        CMatrix(&self.0 * self.0.adjoint())
    }

    /// `<self|other>` for column vectors of equal length.
    pub fn inner_product(&self, other: &CMatrix) -> C64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        singular_values(self).into_iter().fold(0.0, f64::max)
    }

    /// Frobenius norm of `m - m^†`.
    pub fn hermiticity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn hermitian_part(&self) -> Self {
        CMatrix((&self.0 + self.0.adjoint()).map(|z| z * 0.5))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Rows `[row0, row0 + nrows)` and all columns.
    pub fn row_block(&self, row0: usize, nrows: usize) -> Self {
        CMatrix(self.0.rows(row0, nrows).into_owned())
    }

    pub fn vstack(blocks: &[CMatrix]) -> Result<Self> {
        let cols = blocks.first().map_or(0, CMatrix::cols);
        if blocks.iter().any(|b| b.cols() != cols) {
            return Err(Error::DimensionMismatch(
                "vstack column counts differ".into(),
            ));
        }
        let rows: usize = blocks.iter().map(CMatrix::rows).sum();
        let mut out = DMatrix::zeros(rows, cols);
        let mut r0 = 0;
        for b in blocks {
            out.rows_mut(r0, b.rows()).copy_from(&b.0);
            r0 += b.rows();
        }
        Ok(CMatrix(out))
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 * &rhs.0)
    }
}

impl fmt::Display for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                let z = self.0[(r, c)];
                write!(f, "{:>9.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Ordered, labelled subsystem dimensions. Leftmost factor varies slowest.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct SystemShape {
    factors: Vec<(String, usize)>,
}

impl SystemShape {
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let factors: Vec<(String, usize)> =
            factors.into_iter().map(|(l, d)| (l.into(), d)).collect();
        for (i, (label, dim)) in factors.iter().enumerate() {
            if *dim == 0 {
                return Err(Error::DimensionMismatch(format!(
                    "factor `{label}` has dimension 0"
                )));
            }
            if label.is_empty() {
                return Err(Error::InvalidSelection("empty subsystem label".into()));
            }
            if factors[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(SystemShape { factors })
    }

    /// Single-factor shape.
    ///
    /// Panics if `dim` is zero.
    pub fn single(label: &str, dim: usize) -> Self {
        assert!(dim > 0, "subsystem dimension must be positive");
        SystemShape {
            factors: vec![(label.to_string(), dim)],
        }
    }

    pub fn empty() -> Self {
        SystemShape::default()
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| d).product()
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[(String, usize)] {
        &self.factors
    }

    pub fn labels(&self) -> Vec<&str> {
        self.factors.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|(_, d)| *d).collect()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.position(label).is_some()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|(l, _)| l == label)
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        self.position(label)
            .map(|i| self.factors[i].1)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Product dimension of the given labels.
    pub fn dim_of_all(&self, labels: &[&str]) -> Result<usize> {
        labels.iter().map(|l| self.dim_of(l)).product()
    }

    pub fn concat(&self, other: &SystemShape) -> Result<Self> {
        SystemShape::new(self.factors.iter().chain(other.factors.iter()).cloned())
    }

    /// Sub-shape with the given labels, kept in this shape's order.
    pub fn select(&self, labels: &[&str]) -> Result<Self> {
        self.check_labels(labels)?;
        Ok(SystemShape {
            factors: self
                .factors
                .iter()
                .filter(|(l, _)| labels.contains(&l.as_str()))
                .cloned()
                .collect(),
        })
    }

    /// Sub-shape with the given labels removed.
    pub fn without(&self, labels: &[&str]) -> Result<Self> {
        self.check_labels(labels)?;
        Ok(SystemShape {
            factors: self
                .factors
                .iter()
                .filter(|(l, _)| !labels.contains(&l.as_str()))
                .cloned()
                .collect(),
        })
    }

    /// Shape reordered to `order`, which must be a permutation of the labels.
    pub fn reordered(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.len() {
            return Err(Error::InvalidSelection(format!(
                "order has {} labels, shape has {}",
                order.len(),
                self.len()
            )));
        }
        self.check_labels(order)?;
        let factors = order
            .iter()
            .map(|l| {
                let i = self.position(l).expect("checked");
                self.factors[i].clone()
            })
            .collect();
        Ok(SystemShape { factors })
    }

    pub fn relabel(&self, from: &str, to: &str) -> Result<Self> {
        let i = self
            .position(from)
            .ok_or_else(|| Error::UnknownLabel(from.to_string()))?;
        let mut factors = self.factors.clone();
        factors[i].0 = to.to_string();
        SystemShape::new(factors)
    }

    /// Every label with `suffix` appended.
    pub fn with_suffix(&self, suffix: &str) -> Self {
        SystemShape {
            factors: self
                .factors
                .iter()
                .map(|(l, d)| (format!("{l}{suffix}"), *d))
                .collect(),
        }
    }

    /// A label based on `base` that does not occur in this shape.
    pub fn fresh_label(&self, base: &str) -> String {
        let mut label = base.to_string();
        while self.contains(&label) {
            label.push('\'');
        }
        label
    }

    fn check_labels(&self, labels: &[&str]) -> Result<()> {
        for (i, l) in labels.iter().enumerate() {
            if !self.contains(l) {
                return Err(Error::UnknownLabel(l.to_string()));
            }
            if labels[..i].contains(l) {
                return Err(Error::DuplicateLabel(l.to_string()));
            }
        }
        Ok(())
    }
}

impl fmt::Display for SystemShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (l, d)) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{l}:{d}")?;
        }
        write!(f, "]")
    }
}

/// For every flat index in the layout `order`, the flat index it came from in
/// the layout of `shape`.
pub(crate) fn index_map(shape: &SystemShape, order: &[&str]) -> Result<Vec<usize>> {
    let target = shape.reordered(order)?;
    let dims = shape.dims();
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let new_dims = target.dims();
    let new_strides: Vec<usize> = order
        .iter()
        .map(|l| strides[shape.position(l).expect("checked")])
        .collect();

    let total = shape.dim();
    let mut map = Vec::with_capacity(total);
    let mut digits = vec![0usize; new_dims.len()];
    let mut old = 0usize;
    for _ in 0..total {
        map.push(old);
        // odometer increment, rightmost fastest
        for k in (0..new_dims.len()).rev() {
            digits[k] += 1;
            old += new_strides[k];
            if digits[k] < new_dims[k] {
                break;
            }
            old -= new_strides[k] * new_dims[k];
            digits[k] = 0;
        }
    }
    Ok(map)
}

fn check_square_shape(m: &CMatrix, shape: &SystemShape) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if m.rows() != shape.dim() {
        return Err(Error::DimensionMismatch(format!(
            "matrix dimension {} but shape {shape} has dimension {}",
            m.rows(),
            shape.dim()
        )));
    }
    Ok(())
}

/// Kronecker product with the slowest-index-leftmost convention.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    CMatrix(a.0.kronecker(&b.0))
}

/// Simultaneous row/column permutation of the tensor factors.
pub fn permute_systems(
    m: &CMatrix,
    shape: &SystemShape,
    new_order: &[&str],
) -> Result<(CMatrix, SystemShape)> {
    check_square_shape(m, shape)?;
    let map = index_map(shape, new_order)?;
    let n = map.len();
    let out = CMatrix::from_fn(n, n, |r, c| m.0[(map[r], map[c])]);
    Ok((out, shape.reordered(new_order)?))
}

/// Permutes the tensor factors of a column vector.
pub fn permute_vector(
    v: &CMatrix,
    shape: &SystemShape,
    new_order: &[&str],
) -> Result<(CMatrix, SystemShape)> {
    if v.cols() != 1 || v.rows() != shape.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} for shape {shape}",
            v.rows()
        )));
    }
    let map = index_map(shape, new_order)?;
    let out = CMatrix::from_fn(map.len(), 1, |r, _| v.0[(map[r], 0)]);
    Ok((out, shape.reordered(new_order)?))
}

/// Partial trace over `traced`; the kept factors stay in their original order.
pub fn partial_trace(
    m: &CMatrix,
    shape: &SystemShape,
    traced: &[&str],
) -> Result<(CMatrix, SystemShape)> {
    check_square_shape(m, shape)?;
    let kept = shape.without(traced)?;
    if traced.is_empty() {
        return Ok((m.clone(), kept));
    }
    let mut order = kept.labels();
    order.extend(traced.iter().copied());
    let map = index_map(shape, &order)?;
    let dk = kept.dim();
    let dt = shape.dim() / dk;
    let out = CMatrix::from_fn(dk, dk, |i, j| {
        (0..dt)
            .map(|t| m.0[(map[i * dt + t], map[j * dt + t])])
            .sum()
    });
    Ok((out, kept))
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEig {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns, in the order of `eigenvalues`.
    pub eigenvectors: CMatrix,
}

impl HermEig {
    /// `V diag(f(λ)) V^†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let v = &self.eigenvectors.0;
        let n = v.nrows();
        let mut out = DMatrix::<C64>::zeros(n, n);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            let col = v.column(k);
            out += (col * col.adjoint()).map(|z| z * w);
        }
        CMatrix(out)
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.reconstruct_with(|x| x)
    }
}

/// Groups indices into connected components of the nonzero pattern.
fn decoupled_blocks(h: &DMatrix<C64>) -> Vec<Vec<usize>> {
    let n = h.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if h[(i, j)] != C64::default() {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[root]].push(i);
    }
    blocks
}

fn symmetrized(m: &CMatrix) -> Result<DMatrix<C64>> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let dev = m.hermiticity_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    Ok(m.hermitian_part().0)
}

/// An eigenvalue and, when requested, its eigenvector as sparse `(index, amplitude)` entries.
type EigPair = (f64, Option<Vec<(usize, C64)>>);

fn eig_blocks(h: &DMatrix<C64>, vectors: bool) -> Result<Vec<EigPair>> {
    let mut pairs = Vec::with_capacity(h.nrows());
    for block in decoupled_blocks(h) {
        if block.len() == 1 {
            let i = block[0];
            pairs.push((h[(i, i)].re, vectors.then(|| vec![(i, c64(1.0, 0.0))])));
            continue;
        }
        let sub = DMatrix::from_fn(block.len(), block.len(), |r, c| h[(block[r], block[c])]);
        let eig =
            SymmetricEigen::try_new(sub, f64::EPSILON, EIG_MAX_ITER).ok_or(Error::EigenFailed)?;
        for k in 0..block.len() {
            let vec = vectors.then(|| {
                block
                    .iter()
                    .enumerate()
                    .map(|(r, &i)| (i, eig.eigenvectors[(r, k)]))
                    .collect()
            });
            pairs.push((eig.eigenvalues[k], vec));
        }
    }
    // stable: ties keep production order
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite eigenvalues"));
    Ok(pairs)
}

/// Eigendecomposition of a Hermitian matrix; the input is symmetrized first.
pub fn herm_eig(m: &CMatrix) -> Result<HermEig> {
    let h = symmetrized(m)?;
    let n = h.nrows();
    let pairs = eig_blocks(&h, true)?;
    let mut vecs = DMatrix::<C64>::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (k, (lam, vec)) in pairs.into_iter().enumerate() {
        eigenvalues.push(lam);
        for (i, z) in vec.expect("requested") {
            vecs[(i, k)] = z;
        }
    }
    Ok(HermEig {
        eigenvalues,
        eigenvectors: CMatrix(vecs),
    })
}

/// Eigenvalues only, descending.
pub fn herm_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let h = symmetrized(m)?;
    Ok(eig_blocks(&h, false)?.into_iter().map(|(l, _)| l).collect())
}

/// Eigenvalues of a PSD matrix with the clip band applied.
pub fn psd_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    clip_psd(herm_eigenvalues(m)?)
}

pub(crate) fn clip_psd(mut eigenvalues: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(&min) = eigenvalues.last() {
        if min < PSD_FLOOR {
            return Err(Error::NotPositive(min));
        }
    }
    for l in &mut eigenvalues {
        if *l < 0.0 {
            *l = 0.0;
        }
    }
    Ok(eigenvalues)
}

/// Spectral functions applied to PSD matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatFn {
    Sqrt,
    /// Logarithm base 2 on the support; the kernel is projected out.
    Log2,
    /// `x log2 x` with `0 log 0 = 0`.
    XLog2X,
}

impl MatFn {
    fn apply(self, x: f64) -> f64 {
        match self {
            MatFn::Sqrt => x.sqrt(),
            MatFn::Log2 if x > 0.0 => x.log2(),
            MatFn::XLog2X if x > 0.0 => x * x.log2(),
            MatFn::Log2 | MatFn::XLog2X => 0.0,
        }
    }
}

pub fn mat_fn(m: &CMatrix, f: MatFn) -> Result<CMatrix> {
    let mut eig = herm_eig(m)?;
    eig.eigenvalues = clip_psd(eig.eigenvalues)?;
    Ok(eig.reconstruct_with(|x| f.apply(x)))
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Vec::new();
    }
    match m
        .0
        .clone()
        .try_svd(false, false, f64::EPSILON, EIG_MAX_ITER)
    {
        Some(svd) => svd.singular_values.iter().copied().collect(),
        // fall back on the Gram matrix spectrum
        None => {
            let gram = CMatrix(m.0.adjoint() * &m.0);
            herm_eigenvalues(&gram)
                .unwrap_or_default()
                .into_iter()
                .map(|l| l.max(0.0).sqrt())
                .collect()
        }
    }
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    singular_values(m).iter().sum()
}
