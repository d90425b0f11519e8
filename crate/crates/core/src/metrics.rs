//! Trace distance, fidelity, and the inequalities relating them.
//!
//! Fidelity is the squared overlap `F(rho, sigma) = (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::info::{coherent_info_state, h2};
use crate::states::{DensityMatrix, PureState};
use crate::tensor::{
    herm_eig, mat_fn, psd_eigenvalues, singular_values, trace_norm, CMatrix, MatFn,
};

pub const MARGIN_TOL: f64 = 1e-9;

/// Largest eigenvalue at which a state is treated as pure.
const PURE_THRESHOLD: f64 = 1.0 - 1e-12;

/// An inequality `lhs >= rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundMargin {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

impl BoundMargin {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        BoundMargin {
            lhs,
            rhs,
            satisfied: lhs - rhs >= -MARGIN_TOL,
        }
    }

    pub fn margin(&self) -> f64 {
        self.lhs - self.rhs
    }
}

fn same_shape(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch(format!(
            "comparing states on {} and {}",
            rho.shape(),
            sigma.shape()
        )));
    }
    Ok(())
}

/// `|rho - sigma|_1`, between 0 and 2.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_shape(rho, sigma)?;
    Ok(trace_norm(&(rho.mat() - sigma.mat())))
}

/// Projector onto the positive eigenspace of `rho - sigma`; `2 tr P (rho - sigma)`
/// equals the trace distance.
pub fn helstrom_projector(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<CMatrix> {
    same_shape(rho, sigma)?;
    let eig = herm_eig(&(rho.mat() - sigma.mat()))?;
    Ok(eig.reconstruct_with(|l| if l > 0.0 { 1.0 } else { 0.0 }))
}

/// Top eigenvector when the state is pure to within the threshold.
fn pure_vector(rho: &DensityMatrix) -> Result<Option<CMatrix>> {
    let eig = herm_eig(rho.mat())?;
    if eig.eigenvalues.first().copied().unwrap_or(0.0) < PURE_THRESHOLD {
        return Ok(None);
    }
    let v = &eig.eigenvectors;
    Ok(Some(CMatrix::from_fn(v.rows(), 1, |i, _| v.get(i, 0))))
}

fn expectation(v: &CMatrix, m: &CMatrix) -> f64 {
    (&v.adjoint() * &(m * v)).get(0, 0).re
}

/// Squared-overlap fidelity.
///
/// Pure arguments use `<phi|sigma|phi>`; otherwise the value is the squared
/// sum of singular values of `sqrt(sigma) sqrt(rho)`, which is symmetric in
/// the arguments by construction.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_shape(rho, sigma)?;
    if let Some(v) = pure_vector(rho)? {
        return Ok(expectation(&v, sigma.mat()).max(0.0));
    }
    if let Some(v) = pure_vector(sigma)? {
        return Ok(expectation(&v, rho.mat()).max(0.0));
    }
    let a = mat_fn(rho.mat(), MatFn::Sqrt)?;
    let b = mat_fn(sigma.mat(), MatFn::Sqrt)?;
    let s: f64 = singular_values(&(&b * &a)).iter().sum();
    Ok(s * s)
}

pub fn fidelity_pure(phi: &PureState, sigma: &DensityMatrix) -> Result<f64> {
    if phi.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch(format!(
            "comparing states on {} and {}",
            phi.shape(),
            sigma.shape()
        )));
    }
    Ok(expectation(phi.vec(), sigma.mat()).max(0.0))
}

/// The four relations `1 - sqrt F <= T/2 <= sqrt(1 - F)` and `1 - T <= F <= 1 - T^2/4`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Sandwich {
    pub trace: f64,
    pub fidelity: f64,
    pub half_trace_lower: BoundMargin,
    pub half_trace_upper: BoundMargin,
    pub fidelity_lower: BoundMargin,
    pub fidelity_upper: BoundMargin,
}

impl Sandwich {
    pub fn margins(&self) -> [BoundMargin; 4] {
        [
            self.half_trace_lower,
            self.half_trace_upper,
            self.fidelity_lower,
            self.fidelity_upper,
        ]
    }

    pub fn satisfied(&self) -> bool {
        self.margins().iter().all(|m| m.satisfied)
    }
}

pub fn fid_trace_sandwich(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Sandwich> {
    let t = trace_distance(rho, sigma)?;
    let f = fidelity(rho, sigma)?;
    let fc = f.clamp(0.0, 1.0);
    Ok(Sandwich {
        trace: t,
        fidelity: f,
        half_trace_lower: BoundMargin::new(t / 2.0, 1.0 - fc.sqrt()),
        half_trace_upper: BoundMargin::new((1.0 - fc).sqrt(), t / 2.0),
        fidelity_lower: BoundMargin::new(f, 1.0 - t),
        fidelity_upper: BoundMargin::new(1.0 - t * t / 4.0, f),
    })
}

/// `F(phi, sigma) >= F(phi, rho) - |rho - sigma|_1`.
pub fn special_triangle(
    phi: &PureState,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
) -> Result<BoundMargin> {
    let t = trace_distance(rho, sigma)?;
    Ok(BoundMargin::new(
        fidelity_pure(phi, sigma)?,
        fidelity_pure(phi, rho)? - t,
    ))
}

/// `F(phi (x) rho, Omega) >= 1 - |rho - Omega^B|_1 - 3 (1 - F(phi, Omega^A))`.
pub fn transitivity_bound(
    phi: &PureState,
    rho: &DensityMatrix,
    omega: &DensityMatrix,
) -> Result<BoundMargin> {
    let a_labels = phi.shape().labels();
    let b_labels = rho.shape().labels();
    let mut order = a_labels.clone();
    order.extend(b_labels.iter().copied());
    let omega = omega.permute(&order)?;
    let joint = phi.to_density().tensor(rho)?;
    let omega_a = omega.reduced(&a_labels)?;
    let omega_b = omega.reduced(&b_labels)?;
    let lhs = fidelity(&joint, &omega)?;
    let rhs = 1.0 - trace_distance(rho, &omega_b)? - 3.0 * (1.0 - fidelity_pure(phi, &omega_a)?);
    Ok(BoundMargin::new(lhs, rhs))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GentleMeasurement {
    /// `1 - tr(rho L)`.
    pub epsilon: f64,
    /// `|sqrt(L) rho sqrt(L) - rho|_1`.
    pub disturbance: f64,
    /// `sqrt(8 epsilon)`.
    pub cap: f64,
    pub bound: BoundMargin,
}

const SPECTRUM_TOL: f64 = 1e-7;

pub fn gentle_measurement(rho: &DensityMatrix, lam: &CMatrix) -> Result<GentleMeasurement> {
    if lam.rows() != rho.dim() || lam.cols() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator on a state of dimension {}",
            lam.rows(),
            lam.cols(),
            rho.dim()
        )));
    }
    let spec = psd_eigenvalues(lam).map_err(|e| match e {
        Error::NotPositive(v) => Error::SpectrumOutOfRange(format!("eigenvalue {v:.3e} < 0")),
        other => other,
    })?;
    if let Some(&top) = spec.first() {
        if top > 1.0 + SPECTRUM_TOL {
            return Err(Error::SpectrumOutOfRange(format!(
                "eigenvalue {top:.12} > 1"
            )));
        }
    }
    let epsilon = 1.0 - (lam * rho.mat()).trace().re;
    let s = mat_fn(lam, MatFn::Sqrt)?;
    let post = &(&s * rho.mat()) * &s;
    let disturbance = trace_norm(&(&post - rho.mat()));
    let cap = (8.0 * epsilon.max(0.0)).sqrt();
    Ok(GentleMeasurement {
        epsilon,
        disturbance,
        cap,
        bound: BoundMargin::new(cap, disturbance),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Continuity {
    pub epsilon: f64,
    pub difference: f64,
    pub bound: BoundMargin,
}

/// `|I_c(A>B)_rho - I_c(A>B)_sigma| <= 2 H(eps) + 4 log|A| eps` with `eps = |rho - sigma|_1`.
///
/// The binary entropy argument is clamped to 1.
pub fn continuity_bound(
    rho_ab: &DensityMatrix,
    sigma_ab: &DensityMatrix,
    a: &[&str],
    b: &[&str],
) -> Result<Continuity> {
    let eps = trace_distance(rho_ab, sigma_ab)?;
    let da = rho_ab.shape().dim_of_all(a)? as f64;
    let difference =
        (coherent_info_state(rho_ab, a, b)? - coherent_info_state(sigma_ab, a, b)?).abs();
    let cap = 2.0 * h2(eps.clamp(0.0, 1.0)) + 4.0 * da.log2() * eps;
    Ok(Continuity {
        epsilon: eps,
        difference,
        bound: BoundMargin::new(cap, difference),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{max_entangled, max_mixed};
    use crate::tensor::{c64, SystemShape};

    fn ket(i: usize) -> PureState {
        PureState::basis(SystemShape::single("A", 2), i).unwrap()
    }

    fn plus() -> PureState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PureState::from_amplitudes(vec![c64(s, 0.0), c64(s, 0.0)], SystemShape::single("A", 2))
            .unwrap()
    }

    fn diag(d: &[f64]) -> DensityMatrix {
        DensityMatrix::new(
            CMatrix::from_real_diagonal(d),
            SystemShape::single("A", d.len()),
        )
        .unwrap()
    }

    #[test]
    fn trace_distance_examples() {
        let r = plus().to_density();
        assert!(trace_distance(&r, &r).unwrap() < 1e-15);
        let t = trace_distance(&ket(0).to_density(), &ket(1).to_density()).unwrap();
        assert!((t - 2.0).abs() < 1e-14);
        let t = trace_distance(&diag(&[0.5, 0.5]), &diag(&[0.75, 0.25])).unwrap();
        assert!((t - 0.5).abs() < 1e-14);
    }

    #[test]
    fn helstrom_projector_attains_trace_distance() {
        let a = plus().to_density();
        let b = diag(&[0.7, 0.3]);
        let p = helstrom_projector(&a, &b).unwrap();
        let v = 2.0 * (&p * &(a.mat() - b.mat())).trace().re;
        assert!((v - trace_distance(&a, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let r = diag(&[0.3, 0.7]);
        assert!((fidelity(&r, &r).unwrap() - 1.0).abs() < 1e-12);
        assert!(
            (fidelity(&ket(0).to_density(), &plus().to_density()).unwrap() - 0.5).abs() < 1e-14
        );
        assert!((fidelity(&ket(0).to_density(), &max_mixed(2)).unwrap() - 0.5).abs() < 1e-14);
        // commuting states: (sum sqrt(p q))^2
        let f = fidelity(&diag(&[0.3, 0.7]), &diag(&[0.6, 0.4])).unwrap();
        let oracle = ((0.3f64 * 0.6).sqrt() + (0.7f64 * 0.4).sqrt()).powi(2);
        assert!((f - oracle).abs() < 1e-12);
    }

    #[test]
    fn sandwich_extremes() {
        let r = plus().to_density();
        let s = fid_trace_sandwich(&r, &r).unwrap();
        assert!(s.satisfied());
        let s = fid_trace_sandwich(&ket(0).to_density(), &ket(1).to_density()).unwrap();
        assert!(s.satisfied());
        assert!(s.half_trace_lower.margin().abs() < 1e-12);
        assert!(s.half_trace_upper.margin().abs() < 1e-12);
        assert!(s.fidelity_upper.margin().abs() < 1e-12);
    }

    #[test]
    fn special_triangle_extremes() {
        let phi = ket(0);
        let m = special_triangle(&phi, &phi.to_density(), &ket(1).to_density()).unwrap();
        assert!((m.lhs - 0.0).abs() < 1e-14 && (m.rhs + 1.0).abs() < 1e-14);
    }

    #[test]
    fn transitivity_on_product_and_shifted() {
        let phi = plus();
        let rho = diag(&[0.8, 0.2]).relabel("A", "B").unwrap();
        let omega = phi.to_density().tensor(&rho).unwrap();
        let m = transitivity_bound(&phi, &rho, &omega).unwrap();
        assert!((m.lhs - 1.0).abs() < 1e-12 && (m.rhs - 1.0).abs() < 1e-12);

        let sigma = diag(&[0.5, 0.5]).relabel("A", "B").unwrap();
        let omega = phi.to_density().tensor(&sigma).unwrap();
        let m = transitivity_bound(&phi, &rho, &omega).unwrap();
        let t = trace_distance(&rho, &sigma).unwrap();
        assert!((m.rhs - (1.0 - t)).abs() < 1e-12);
        assert!(m.satisfied);
    }

    #[test]
    fn gentle_examples() {
        let rho = plus().to_density();
        let g = gentle_measurement(&rho, &CMatrix::identity(2)).unwrap();
        assert!(g.disturbance < 1e-14 && g.bound.satisfied);
        let g = gentle_measurement(&rho, rho.mat()).unwrap();
        assert!(g.disturbance < 1e-12);
        assert!(matches!(
            gentle_measurement(&rho, &CMatrix::identity(2).scale(1.5)),
            Err(Error::SpectrumOutOfRange(_))
        ));
    }

    #[test]
    fn continuity_on_perturbed_bell_state() {
        let phi = max_entangled(2).to_density();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let orth = PureState::from_amplitudes(
            vec![c64(s, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(-s, 0.0)],
            phi.shape().clone(),
        )
        .unwrap()
        .to_density();
        let sigma = phi.mix(&orth, 0.01).unwrap();
        let c = continuity_bound(&phi, &sigma, &["A"], &["B"]).unwrap();
        assert!(c.bound.satisfied && c.bound.margin() > 0.0);
        let same = continuity_bound(&phi, &phi, &["A"], &["B"]).unwrap();
        assert!(same.difference < 1e-12 && same.bound.lhs.abs() < 1e-12);
    }
}
