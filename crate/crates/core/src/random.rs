//! Seeded random states, channels, and measurements for property tests and fuzzing.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channels::{Channel, Instrument};
use crate::error::Result;
use crate::states::{DensityMatrix, Ensemble, PureState};
use crate::tensor::{c64, herm_eig, CMatrix, SystemShape, C64};

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    let data: Vec<C64> = (0..rows * cols)
        .map(|_| c64(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    CMatrix::from_row_major(rows, cols, data).expect("finite gaussian samples")
}

/// Columns of the QR factor of a complex Gaussian matrix; `rows >= cols`.
pub fn random_isometry(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let g = gaussian_matrix(rows, cols, rng);
    let q = g.into_inner().qr().q();
    CMatrix::from_inner(q)
}

pub fn random_unitary(d: usize, rng: &mut impl Rng) -> CMatrix {
    random_isometry(d, d, rng)
}

pub fn random_pure(shape: SystemShape, rng: &mut impl Rng) -> PureState {
    let d = shape.dim();
    loop {
        let v = gaussian_matrix(d, 1, rng);
        if let Ok(p) = PureState::normalized(v, shape.clone()) {
            return p;
        }
    }
}

/// `G G^† / tr` for a `d x rank` Gaussian `G`.
pub fn random_density(shape: SystemShape, rank: usize, rng: &mut impl Rng) -> DensityMatrix {
    let d = shape.dim();
    let g = gaussian_matrix(d, rank.max(1), rng);
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m.hermitian_part().scale(1.0 / tr), shape)
        .expect("Wishart sample is a state")
}

/// Full-rank mixed state.
pub fn random_mixed(shape: SystemShape, rng: &mut impl Rng) -> DensityMatrix {
    let d = shape.dim();
    random_density(shape, d, rng)
}

/// Channel with `n_kraus` operators cut from a random isometry.
pub fn random_channel(
    in_shape: SystemShape,
    out_shape: SystemShape,
    n_kraus: usize,
    rng: &mut impl Rng,
) -> Channel {
    let (din, dout) = (in_shape.dim(), out_shape.dim());
    let n = n_kraus.max(din.div_ceil(dout)).max(1);
    let v = random_isometry(n * dout, din, rng);
    let kraus = (0..n).map(|e| v.row_block(e * dout, dout)).collect();
    Channel::new(kraus, in_shape, out_shape).expect("isometry blocks are CPTP")
}

/// `S^{-1/2} A_i S^{-1/2}` with `A_i = G_i^† G_i` and `S = sum A_i`.
pub fn random_povm(d: usize, outcomes: usize, rng: &mut impl Rng) -> Vec<CMatrix> {
    let raw: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = gaussian_matrix(d, d, rng);
            (&g.adjoint() * &g).hermitian_part()
        })
        .collect();
    let mut s = CMatrix::zeros(d, d);
    for a in &raw {
        s = &s + a;
    }
    let inv_sqrt = herm_eig(&s)
        .expect("Hermitian")
        .reconstruct_with(|l| 1.0 / l.max(1e-300).sqrt());
    raw.iter()
        .map(|a| (&(&inv_sqrt * a) * &inv_sqrt).hermitian_part())
        .collect()
}

/// Strictly positive probabilities drawn uniformly from the simplex.
pub fn random_probs(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

pub fn random_ensemble(
    shape: SystemShape,
    n: usize,
    rank: usize,
    rng: &mut impl Rng,
) -> Result<Ensemble> {
    let probs = random_probs(n, rng);
    let states = (0..n)
        .map(|_| random_density(shape.clone(), rank, rng))
        .collect();
    Ensemble::new(probs, states)
}

/// Instrument `{p(s) N_s}` with random channels `N_s` on one shape.
pub fn random_instrument(
    shape: SystemShape,
    components: usize,
    n_kraus: usize,
    rng: &mut impl Rng,
) -> Result<Instrument> {
    let probs = random_probs(components, rng);
    let channels: Vec<Channel> = (0..components)
        .map(|_| random_channel(shape.clone(), shape.clone(), n_kraus, rng))
        .collect();
    Instrument::from_channels(&probs, &channels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::rng_for;

    #[test]
    fn samples_are_valid() {
        let mut rng = rng_for(1, 0, 0);
        let s = SystemShape::single("A", 3);
        let v = random_isometry(6, 3, &mut rng);
        let dev = (&(&v.adjoint() * &v) - &CMatrix::identity(3)).max_abs();
        assert!(dev < 1e-12);
        let ch = random_channel(s.clone(), SystemShape::single("B", 2), 2, &mut rng);
        assert!(ch.cptp_margin() < 1e-12);
        let povm = random_povm(3, 4, &mut rng);
        let mut sum = CMatrix::zeros(3, 3);
        for e in &povm {
            sum = &sum + e;
        }
        assert!((&sum - &CMatrix::identity(3)).max_abs() < 1e-12);
        let p = random_probs(5, &mut rng);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(random_density(s, 1, &mut rng).spectrum().unwrap()[1].abs() < 1e-12);
    }
}
