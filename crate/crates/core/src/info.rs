//! Entropic functionals, in bits.

use crate::channels::{apply_all, complement, instrument_complement, Channel, Instrument};
use crate::error::{Error, Result};
use crate::states::{DensityMatrix, Ensemble};
use crate::tensor::herm_eigenvalues;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyReport {
    pub value: f64,
    /// Some eigenvalue fell in the clip band and was set to zero.
    pub eigenvalue_floor_applied: bool,
}

pub fn entropy_report(rho: &DensityMatrix) -> Result<EntropyReport> {
    let eig = herm_eigenvalues(rho.mat())?;
    let clipped = crate::tensor::clip_psd(eig.clone())?;
    Ok(EntropyReport {
        value: shannon_of_spectrum(&clipped),
        eigenvalue_floor_applied: eig.iter().any(|&l| l < 0.0),
    })
}

/// `-tr rho log2 rho`.
pub fn entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(entropy_report(rho)?.value)
}

fn shannon_of_spectrum(eig: &[f64]) -> f64 {
    let h: f64 = eig
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.log2())
        .sum();
    h.max(0.0)
}

/// Shannon entropy of a distribution (unnormalized weights are not rescaled).
pub fn shannon_entropy(probs: &[f64]) -> Result<f64> {
    for &p in probs {
        if !(0.0..=1.0 + 1e-12).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
    }
    Ok(shannon_of_spectrum(probs))
}

/// Entropy of the marginal on `labels`; zero for the empty set.
pub fn marginal_entropy(rho: &DensityMatrix, labels: &[&str]) -> Result<f64> {
    if labels.is_empty() {
        return Ok(0.0);
    }
    if labels.len() == rho.shape().len() {
        rho.shape().select(labels)?;
        return entropy(rho);
    }
    entropy(&rho.reduced(labels)?)
}

fn union<'a>(sets: &[&[&'a str]]) -> Result<Vec<&'a str>> {
    let mut out: Vec<&str> = Vec::new();
    for s in sets {
        for l in *s {
            if out.contains(l) {
                return Err(Error::InvalidSelection(format!("label `{l}` used twice")));
            }
            out.push(l);
        }
    }
    Ok(out)
}

/// `H(A|B) = H(AB) - H(B)`.
pub fn cond_entropy(rho: &DensityMatrix, a: &[&str], b: &[&str]) -> Result<f64> {
    let ab = union(&[a, b])?;
    Ok(marginal_entropy(rho, &ab)? - marginal_entropy(rho, b)?)
}

/// `I(A;B) = H(A) + H(B) - H(AB)`.
pub fn mutual_info(rho: &DensityMatrix, a: &[&str], b: &[&str]) -> Result<f64> {
    let ab = union(&[a, b])?;
    Ok(marginal_entropy(rho, a)? + marginal_entropy(rho, b)? - marginal_entropy(rho, &ab)?)
}

/// `I(A;B|C) = H(AC) + H(BC) - H(C) - H(ABC)`.
pub fn cond_mutual_info(rho: &DensityMatrix, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
    let abc = union(&[a, b, c])?;
    let ac = union(&[a, c])?;
    let bc = union(&[b, c])?;
    Ok(marginal_entropy(rho, &ac)? + marginal_entropy(rho, &bc)?
        - marginal_entropy(rho, c)?
        - marginal_entropy(rho, &abc)?)
}

/// `I_c(A>B) = H(B) - H(AB) = -H(A|B)`.
pub fn coherent_info_state(rho: &DensityMatrix, a: &[&str], b: &[&str]) -> Result<f64> {
    Ok(-cond_entropy(rho, a, b)?)
}

/// `I_c(rho, N) = H(N(rho)) - H(N^c(rho))`.
pub fn coherent_info_channel(rho: &DensityMatrix, ch: &Channel) -> Result<f64> {
    let out = apply_all(ch, rho)?;
    let env = apply_all(&complement(ch), rho)?;
    Ok(entropy(&out)? - entropy(&env)?)
}

/// `H(N(rho)) - H(N^c(rho))` for the instrument viewed as a channel to `X (x) B`.
pub fn coherent_info_instrument(rho: &DensityMatrix, ins: &Instrument) -> Result<f64> {
    let out = apply_all(&ins.as_channel("X")?, rho)?;
    let env = apply_all(&instrument_complement(ins)?.as_channel("X")?, rho)?;
    Ok(entropy(&out)? - entropy(&env)?)
}

/// `sum_x q(x) I_c(rho, N_x)` with `q(x) = tr N_x(rho)` and `N_x` normalized on `rho`.
pub fn coherent_info_instrument_average(rho: &DensityMatrix, ins: &Instrument) -> Result<f64> {
    let mut total = 0.0;
    for c in ins.components() {
        let out = apply_all(c, rho)?;
        let q = out.mat().trace().re;
        if q <= crate::states::NULL_TOL {
            continue;
        }
        let env = apply_all(&complement(c), rho)?;
        let h_out = entropy(&DensityMatrix::from_trusted(
            out.mat().scale(1.0 / q),
            out.shape().clone(),
        ))?;
        let h_env = entropy(&DensityMatrix::from_trusted(
            env.mat().scale(1.0 / q),
            env.shape().clone(),
        ))?;
        total += q * (h_out - h_env);
    }
    Ok(total)
}

/// `chi = H(sum p rho_x) - sum p H(rho_x)`.
pub fn holevo(e: &Ensemble) -> Result<f64> {
    let mut avg = 0.0;
    for (p, s) in e.probs().iter().zip(e.states()) {
        if *p > 0.0 {
            avg += p * entropy(s)?;
        }
    }
    Ok(entropy(&e.average())? - avg)
}

/// `H(p) = -p log p - (1-p) log(1-p)`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    Ok(h2(p))
}

pub(crate) fn h2(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// `H(pe) + pe log2 m`.
pub fn fano_bound(pe: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "alphabet size must be positive".into(),
        ));
    }
    Ok(binary_entropy(pe)? + pe * (m as f64).log2())
}
