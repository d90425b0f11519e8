//! Derivative-free maximization: Hooke-Jeeves pattern search from many starts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub restarts: usize,
    /// Objective evaluations per restart.
    pub evals: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            restarts: 32,
            evals: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

pub const INITIAL_STEP: f64 = 0.5;
pub const MIN_STEP: f64 = 1e-7;

struct Counted<'a> {
    f: &'a mut dyn FnMut(&[f64]) -> f64,
    evals: usize,
    max_evals: usize,
}

impl Counted<'_> {
    fn exhausted(&self) -> bool {
        self.evals >= self.max_evals
    }

    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    }

    /// One sweep of `+step` / `-step` trials along each coordinate.
    fn explore(&mut self, center: &[f64], fc: f64, step: f64) -> (Vec<f64>, f64) {
        let mut x = center.to_vec();
        let mut fx = fc;
        for i in 0..x.len() {
            if self.exhausted() {
                break;
            }
            let orig = x[i];
            x[i] = orig + step;
            let up = self.eval(&x);
            if up > fx {
                fx = up;
                continue;
            }
            if self.exhausted() {
                x[i] = orig;
                break;
            }
            x[i] = orig - step;
            let down = self.eval(&x);
            if down > fx {
                fx = down;
            } else {
                x[i] = orig;
            }
        }
        (x, fx)
    }
}

/// Maximizes `f` from `x0` by coordinate exploration with step halving and
/// pattern moves. Non-finite objective values count as `-inf`.
pub fn pattern_search(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: Vec<f64>,
    step: f64,
    max_evals: usize,
) -> SearchResult {
    let mut c = Counted {
        f,
        evals: 0,
        max_evals: max_evals.max(1),
    };
    let mut base = x0;
    let mut fbase = c.eval(&base);
    let mut step = step;

    while !c.exhausted() && step > MIN_STEP {
        let (x, fx) = c.explore(&base, fbase, step);
        if fx > fbase {
            // keep jumping along the improving direction while it pays off
            let mut prev = std::mem::replace(&mut base, x);
            fbase = fx;
            while !c.exhausted() {
                let jump: Vec<f64> = base.iter().zip(&prev).map(|(b, p)| 2.0 * b - p).collect();
                let fj = c.eval(&jump);
                let (y, fy) = c.explore(&jump, fj, step);
                if fy > fbase {
                    prev = std::mem::replace(&mut base, y);
                    fbase = fy;
                } else {
                    break;
                }
            }
        } else {
            step *= 0.5;
        }
    }
    SearchResult {
        x: base,
        value: fbase,
        evals: c.evals,
    }
}

/// SplitMix64 finalizer.
pub fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for an independent stream identified by `(master, a, b)`.
pub fn split_seed(master: u64, a: u64, b: u64) -> u64 {
    splitmix(splitmix(splitmix(master) ^ a) ^ b.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn rng_for(master: u64, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(split_seed(master, a, b))
}

const PRIMES: [u64; 64] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293, 307,
    311,
];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Point `index` of the Halton sequence in `[0, 1)^dim`. Dimensions past the
/// prime table reuse it with a scrambled index.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|k| {
            let base = PRIMES[k % PRIMES.len()];
            let i = if k < PRIMES.len() {
                index
            } else {
                splitmix(index ^ k as u64) >> 40
            };
            radical_inverse(i, base)
        })
        .collect()
}

/// Even restarts come from a Halton grid on `[-scale, scale]^dim`, odd ones
/// from seeded Gaussian draws with standard deviation `scale`.
pub fn start_point(dim: usize, restart: usize, scale: f64, rng: &mut impl Rng) -> Vec<f64> {
    if restart.is_multiple_of(2) {
        halton(restart as u64 / 2 + 1, dim)
            .into_iter()
            .map(|u| scale * (2.0 * u - 1.0))
            .collect()
    } else {
        (0..dim)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }
}
