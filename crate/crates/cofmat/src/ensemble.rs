//! Seeded random test ensembles.
//!
//! ChaCha8 keyed by an explicit seed so verification suites are reproducible
//! across runs and platforms.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{ColVec, Mat};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.gen_range(-scale..=scale))
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> ColVec {
    ColVec::from_fn(n, |_, _| rng.gen_range(-scale..=scale))
}

/// Random orthogonal matrix via QR of a square random matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    loop {
        let m = random_matrix(rng, n, n, 1.0);
        let qr = m.qr();
        let q = qr.q();
        // Degenerate draws are all but impossible, but stay safe.
        if q.iter().all(|x| x.is_finite()) {
            return q;
        }
    }
}

/// Random symmetric positive definite matrix with eigenvalues in `[lo, hi]`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Mat {
    let q = random_orthogonal(rng, n);
    let d = Mat::from_diagonal(&ColVec::from_fn(n, |_, _| rng.gen_range(lo..=hi)));
    let m = &q * d * q.transpose();
    // Symmetrize away the roundoff so symmetry checks at 1e-12 pass.
    (&m + m.transpose()) * 0.5
}

/// Random symmetric negative definite matrix with eigenvalues in `[-hi, -lo]`.
pub fn random_snd(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Mat {
    -random_spd(rng, n, lo, hi)
}
