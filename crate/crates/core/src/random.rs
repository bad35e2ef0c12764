//! Seeded random states, bases and projectors.
//!
//! Every sampler takes an explicit generator; streams are derived from a
//! `(seed, index)` pair so parallel work is reproducible regardless of how it
//! is scheduled.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{orthonormalize, Projector};

/// Generator for sub-stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Vector with i.i.d. standard complex Gaussian entries (Haar direction after normalization).
pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<Complex64> {
    (0..dim)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        })
        .collect()
}

/// Haar-random unit vector.
pub fn haar_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<Complex64> {
    loop {
        let v = gaussian_vector(rng, dim);
        let n = crate::linalg::norm(&v);
        if n > 1e-8 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Haar-random orthonormal basis (columns of a Haar unitary).
pub fn haar_basis<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<Vec<Complex64>> {
    loop {
        let vs: Vec<_> = (0..dim).map(|_| gaussian_vector(rng, dim)).collect();
        if let Ok(b) = orthonormalize(&vs, 1e-8) {
            return b;
        }
    }
}

/// Haar-random projector of the given rank.
pub fn haar_projector<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Projector {
    if rank == 0 {
        return Projector::zero(dim);
    }
    let basis = haar_basis(rng, dim);
    Projector::from_vectors(&basis[..rank], 1e-12).expect("orthonormal basis vectors are independent")
}

/// Random partition of `0..n` into `parts` non-empty groups (requires `1 <= parts <= n`).
pub fn random_partition<R: Rng + ?Sized>(rng: &mut R, n: usize, parts: usize) -> Vec<Vec<usize>> {
    assert!(parts >= 1 && parts <= n);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut groups: Vec<Vec<usize>> = order[..parts].iter().map(|&i| vec![i]).collect();
    for &i in &order[parts..] {
        let g = rng.random_range(0..parts);
        groups[g].push(i);
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort();
    groups
}
