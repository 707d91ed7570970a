//! Reproducible random streams and Haar-random states.
//!
//! Every unit of work (a Monte Carlo trial, a counterexample attempt) draws
//! from its own ChaCha8 substream: the key is derived from the user seed and
//! the stream id is the work index. Results therefore do not depend on how
//! work is scheduled across threads.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::linalg::{orthonormalize, Ket, Vector};

/// Independent generator for work item `index` under `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian_vector<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Vector> {
    let components = (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect();
    Vector::new(components)
}

/// Haar-distributed pure state.
pub fn random_ket<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Ket> {
    loop {
        let v = gaussian_vector(dim, rng)?;
        if v.norm() > 0.0 {
            return v.normalize(0.0);
        }
    }
}

/// Orthonormal basis from Gram-Schmidt on a complex Gaussian matrix.
pub fn random_basis<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Vec<Ket>> {
    loop {
        let columns = (0..dim)
            .map(|_| gaussian_vector(dim, rng))
            .collect::<Result<Vec<_>>>()?;
        // Rank-deficient draws have probability zero; redraw if one shows up.
        if let Ok(basis) = orthonormalize(&columns) {
            return Ok(basis);
        }
    }
}
