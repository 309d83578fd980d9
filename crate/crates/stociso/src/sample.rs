//! Seeded random sampling: Haar unitaries, Haar pure states, orthonormal
//! probe pairs.
//!
//! All randomness flows through ChaCha12 streams keyed by an explicit `u64`
//! seed, so every probe sequence is reproducible. Haar unitaries come from QR
//! of a complex Gaussian matrix with the diagonal of R phase-normalized
//! (positive), which makes the Q factor Haar distributed.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::linops::{C64, ComplexMat, HermOp, Projector, normalized, orthonormalize, vec_norm};

/// Independent deterministic RNG for a (seed, stream) pair. Distinct streams
/// let pipeline stages consume probes independently of each other.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian_vector(rng: &mut ChaCha12Rng, dim: usize) -> Vec<C64> {
    (0..dim)
        .map(|_| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

/// Haar-random pure state vector on C^dim.
pub fn haar_state(rng: &mut ChaCha12Rng, dim: usize) -> Vec<C64> {
    loop {
        let g = gaussian_vector(rng, dim);
        if vec_norm(&g) > 1e-6 {
            return normalized(&g);
        }
    }
}

/// Haar-random orthonormal pair (dim ≥ 2).
pub fn haar_orthonormal_pair(rng: &mut ChaCha12Rng, dim: usize) -> (Vec<C64>, Vec<C64>) {
    assert!(dim >= 2);
    loop {
        let g1 = gaussian_vector(rng, dim);
        let g2 = gaussian_vector(rng, dim);
        let basis = orthonormalize(&[g1, g2]);
        if basis.len() == 2 {
            let mut it = basis.into_iter();
            return (it.next().unwrap(), it.next().unwrap());
        }
    }
}

/// Haar-random dim×dim unitary.
pub fn haar_unitary(rng: &mut ChaCha12Rng, dim: usize) -> ComplexMat {
    loop {
        let cols: Vec<Vec<C64>> = (0..dim).map(|_| gaussian_vector(rng, dim)).collect();
        let q = orthonormalize(&cols);
        if q.len() < dim {
            continue;
        }
        // MGS normalizes against positive residual norms, so R already has a
        // positive diagonal and Q is Haar as it stands.
        return ComplexMat::from_columns(&q);
    }
}

/// Rank-one projector P_φ = |φ⟩⟨φ| as a Hermitian state.
pub fn pure_state(phi: &[C64]) -> HermOp {
    Projector::from_vector(phi).op().clone()
}

/// Matrix with iid complex Gaussian entries.
pub fn gaussian_matrix(rng: &mut ChaCha12Rng, rows: usize, cols: usize) -> ComplexMat {
    ComplexMat::from_fn(rows, cols, |_, _| {
        Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Deterministic random Hermitian operator with complex Gaussian entries,
/// symmetrized.
pub fn seeded_hermitian(dim: usize, seed: u64) -> HermOp {
    let mut rng = stream_rng(seed, 0xA11CE);
    let raw = ComplexMat::from_fn(dim, dim, |_, _| {
        Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    HermOp::hermitian_part(&raw)
}

/// Deterministic random positive semidefinite operator G*G/dim.
pub fn seeded_psd(dim: usize, seed: u64) -> HermOp {
    let mut rng = stream_rng(seed, 0xB0B);
    let g = ComplexMat::from_fn(dim, dim, |_, _| {
        Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    HermOp::hermitian_part(&g.adjoint().mul(&g)).scaled(1.0 / dim as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::inner;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<C64> = haar_state(&mut stream_rng(7, 0), 4);
        let b: Vec<C64> = haar_state(&mut stream_rng(7, 0), 4);
        let c: Vec<C64> = haar_state(&mut stream_rng(7, 1), 4);
        assert_eq!(a, b);
        assert!(a.iter().zip(&c).any(|(x, y)| (x - y).norm() > 1e-9));
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let u = haar_unitary(&mut stream_rng(3, 0), 5);
        assert!(u.isometry_defect() < 1e-12);
        assert!(u.mul(&u.adjoint()).sub(&ComplexMat::identity(5)).max_norm() < 1e-12);
    }

    #[test]
    fn orthonormal_pair_is_orthonormal() {
        let (phi, psi) = haar_orthonormal_pair(&mut stream_rng(11, 2), 3);
        assert!((vec_norm(&phi) - 1.0).abs() < 1e-12);
        assert!((vec_norm(&psi) - 1.0).abs() < 1e-12);
        assert!(inner(&phi, &psi).norm() < 1e-12);
    }
}
