//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation zeroes one off-diagonal pair (p, q) with a complex Givens
//! rotation; sweeps run over all pairs in row-cyclic order. Convergence is
//! declared when the off-diagonal Frobenius norm falls below 1e-12 of the
//! input Frobenius norm. Accuracy over speed: fine for desk dimensions.

use num_complex::Complex;

use super::ComplexMat;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const REL_TOL: f64 = 1e-12;

pub(super) fn jacobi_eig(a: &ComplexMat) -> Result<(Vec<f64>, ComplexMat)> {
    assert!(a.is_square());
    let d = a.rows();
    if d == 1 {
        return Ok((vec![a[(0, 0)].re], ComplexMat::identity(1)));
    }

    let mut m = a.clone();
    let mut v = ComplexMat::identity(d);
    let target = REL_TOL * a.frobenius_norm();

    let mut off = off_diagonal_norm(&m);
    if off <= target {
        return Ok((diagonal(&m), v));
    }

    for _ in 0..MAX_SWEEPS {
        for p in 0..d - 1 {
            for q in p + 1..d {
                rotate(&mut m, &mut v, p, q);
            }
        }
        off = off_diagonal_norm(&m);
        if off <= target {
            return Ok((diagonal(&m), v));
        }
    }

    Err(Error::NoConvergence {
        off_diag: off,
        sweeps: MAX_SWEEPS,
    })
}

fn diagonal(m: &ComplexMat) -> Vec<f64> {
    (0..m.rows()).map(|i| m[(i, i)].re).collect()
}

fn off_diagonal_norm(m: &ComplexMat) -> f64 {
    let d = m.rows();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                acc += m[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// One complex Givens rotation annihilating m[p][q] (and m[q][p]).
fn rotate(m: &mut ComplexMat, v: &mut ComplexMat, p: usize, q: usize) {
    let apq = m[(p, q)];
    let abs_apq = apq.norm();
    if abs_apq == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;

    // tangent of the rotation angle: smaller root of t² + 2τt − 1 = 0
    let tau = (app - aqq) / (2.0 * abs_apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let omega = apq / abs_apq;

    let d = m.rows();
    // row update: rows p, q of U* M
    for j in 0..d {
        let mp = m[(p, j)];
        let mq = m[(q, j)];
        m[(p, j)] = Complex::new(c, 0.0) * mp + Complex::new(s, 0.0) * omega * mq;
        m[(q, j)] = -Complex::new(s, 0.0) * omega.conj() * mp + Complex::new(c, 0.0) * mq;
    }
    // column update: columns p, q of (U* M) U
    for i in 0..d {
        let mp = m[(i, p)];
        let mq = m[(i, q)];
        m[(i, p)] = Complex::new(c, 0.0) * mp + Complex::new(s, 0.0) * omega.conj() * mq;
        m[(i, q)] = -Complex::new(s, 0.0) * omega * mp + Complex::new(c, 0.0) * mq;
    }
    // closed forms on the 2×2 block keep it exactly Hermitian
    let app_new = c * c * app + 2.0 * c * s * abs_apq + s * s * aqq;
    let aqq_new = s * s * app - 2.0 * c * s * abs_apq + c * c * aqq;
    m[(p, p)] = Complex::new(app_new, 0.0);
    m[(q, q)] = Complex::new(aqq_new, 0.0);
    m[(p, q)] = Complex::new(0.0, 0.0);
    m[(q, p)] = Complex::new(0.0, 0.0);

    // accumulate eigenvectors: V ← V U
    for i in 0..d {
        let vp = v[(i, p)];
        let vq = v[(i, q)];
        v[(i, p)] = Complex::new(c, 0.0) * vp + Complex::new(s, 0.0) * omega.conj() * vq;
        v[(i, q)] = -Complex::new(s, 0.0) * omega * vp + Complex::new(c, 0.0) * vq;
    }
}
