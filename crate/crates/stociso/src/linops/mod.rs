//! Dense complex matrix kernel.
//!
//! Everything downstream works with small dense matrices over `Complex<f64>`:
//! Hermitian eigendecomposition (cyclic Jacobi), trace norm, positive/negative
//! parts, support projections and subspace joins. Dimensions are desk scale
//! (≤ 64); no blocking or sparsity.

mod jacobi;

use num_complex::Complex;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Global rank threshold: eigenvalues and singular values with magnitude below
/// `1e-9 * scale` (floored at 1e-12) count as zero. One convention everywhere
/// keeps ranks consistent across pipeline stages.
pub fn rank_threshold(scale: f64) -> f64 {
    (1e-9 * scale).max(1e-12)
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from column vectors (all of the same length).
    pub fn from_columns(cols: &[Vec<C64>]) -> Self {
        assert!(!cols.is_empty(), "from_columns needs at least one column");
        let rows = cols[0].len();
        assert!(cols.iter().all(|c| c.len() == rows));
        Self::from_fn(rows, cols.len(), |i, j| cols[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conjugate(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)].conj())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x += *y;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x -= *y;
        }
        out
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        for x in out.data.iter_mut() {
            *x *= factor;
        }
        out
    }

    pub fn scaled_re(&self, factor: f64) -> Self {
        self.scaled(C64::new(factor, 0.0))
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry magnitude.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// ‖A − A*‖_max.
    pub fn hermitian_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut defect = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                defect = defect.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        defect
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for p in 0..other.rows {
                    for q in 0..other.cols {
                        out[(i * other.rows + p, j * other.cols + q)] = a * other[(p, q)];
                    }
                }
            }
        }
        out
    }

    /// ‖v*v − I‖_max, the deviation of the columns from orthonormality.
    pub fn isometry_defect(&self) -> f64 {
        let gram = self.adjoint().mul(self);
        gram.sub(&ComplexMat::identity(self.cols)).max_norm()
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Serialized as nested rows of `[re, im]` pairs.
impl Serialize for ComplexMat {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| [self[(i, j)].re, self[(i, j)].im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        if rows.is_empty() || rows[0].is_empty() {
            return Err(D::Error::custom("matrix must be non-empty"));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(ComplexMat::from_fn(rows.len(), cols, |i, j| {
            C64::new(rows[i][j][0], rows[i][j][1])
        }))
    }
}

/// Inner product ⟨u|v⟩, conjugate linear in the first argument.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalized(v: &[C64]) -> Vec<C64> {
    let n = vec_norm(v);
    assert!(n > 0.0, "cannot normalize the zero vector");
    v.iter().map(|z| z / n).collect()
}

/// Modified Gram-Schmidt with rank detection. Columns whose residual drops
/// below `rank_threshold` of their original norm are dropped.
pub fn orthonormalize(vectors: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for v in vectors {
        let scale = vec_norm(v);
        if scale <= rank_threshold(1.0) {
            continue;
        }
        let mut w = v.clone();
        // two MGS passes keep orthogonality near machine precision
        for _ in 0..2 {
            for b in &basis {
                let c = inner(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let residual = vec_norm(&w);
        if residual > rank_threshold(scale) {
            basis.push(w.iter().map(|z| z / residual).collect());
        }
    }
    basis
}

/// A d×d complex Hermitian matrix, symmetrized on construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HermOp {
    mat: ComplexMat,
}

impl HermOp {
    /// Validating constructor: rejects matrices with Hermitian defect above
    /// 1e-12, then symmetrizes.
    pub fn new(mat: ComplexMat) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimMismatch {
                expected: mat.rows(),
                got: mat.cols(),
            });
        }
        if !mat.is_finite() {
            return Err(Error::InvalidState {
                detail: "non-finite entries".into(),
            });
        }
        let defect = mat.hermitian_defect();
        if defect > 1e-12 {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self::hermitian_part(&mat))
    }

    /// (A + A*)/2 without a defect check, for operators that are Hermitian by
    /// construction (projector products, basis reconstructions, ...).
    pub fn hermitian_part(mat: &ComplexMat) -> Self {
        assert!(mat.is_square());
        let adj = mat.adjoint();
        Self {
            mat: mat.add(&adj).scaled_re(0.5),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            mat: ComplexMat::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: ComplexMat::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn mat(&self) -> &ComplexMat {
        &self.mat
    }

    pub fn into_mat(self) -> ComplexMat {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// Hilbert-Schmidt inner product `tr[AB]`; real for Hermitian A, B.
    pub fn hs_inner(&self, other: &HermOp) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                acc += self.mat[(i, j)] * other.mat[(j, i)];
            }
        }
        acc.re
    }

    pub fn add(&self, other: &HermOp) -> HermOp {
        HermOp {
            mat: self.mat.add(&other.mat),
        }
    }

    pub fn sub(&self, other: &HermOp) -> HermOp {
        HermOp {
            mat: self.mat.sub(&other.mat),
        }
    }

    pub fn scaled(&self, factor: f64) -> HermOp {
        HermOp {
            mat: self.mat.scaled_re(factor),
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.mat.max_norm()
    }

    /// B* A B for a (not necessarily square) frame B; Hermitian again.
    pub fn conjugate_by(&self, b: &ComplexMat) -> HermOp {
        assert_eq!(b.rows(), self.dim());
        HermOp::hermitian_part(&b.adjoint().mul(&self.mat).mul(b))
    }
}

/// Spectral decomposition of a Hermitian operator: eigenvalues in descending
/// order, orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    values: Vec<f64>,
    vectors: ComplexMat,
}

impl EigenSystem {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &ComplexMat {
        &self.vectors
    }

    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// V Λ V*.
    pub fn reconstruct(&self) -> ComplexMat {
        let d = self.values.len();
        let mut lambda = ComplexMat::zeros(d, d);
        for i in 0..d {
            lambda[(i, i)] = C64::new(self.values[i], 0.0);
        }
        self.vectors.mul(&lambda).mul(&self.vectors.adjoint())
    }

    /// Projector onto the span of eigenvectors selected by index.
    pub fn eigenspace_projector(&self, indices: &[usize]) -> Projector {
        let cols: Vec<Vec<C64>> = indices.iter().map(|&k| self.eigenvector(k)).collect();
        Projector::from_orthonormal_columns(&ComplexMat::from_columns(&cols))
    }
}

/// Hermitian eigendecomposition via cyclic Jacobi with complex rotations.
///
/// Converges when the off-diagonal Frobenius norm drops below 1e-12 of the
/// input Frobenius norm; fails with `NoConvergence` after 100 sweeps.
pub fn herm_eig(a: &HermOp) -> Result<EigenSystem> {
    let (mut values, mut vectors) = jacobi::jacobi_eig(a.mat())?;
    sort_descending(&mut values, &mut vectors);
    reorthonormalize_clusters(&values, &mut vectors);
    canonical_phases(&mut vectors);
    Ok(EigenSystem { values, vectors })
}

fn sort_descending(values: &mut [f64], vectors: &mut ComplexMat) {
    let d = values.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap().then(i.cmp(&j)));
    let sorted_vals: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    let sorted_vecs = ComplexMat::from_fn(d, d, |i, j| vectors[(i, order[j])]);
    values.copy_from_slice(&sorted_vals);
    *vectors = sorted_vecs;
}

/// Vectors inside a numerically degenerate cluster are re-orthonormalized as
/// a block; individual vectors are not canonical, only the spanned subspace.
fn reorthonormalize_clusters(values: &[f64], vectors: &mut ComplexMat) {
    let d = values.len();
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tol = rank_threshold(scale);
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && (values[end - 1] - values[end]).abs() <= tol {
            end += 1;
        }
        if end - start > 1 {
            let cols: Vec<Vec<C64>> = (start..end).map(|k| vectors.column(k)).collect();
            let ortho = orthonormalize(&cols);
            debug_assert_eq!(ortho.len(), end - start);
            for (offset, col) in ortho.iter().enumerate() {
                for i in 0..d {
                    vectors[(i, start + offset)] = col[i];
                }
            }
        }
        start = end;
    }
}

/// Fix each eigenvector's global phase: first significant component real
/// positive.
fn canonical_phases(vectors: &mut ComplexMat) {
    let d = vectors.rows();
    for j in 0..vectors.cols() {
        let col = vectors.column(j);
        let vmax = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if vmax == 0.0 {
            continue;
        }
        let lead = col.iter().find(|z| z.norm() >= 1e-8 * vmax).unwrap();
        let phase = lead.conj() / lead.norm();
        for i in 0..d {
            vectors[(i, j)] *= phase;
        }
    }
}

/// Trace norm ‖A‖₁ = Σ|λᵢ|. Equals `tr[A]` exactly when A is positive
/// semidefinite.
pub fn trace_norm(a: &HermOp) -> Result<f64> {
    let eig = herm_eig(a)?;
    Ok(eig.values().iter().map(|v| v.abs()).sum())
}

/// Decomposition A = P − N into positive and negative parts with orthogonal
/// ranges.
pub fn pos_neg_parts(a: &HermOp) -> Result<(HermOp, HermOp)> {
    let d = a.dim();
    let eig = herm_eig(a)?;
    let mut pos = ComplexMat::zeros(d, d);
    let mut neg = ComplexMat::zeros(d, d);
    for (k, &lambda) in eig.values().iter().enumerate() {
        if lambda == 0.0 {
            continue;
        }
        let v = eig.eigenvector(k);
        let target = if lambda > 0.0 { &mut pos } else { &mut neg };
        let w = lambda.abs();
        for i in 0..d {
            for j in 0..d {
                (*target)[(i, j)] += C64::new(w, 0.0) * v[i] * v[j].conj();
            }
        }
    }
    Ok((HermOp::hermitian_part(&pos), HermOp::hermitian_part(&neg)))
}

/// Orthogonal projection with its rank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Projector {
    base: HermOp,
    rank: usize,
}

impl Projector {
    /// Validating constructor: ‖P² − P‖_max ≤ 1e-9 and trace within 1e-6 of
    /// an integer.
    pub fn new(base: HermOp) -> Result<Self> {
        let sq = base.mat().mul(base.mat());
        let defect = sq.sub(base.mat()).max_norm();
        if defect > 1e-9 {
            return Err(Error::NotProjector { defect });
        }
        let eig = herm_eig(&base)?;
        let spectral_defect = eig
            .values()
            .iter()
            .map(|&v| (v - if v > 0.5 { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        if spectral_defect > 1e-9 {
            return Err(Error::NotProjector {
                defect: spectral_defect,
            });
        }
        let trace = base.trace();
        let rank = trace.round();
        if (trace - rank).abs() > 1e-6 || rank < 0.0 {
            return Err(Error::NotProjector {
                defect: (trace - rank).abs(),
            });
        }
        Ok(Self {
            base,
            rank: rank as usize,
        })
    }

    /// Exact construction B B* from orthonormal columns.
    pub fn from_orthonormal_columns(basis: &ComplexMat) -> Self {
        debug_assert!(basis.isometry_defect() < 1e-8);
        let mat = basis.mul(&basis.adjoint());
        Self {
            base: HermOp::hermitian_part(&mat),
            rank: basis.cols(),
        }
    }

    /// Rank-one projector onto the ray of a (nonzero) vector.
    pub fn from_vector(v: &[C64]) -> Self {
        let u = normalized(v);
        Self::from_orthonormal_columns(&ComplexMat::from_columns(&[u]))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            base: HermOp::identity(dim),
            rank: dim,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            base: HermOp::zero(dim),
            rank: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn op(&self) -> &HermOp {
        &self.base
    }

    pub fn mat(&self) -> &ComplexMat {
        self.base.mat()
    }

    pub fn complement(&self) -> Projector {
        Projector {
            base: HermOp::identity(self.dim()).sub(&self.base),
            rank: self.dim() - self.rank,
        }
    }

    /// Orthonormal basis of the range (the top-`rank` eigenvectors).
    pub fn range_basis(&self) -> Result<ComplexMat> {
        if self.rank == 0 {
            return Err(Error::InvalidState {
                detail: "zero projector has no range basis".into(),
            });
        }
        let eig = herm_eig(&self.base)?;
        let cols: Vec<Vec<C64>> = (0..self.rank).map(|k| eig.eigenvector(k)).collect();
        Ok(ComplexMat::from_columns(&cols))
    }

    pub fn apply_vec(&self, v: &[C64]) -> Vec<C64> {
        self.base.mat().matvec(v)
    }
}

/// Projector onto the range of a positive semidefinite operator: the smallest
/// projection P with P·A = A.
pub fn support_proj(a: &HermOp) -> Result<Projector> {
    let eig = herm_eig(a)?;
    let min = eig.values().last().copied().unwrap_or(0.0);
    if min < -1e-9 {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }
    let scale = eig.values().first().map(|v| v.abs()).unwrap_or(0.0);
    let tol = rank_threshold(scale);
    let kept: Vec<usize> = (0..eig.values().len())
        .filter(|&k| eig.values()[k] > tol)
        .collect();
    if kept.is_empty() {
        return Ok(Projector::zero(a.dim()));
    }
    Ok(eig.eigenspace_projector(&kept))
}

/// Supremum ⋁ of a family of projections: the projector onto the span of the
/// union of their ranges.
pub fn subspace_join(ps: &[Projector]) -> Result<Projector> {
    assert!(!ps.is_empty(), "subspace_join needs at least one projector");
    let dim = ps[0].dim();
    assert!(ps.iter().all(|p| p.dim() == dim));
    let mut sum = HermOp::zero(dim);
    for p in ps {
        sum = sum.add(p.op());
    }
    // the support of Σ Pᵢ is exactly the join of the ranges
    support_proj(&sum)
}
