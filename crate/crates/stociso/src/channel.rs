//! Superoperator representation of stochastic maps.
//!
//! Channels are stored as real D̃×D matrices over Hilbert-Schmidt-orthonormal
//! Hermitian bases (D = d_in², D̃ = d_out²). The real coordinatization makes
//! antiunitary components first class (they are real linear but not complex
//! linear on trace class) and turns the dual map into a plain transpose.
//!
//! Canonical basis order for dimension d: the diagonal units E_ii first, then
//! for each index pair (i, j), i < j in lexicographic order, the symmetric
//! element (E_ij + E_ji)/√2 followed by the antisymmetric element
//! (−i·E_ij + i·E_ji)/√2. The channel matrix entry `[a][b]` is `tr[B̃_a T(B_b)]`.
//! This ordering is normative for every serialized matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{C64, ComplexMat, HermOp, Projector};
use crate::sample::{haar_unitary, stream_rng};

/// Orthonormal Hermitian basis of the d×d operators in canonical order.
#[derive(Debug, Clone)]
pub struct HermBasis {
    dim: usize,
    elements: Vec<HermOp>,
}

impl HermBasis {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1);
        let sqrt_half = 0.5f64.sqrt();
        let mut elements = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            let mut m = ComplexMat::zeros(dim, dim);
            m[(i, i)] = C64::new(1.0, 0.0);
            elements.push(HermOp::hermitian_part(&m));
        }
        for i in 0..dim {
            for j in i + 1..dim {
                let mut sym = ComplexMat::zeros(dim, dim);
                sym[(i, j)] = C64::new(sqrt_half, 0.0);
                sym[(j, i)] = C64::new(sqrt_half, 0.0);
                elements.push(HermOp::hermitian_part(&sym));
                let mut asym = ComplexMat::zeros(dim, dim);
                asym[(i, j)] = C64::new(0.0, -sqrt_half);
                asym[(j, i)] = C64::new(0.0, sqrt_half);
                elements.push(HermOp::hermitian_part(&asym));
            }
        }
        Self { dim, elements }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of basis elements, d².
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn element(&self, k: usize) -> &HermOp {
        &self.elements[k]
    }

    pub fn elements(&self) -> &[HermOp] {
        &self.elements
    }

    /// Coordinates of a Hermitian operator: x_a = tr[B_a ρ].
    pub fn coords(&self, rho: &HermOp) -> Vec<f64> {
        assert_eq!(rho.dim(), self.dim);
        let m = rho.mat();
        let sqrt2 = 2.0f64.sqrt();
        let mut x = Vec::with_capacity(self.len());
        for i in 0..self.dim {
            x.push(m[(i, i)].re);
        }
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                x.push(sqrt2 * m[(i, j)].re);
                x.push(-sqrt2 * m[(i, j)].im);
            }
        }
        x
    }

    /// Reconstruct ρ = Σ_a x_a B_a.
    pub fn from_coords(&self, x: &[f64]) -> HermOp {
        assert_eq!(x.len(), self.len());
        let inv_sqrt2 = 0.5f64.sqrt();
        let mut m = ComplexMat::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            m[(i, i)] = C64::new(x[i], 0.0);
        }
        let mut k = self.dim;
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                let entry = C64::new(x[k] * inv_sqrt2, -x[k + 1] * inv_sqrt2);
                m[(i, j)] = entry;
                m[(j, i)] = entry.conj();
                k += 2;
            }
        }
        HermOp::hermitian_part(&m)
    }
}

/// Real-linear superoperator T: V → Ṽ in coordinates, row-major D̃×D with
/// entry `[a][b] = tr[B̃_a T(B_b)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMatrix {
    dim_in: usize,
    dim_out: usize,
    mat: Vec<f64>,
}

impl ChannelMatrix {
    pub fn from_rows(dim_in: usize, dim_out: usize, mat: Vec<f64>) -> Result<Self> {
        let (d_in, d_out) = (dim_in * dim_in, dim_out * dim_out);
        if mat.len() != d_in * d_out {
            return Err(Error::DimMismatch {
                expected: d_in * d_out,
                got: mat.len(),
            });
        }
        if !mat.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidState {
                detail: "non-finite channel matrix entries".into(),
            });
        }
        Ok(Self { dim_in, dim_out, mat })
    }

    /// Build the coordinate matrix of an arbitrary real-linear action on
    /// Hermitian operators by applying it to every basis element.
    pub fn from_action(dim_in: usize, dim_out: usize, action: impl Fn(&HermOp) -> HermOp) -> Self {
        let basis_in = HermBasis::new(dim_in);
        let basis_out = HermBasis::new(dim_out);
        let (d_in, d_out) = (basis_in.len(), basis_out.len());
        let mut mat = vec![0.0; d_out * d_in];
        for b in 0..d_in {
            let image = action(basis_in.element(b));
            assert_eq!(image.dim(), dim_out, "action output dimension mismatch");
            let col = basis_out.coords(&image);
            for a in 0..d_out {
                mat[a * d_in + b] = col[a];
            }
        }
        Self { dim_in, dim_out, mat }
    }

    pub fn identity(dim: usize) -> Self {
        let d = dim * dim;
        let mut mat = vec![0.0; d * d];
        for a in 0..d {
            mat[a * d + a] = 1.0;
        }
        Self {
            dim_in: dim,
            dim_out: dim,
            mat,
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn entry(&self, a: usize, b: usize) -> f64 {
        self.mat[a * self.dim_in * self.dim_in + b]
    }

    pub fn mat(&self) -> &[f64] {
        &self.mat
    }

    pub fn apply(&self, rho: &HermOp) -> Result<HermOp> {
        if rho.dim() != self.dim_in {
            return Err(Error::DimMismatch {
                expected: self.dim_in,
                got: rho.dim(),
            });
        }
        let basis_in = HermBasis::new(self.dim_in);
        let basis_out = HermBasis::new(self.dim_out);
        let x = basis_in.coords(rho);
        let (rows, cols) = (basis_out.len(), basis_in.len());
        let mut y = vec![0.0; rows];
        for a in 0..rows {
            let row = &self.mat[a * cols..(a + 1) * cols];
            y[a] = row.iter().zip(&x).map(|(m, v)| m * v).sum();
        }
        Ok(basis_out.from_coords(&y))
    }

    /// Complex-linear extension T̂ applied to an arbitrary matrix:
    /// T̂(A) = T(A₁) + i·T(A₂) with A₁ = (A+A*)/2, A₂ = (A−A*)/(2i).
    pub fn apply_complex(&self, a: &ComplexMat) -> Result<ComplexMat> {
        if a.rows() != self.dim_in || a.cols() != self.dim_in {
            return Err(Error::DimMismatch {
                expected: self.dim_in,
                got: a.rows(),
            });
        }
        let adj = a.adjoint();
        let herm = HermOp::hermitian_part(a);
        let skew = HermOp::hermitian_part(&a.sub(&adj).scaled(C64::new(0.0, -0.5)));
        let t1 = self.apply(&herm)?;
        let t2 = self.apply(&skew)?;
        Ok(t1.mat().add(&t2.mat().scaled(C64::new(0.0, 1.0))))
    }

    /// Dual map T*: a plain transpose in HS-orthonormal coordinates.
    pub fn dual(&self) -> ChannelMatrix {
        let (rows, cols) = (self.dim_out * self.dim_out, self.dim_in * self.dim_in);
        let mut mat = vec![0.0; rows * cols];
        for a in 0..rows {
            for b in 0..cols {
                mat[b * rows + a] = self.mat[a * cols + b];
            }
        }
        ChannelMatrix {
            dim_in: self.dim_out,
            dim_out: self.dim_in,
            mat,
        }
    }

    /// Choi matrix Σ_ij T̂(E_ij) ⊗ E_ij of the complex-linear extension;
    /// positive semidefinite exactly when the map is completely positive.
    pub fn choi(&self) -> Result<HermOp> {
        let d = self.dim_in;
        let dt = self.dim_out;
        let mut c = ComplexMat::zeros(dt * d, dt * d);
        for i in 0..d {
            for j in 0..d {
                let mut unit = ComplexMat::zeros(d, d);
                unit[(i, j)] = C64::new(1.0, 0.0);
                let image = self.apply_complex(&unit)?;
                let mut unit_block = ComplexMat::zeros(d, d);
                unit_block[(i, j)] = C64::new(1.0, 0.0);
                c = c.add(&image.kron(&unit_block));
            }
        }
        Ok(HermOp::hermitian_part(&c))
    }

    pub fn scaled(&self, factor: f64) -> ChannelMatrix {
        ChannelMatrix {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            mat: self.mat.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn max_diff(&self, other: &ChannelMatrix) -> f64 {
        assert_eq!(self.dim_in, other.dim_in);
        assert_eq!(self.dim_out, other.dim_out);
        self.mat
            .iter()
            .zip(&other.mat)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

/// Composition second ∘ first: a matrix product in coordinates.
pub fn compose(second: &ChannelMatrix, first: &ChannelMatrix) -> Result<ChannelMatrix> {
    if first.dim_out != second.dim_in {
        return Err(Error::DimMismatch {
            expected: second.dim_in,
            got: first.dim_out,
        });
    }
    let rows = second.dim_out * second.dim_out;
    let mid = second.dim_in * second.dim_in;
    let cols = first.dim_in * first.dim_in;
    let mut mat = vec![0.0; rows * cols];
    for a in 0..rows {
        for k in 0..mid {
            let s = second.mat[a * mid + k];
            if s == 0.0 {
                continue;
            }
            for b in 0..cols {
                mat[a * cols + b] += s * first.mat[k * cols + b];
            }
        }
    }
    Ok(ChannelMatrix {
        dim_in: first.dim_in,
        dim_out: second.dim_out,
        mat,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Unitary,
    Antiunitary,
}

impl ComponentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ComponentKind::Unitary => "unitary",
            ComponentKind::Antiunitary => "antiunitary",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "unitary" | "u" => Ok(ComponentKind::Unitary),
            "antiunitary" | "a" => Ok(ComponentKind::Antiunitary),
            other => Err(Error::Parse(format!("unknown component kind `{other}`"))),
        }
    }
}

/// One pure isometry U: H → H̃ in canonical form. A unitary component acts as
/// ρ ↦ vρv*; an antiunitary component as ρ ↦ vρᵀv*, with the conjugation
/// fixed to the standard basis.
#[derive(Debug, Clone, PartialEq)]
pub struct IsometryComponent {
    kind: ComponentKind,
    v: ComplexMat,
}

impl IsometryComponent {
    pub fn new(kind: ComponentKind, v: ComplexMat) -> Result<Self> {
        if v.rows() < v.cols() {
            return Err(Error::DimMismatch {
                expected: v.cols(),
                got: v.rows(),
            });
        }
        let defect = v.isometry_defect();
        if defect > 1e-9 {
            return Err(Error::NotIsometry { defect });
        }
        Ok(Self { kind, v })
    }

    pub fn kind(&self) -> ComponentKind {
        self.kind
    }

    pub fn matrix(&self) -> &ComplexMat {
        &self.v
    }

    pub fn dim_in(&self) -> usize {
        self.v.cols()
    }

    pub fn dim_out(&self) -> usize {
        self.v.rows()
    }

    pub fn apply_state(&self, rho: &HermOp) -> HermOp {
        HermOp::hermitian_part(&self.apply_complex(rho.mat()))
    }

    /// Extension to arbitrary matrices: vτv* (unitary) or vτᵀv* (antiunitary).
    pub fn apply_complex(&self, tau: &ComplexMat) -> ComplexMat {
        let inner = match self.kind {
            ComponentKind::Unitary => tau.clone(),
            ComponentKind::Antiunitary => tau.transpose(),
        };
        self.v.mul(&inner).mul(&self.v.adjoint())
    }

    /// Reversal action on the target space: v*ρv (unitary) or (v*ρv)ᵀ
    /// (antiunitary).
    pub fn reverse_state(&self, rho: &HermOp) -> HermOp {
        let pulled = self.v.adjoint().mul(rho.mat()).mul(&self.v);
        let out = match self.kind {
            ComponentKind::Unitary => pulled,
            ComponentKind::Antiunitary => pulled.transpose(),
        };
        HermOp::hermitian_part(&out)
    }

    /// Projector v v* onto the component's range H̃_k.
    pub fn range_projector(&self) -> Projector {
        Projector::from_orthonormal_columns(&self.v)
    }
}

/// Canonical mixed unitary/antiunitary form T(ρ) = Σ_k w_k U_k ρ U_k* with
/// mutually orthogonal ranges. Validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedIsometryForm {
    dim_in: usize,
    dim_out: usize,
    components: Vec<(f64, IsometryComponent)>,
}

impl MixedIsometryForm {
    pub fn new(
        dim_in: usize,
        dim_out: usize,
        components: Vec<(f64, IsometryComponent)>,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidState {
                detail: "a mixed isometry form needs at least one component".into(),
            });
        }
        for (w, c) in &components {
            if c.dim_in() != dim_in {
                return Err(Error::DimMismatch {
                    expected: dim_in,
                    got: c.dim_in(),
                });
            }
            if c.dim_out() != dim_out {
                return Err(Error::DimMismatch {
                    expected: dim_out,
                    got: c.dim_out(),
                });
            }
            if !(*w > 0.0 && *w <= 1.0 + 1e-10) {
                return Err(Error::WeightsNotNormalized { sum: *w });
            }
        }
        let sum: f64 = components.iter().map(|(w, _)| w).sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::WeightsNotNormalized { sum });
        }
        let mut worst = 0.0f64;
        for (i, (_, ci)) in components.iter().enumerate() {
            for (_, cj) in components.iter().skip(i + 1) {
                let overlap = ci.matrix().adjoint().mul(cj.matrix()).max_norm();
                worst = worst.max(overlap);
            }
        }
        if worst > 1e-9 {
            return Err(Error::RangesNotOrthogonal { defect: worst });
        }
        Ok(Self {
            dim_in,
            dim_out,
            components,
        })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn components(&self) -> &[(f64, IsometryComponent)] {
        &self.components
    }

    /// Direct action Σ_k w_k (component action), bypassing coordinates.
    pub fn apply_state(&self, rho: &HermOp) -> HermOp {
        let mut out = HermOp::zero(self.dim_out);
        for (w, c) in &self.components {
            out = out.add(&c.apply_state(rho).scaled(*w));
        }
        out
    }

    /// Coordinate matrix of the form in the canonical bases.
    pub fn to_channel(&self) -> ChannelMatrix {
        ChannelMatrix::from_action(self.dim_in, self.dim_out, |rho| self.apply_state(rho))
    }

    /// Projector P₀ onto the part of the target space missed by every range.
    pub fn residual_projector(&self) -> Projector {
        let mut cols: Vec<Vec<C64>> = Vec::new();
        for (_, c) in &self.components {
            for j in 0..c.dim_in() {
                cols.push(c.matrix().column(j));
            }
        }
        // re-orthonormalizing the stacked range bases keeps P₀ idempotent to
        // machine precision even when the input sits at the tolerance edge
        let q = ComplexMat::from_columns(&crate::linops::orthonormalize(&cols));
        Projector::from_orthonormal_columns(&q).complement()
    }

    /// The stochastic reversal map S: Ṽ → V with S∘T = id on V.
    ///
    /// A unitary component contributes v*ρv, an antiunitary one (v*ρv)ᵀ. The
    /// mass P₀ρP₀ lives outside every component range and is rerouted to the
    /// maximally mixed state ω = I/d, which keeps S trace preserving with
    /// codomain V; on T(V) that term vanishes, so S inverts T there.
    pub fn reversal(&self) -> ChannelMatrix {
        let p0 = self.residual_projector();
        let d = self.dim_in;
        let omega = HermOp::identity(d).scaled(1.0 / d as f64);
        ChannelMatrix::from_action(self.dim_out, d, |rho| {
            let mut out = HermOp::zero(d);
            for (_, c) in &self.components {
                out = out.add(&c.reverse_state(rho));
            }
            let residual_mass = rho.hs_inner(p0.op());
            out.add(&omega.scaled(residual_mass))
        })
    }

    /// Hilbert-Schmidt lift T̃(τ) = Σ_k √w_k T̂_k(τ), an isometry of the
    /// Frobenius norm.
    pub fn hs_lift(&self, tau: &ComplexMat) -> Result<ComplexMat> {
        if tau.rows() != self.dim_in || tau.cols() != self.dim_in {
            return Err(Error::DimMismatch {
                expected: self.dim_in,
                got: tau.rows(),
            });
        }
        let mut out = ComplexMat::zeros(self.dim_out, self.dim_out);
        for (w, c) in &self.components {
            out = out.add(&c.apply_complex(tau).scaled(C64::new(w.sqrt(), 0.0)));
        }
        Ok(out)
    }

    /// Jordan lift °T(a) = Σ_k T̂_k(a): an isometry of the operator norm that
    /// maps projections to projections.
    pub fn jordan_lift(&self, a: &HermOp) -> Result<HermOp> {
        if a.dim() != self.dim_in {
            return Err(Error::DimMismatch {
                expected: self.dim_in,
                got: a.dim(),
            });
        }
        let mut out = HermOp::zero(self.dim_out);
        for (_, c) in &self.components {
            out = out.add(&c.apply_state(a));
        }
        Ok(out)
    }

    /// Remix an equal-weight, same-kind block of components by a unitary
    /// matrix γ: v'_k = Σ_ℓ γ_kℓ v_ℓ. The channel is unchanged; the component
    /// matrices generally are not.
    pub fn gauge_transform(&self, gamma: &ComplexMat, block: &[usize]) -> Result<MixedIsometryForm> {
        let m = block.len();
        if gamma.rows() != m || gamma.cols() != m {
            return Err(Error::DimMismatch {
                expected: m,
                got: gamma.rows(),
            });
        }
        if m == 0 {
            return Err(Error::BlockNotHomogeneous {
                detail: "empty block".into(),
            });
        }
        let mut seen = vec![false; self.components.len()];
        for &idx in block {
            if idx >= self.components.len() || seen[idx] {
                return Err(Error::BlockNotHomogeneous {
                    detail: format!("invalid or repeated component index {idx}"),
                });
            }
            seen[idx] = true;
        }
        let (w0, ref c0) = self.components[block[0]];
        for &idx in block {
            let (w, ref c) = self.components[idx];
            if (w - w0).abs() > 1e-12 {
                return Err(Error::BlockNotHomogeneous {
                    detail: format!("weights differ: {w0} vs {w}"),
                });
            }
            if c.kind() != c0.kind() {
                return Err(Error::BlockNotHomogeneous {
                    detail: "component kinds differ".into(),
                });
            }
        }
        let unitary_defect = gamma.isometry_defect();
        if unitary_defect > 1e-10 {
            return Err(Error::GammaNotUnitary {
                defect: unitary_defect,
            });
        }

        let mut components = self.components.clone();
        for (row, &target) in block.iter().enumerate() {
            let mut v = ComplexMat::zeros(self.dim_out, self.dim_in);
            for (col, &source) in block.iter().enumerate() {
                v = v.add(&self.components[source].1.matrix().scaled(gamma[(row, col)]));
            }
            components[target] = (w0, IsometryComponent::new(c0.kind(), v)?);
        }
        MixedIsometryForm::new(self.dim_in, self.dim_out, components)
    }
}

/// Draw a mixed isometry form with Haar-random unitaries embedded into
/// disjoint coordinate blocks of C^dim_out. Deterministic per seed.
pub fn generate_form(
    dim_in: usize,
    dim_out: usize,
    weights: &[f64],
    kinds: &[ComponentKind],
    seed: u64,
) -> Result<MixedIsometryForm> {
    if weights.len() != kinds.len() || weights.is_empty() {
        return Err(Error::Parse(
            "weights and kinds must be non-empty lists of equal length".into(),
        ));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::WeightsNotNormalized { sum });
    }
    let needed = weights.len() * dim_in;
    if dim_out < needed {
        return Err(Error::DimensionInsufficient {
            needed,
            got: dim_out,
        });
    }
    let mut rng = stream_rng(seed, 0);
    let mut components = Vec::with_capacity(weights.len());
    for (k, (&w, &kind)) in weights.iter().zip(kinds).enumerate() {
        let u = haar_unitary(&mut rng, dim_in);
        let mut v = ComplexMat::zeros(dim_out, dim_in);
        for i in 0..dim_in {
            for j in 0..dim_in {
                v[(k * dim_in + i, j)] = u[(i, j)];
            }
        }
        components.push((w, IsometryComponent::new(kind, v)?));
    }
    MixedIsometryForm::new(dim_in, dim_out, components)
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::linops::{herm_eig, inner, support_proj};
    use crate::sample::{haar_state, pure_state, seeded_hermitian, stream_rng};

    fn unit_form(dim: usize) -> MixedIsometryForm {
        MixedIsometryForm::new(
            dim,
            dim,
            vec![(
                1.0,
                IsometryComponent::new(ComponentKind::Unitary, ComplexMat::identity(dim)).unwrap(),
            )],
        )
        .unwrap()
    }

    fn transpose_form(dim: usize) -> MixedIsometryForm {
        MixedIsometryForm::new(
            dim,
            dim,
            vec![(
                1.0,
                IsometryComponent::new(ComponentKind::Antiunitary, ComplexMat::identity(dim))
                    .unwrap(),
            )],
        )
        .unwrap()
    }

    /// Two blocks of C² inside C⁴, weights (0.7, 0.3), second antiunitary if
    /// requested.
    fn two_block_form(w1: f64, w2: f64, second_kind: ComponentKind) -> MixedIsometryForm {
        let mut v1 = ComplexMat::zeros(4, 2);
        v1[(0, 0)] = C64::new(1.0, 0.0);
        v1[(1, 1)] = C64::new(1.0, 0.0);
        let mut v2 = ComplexMat::zeros(4, 2);
        v2[(2, 0)] = C64::new(1.0, 0.0);
        v2[(3, 1)] = C64::new(1.0, 0.0);
        MixedIsometryForm::new(
            2,
            4,
            vec![
                (w1, IsometryComponent::new(ComponentKind::Unitary, v1).unwrap()),
                (w2, IsometryComponent::new(second_kind, v2).unwrap()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn basis_d1_is_scalar_one() {
        let b = HermBasis::new(1);
        assert_eq!(b.len(), 1);
        assert!((b.element(0).mat()[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn basis_d2_canonical_order() {
        let b = HermBasis::new(2);
        assert_eq!(b.len(), 4);
        assert!((b.element(0).mat()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((b.element(1).mat()[(1, 1)].re - 1.0).abs() < 1e-15);
        let s = 0.5f64.sqrt();
        assert!((b.element(2).mat()[(0, 1)].re - s).abs() < 1e-15);
        assert!((b.element(3).mat()[(0, 1)].im + s).abs() < 1e-15);
        assert!((b.element(3).mat()[(1, 0)].im - s).abs() < 1e-15);
    }

    #[test]
    fn basis_d3_is_orthonormal() {
        let b = HermBasis::new(3);
        assert_eq!(b.len(), 9);
        for i in 0..9 {
            for j in 0..9 {
                let g = b.element(i).hs_inner(b.element(j));
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((g - expected).abs() < 1e-14, "gram[{i}][{j}] = {g}");
            }
        }
    }

    #[test]
    fn basis_coords_roundtrip() {
        let b = HermBasis::new(4);
        let rho = seeded_hermitian(4, 5);
        let back = b.from_coords(&b.coords(&rho));
        assert!(back.sub(&rho).max_norm() < 1e-13);
    }

    #[test]
    fn from_form_identity_channel() {
        let r = unit_form(3).to_channel();
        assert!(r.max_diff(&ChannelMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn from_form_transpose_channel() {
        let r = transpose_form(2).to_channel();
        let rho = HermOp::new(ComplexMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => C64::new(0.5, 0.0),
            (1, 1) => C64::new(0.5, 0.0),
            (0, 1) => C64::new(0.1, 0.3),
            _ => C64::new(0.1, -0.3),
        }))
        .unwrap();
        let out = r.apply(&rho).unwrap();
        assert!(out.mat().sub(&rho.mat().transpose()).max_norm() < 1e-12);
    }

    #[test]
    fn from_form_two_block_action() {
        let form = two_block_form(0.7, 0.3, ComponentKind::Antiunitary);
        let r = form.to_channel();
        let e0 = pure_state(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let out = r.apply(&e0).unwrap();
        assert!((out.trace() - 1.0).abs() < 1e-12);
        assert!((out.mat()[(0, 0)].re - 0.7).abs() < 1e-12);
        assert!((out.mat()[(2, 2)].re - 0.3).abs() < 1e-12);
        // off-diagonal blocks vanish
        assert!(out.mat()[(0, 2)].norm() < 1e-12);
        // matches the direct form action on a random state
        let phi = haar_state(&mut stream_rng(42, 9), 2);
        let rho = pure_state(&phi);
        let via_matrix = r.apply(&rho).unwrap();
        let direct = form.apply_state(&rho);
        assert!(via_matrix.sub(&direct).max_norm() < 1e-12);
    }

    #[test]
    fn apply_is_adjoint_to_dual() {
        let form = two_block_form(0.6, 0.4, ComponentKind::Unitary);
        let r = form.to_channel();
        let dual = r.dual();
        let mut rng = stream_rng(17, 3);
        for _ in 0..8 {
            let rho = pure_state(&haar_state(&mut rng, 2));
            let a = pure_state(&haar_state(&mut rng, 4));
            let lhs = r.apply(&rho).unwrap().hs_inner(&a);
            let rhs = rho.hs_inner(&dual.apply(&a).unwrap());
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn dual_is_involutive_and_unital_for_forms() {
        let r = two_block_form(0.7, 0.3, ComponentKind::Antiunitary).to_channel();
        assert!(r.dual().dual().max_diff(&r) < 1e-15);
        assert!(
            ChannelMatrix::identity(2)
                .dual()
                .max_diff(&ChannelMatrix::identity(2))
                < 1e-15
        );
        let unital = r.dual().apply(&HermOp::identity(4)).unwrap();
        assert!(unital.sub(&HermOp::identity(2)).max_norm() < 1e-10);
    }

    #[test]
    fn compose_examples() {
        let r = two_block_form(0.5, 0.5, ComponentKind::Unitary).to_channel();
        let composed = compose(&r, &ChannelMatrix::identity(2)).unwrap();
        assert!(composed.max_diff(&r) < 1e-15);

        // two unitary conjugations compose to the product unitary
        let u1 = haar_unitary(&mut stream_rng(5, 0), 3);
        let u2 = haar_unitary(&mut stream_rng(5, 1), 3);
        let c1 = ChannelMatrix::from_action(3, 3, |rho| {
            HermOp::hermitian_part(&u1.mul(rho.mat()).mul(&u1.adjoint()))
        });
        let c2 = ChannelMatrix::from_action(3, 3, |rho| {
            HermOp::hermitian_part(&u2.mul(rho.mat()).mul(&u2.adjoint()))
        });
        let u21 = u2.mul(&u1);
        let c21 = ChannelMatrix::from_action(3, 3, |rho| {
            HermOp::hermitian_part(&u21.mul(rho.mat()).mul(&u21.adjoint()))
        });
        assert!(compose(&c2, &c1).unwrap().max_diff(&c21) < 1e-12);
    }

    #[test]
    fn choi_of_identity_is_entangled_projector() {
        let c = ChannelMatrix::identity(2).choi().unwrap();
        let eig = herm_eig(&c).unwrap();
        assert!((eig.values()[0] - 2.0).abs() < 1e-10);
        for &v in &eig.values()[1..] {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn choi_of_transpose_has_minus_one() {
        let c = transpose_form(2).to_channel().choi().unwrap();
        let eig = herm_eig(&c).unwrap();
        assert!((eig.values().last().unwrap() + 1.0).abs() < 1e-10);
    }

    #[test]
    fn choi_of_unitary_form_is_positive() {
        let form = generate_form(
            2,
            4,
            &[0.5, 0.5],
            &[ComponentKind::Unitary, ComponentKind::Unitary],
            11,
        )
        .unwrap();
        let eig = herm_eig(&form.to_channel().choi().unwrap()).unwrap();
        assert!(*eig.values().last().unwrap() >= -1e-9);
    }

    #[test]
    fn reversal_examples() {
        // single unitary identity: S = identity
        let s = unit_form(2).reversal();
        assert!(s.max_diff(&ChannelMatrix::identity(2)) < 1e-12);

        // antiunitary singleton: double transpose is exactly the identity
        let form = transpose_form(2);
        let s = form.reversal();
        let roundtrip = compose(&s, &form.to_channel()).unwrap();
        assert!(roundtrip.max_diff(&ChannelMatrix::identity(2)) < 1e-14);

        // equal-weight two-component form
        let form = two_block_form(0.5, 0.5, ComponentKind::Antiunitary);
        let s = form.reversal();
        let roundtrip = compose(&s, &form.to_channel()).unwrap();
        assert!(roundtrip.max_diff(&ChannelMatrix::identity(2)) < 1e-8);
        // S itself is trace preserving and positive on the target space
        let unital = s.dual().apply(&HermOp::identity(2)).unwrap();
        assert!(unital.sub(&HermOp::identity(4)).max_norm() < 1e-10);
        let (positive, worst) = crate::verify::positivity_probe(&s, 12, 7, 1e-9).unwrap();
        assert!(positive, "reversal not positive (worst {worst})");
    }

    #[test]
    fn hs_lift_examples() {
        let form = unit_form(3);
        let tau = ComplexMat::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64, j as f64));
        let lifted = form.hs_lift(&tau).unwrap();
        assert!(lifted.sub(&tau).max_norm() < 1e-14);

        // equal-weight two-unitary form, τ = E_01: squared Frobenius norm 1
        let form = generate_form(
            2,
            4,
            &[0.5, 0.5],
            &[ComponentKind::Unitary, ComponentKind::Unitary],
            23,
        )
        .unwrap();
        let mut e01 = ComplexMat::zeros(2, 2);
        e01[(0, 1)] = C64::new(1.0, 0.0);
        let lifted = form.hs_lift(&e01).unwrap();
        assert!((lifted.frobenius_norm() - 1.0).abs() < 1e-12);

        let zero = ComplexMat::zeros(2, 2);
        assert!(form.hs_lift(&zero).unwrap().max_norm() == 0.0);
    }

    #[test]
    fn jordan_lift_examples() {
        let form = two_block_form(0.7, 0.3, ComponentKind::Antiunitary);
        // identity maps to the sum of range projectors
        let lifted = form.jordan_lift(&HermOp::identity(2)).unwrap();
        let mut expected = HermOp::zero(4);
        for (_, c) in form.components() {
            expected = expected.add(c.range_projector().op());
        }
        assert!(lifted.sub(&expected).max_norm() < 1e-12);

        // projections map to projections
        let p = pure_state(&haar_state(&mut stream_rng(31, 1), 2));
        let x = form.jordan_lift(&p).unwrap();
        assert!(x.mat().mul(x.mat()).sub(x.mat()).max_norm() < 1e-9);

        // operator norm preserved
        let a = seeded_hermitian(2, 6);
        let lifted = form.jordan_lift(&a).unwrap();
        let op_norm = |x: &HermOp| {
            herm_eig(x)
                .unwrap()
                .values()
                .iter()
                .map(|v| v.abs())
                .fold(0.0, f64::max)
        };
        assert!((op_norm(&lifted) - op_norm(&a)).abs() < 1e-9);

        // homomorphism on one generator for an all-unitary form
        let form = generate_form(
            3,
            6,
            &[0.5, 0.5],
            &[ComponentKind::Unitary, ComponentKind::Unitary],
            7,
        )
        .unwrap();
        let a = seeded_hermitian(3, 2);
        let a2 = HermOp::hermitian_part(&a.mat().mul(a.mat()));
        let lhs = form.jordan_lift(&a2).unwrap();
        let la = form.jordan_lift(&a).unwrap();
        let rhs = HermOp::hermitian_part(&la.mat().mul(la.mat()));
        assert!(lhs.sub(&rhs).max_norm() < 1e-9);
    }

    #[test]
    fn gauge_transform_examples() {
        let form = generate_form(
            2,
            5,
            &[0.5, 0.5],
            &[ComponentKind::Unitary, ComponentKind::Unitary],
            3,
        )
        .unwrap();
        let channel = form.to_channel();

        // identity gauge changes nothing
        let same = form.gauge_transform(&ComplexMat::identity(2), &[0, 1]).unwrap();
        assert!(same.to_channel().max_diff(&channel) < 1e-12);

        // swap permutes components, channel unchanged
        let swap = ComplexMat::from_fn(2, 2, |i, j| {
            if i + j == 1 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let swapped = form.gauge_transform(&swap, &[0, 1]).unwrap();
        assert!(swapped.components()[0].1.matrix().sub(form.components()[1].1.matrix()).max_norm() < 1e-14);
        assert!(swapped.to_channel().max_diff(&channel) < 1e-12);

        // Hadamard-like mix: channel equal, components moved
        let h = 0.5f64.sqrt();
        let hadamard = ComplexMat::from_fn(2, 2, |i, j| {
            if i == 1 && j == 1 {
                C64::new(-h, 0.0)
            } else {
                C64::new(h, 0.0)
            }
        });
        let mixed = form.gauge_transform(&hadamard, &[0, 1]).unwrap();
        assert!(mixed.to_channel().max_diff(&channel) < 1e-9);
        assert!(mixed.components()[0].1.matrix().sub(form.components()[0].1.matrix()).max_norm() > 1e-2);
    }

    #[test]
    fn gauge_transform_rejects_bad_blocks() {
        let form = generate_form(
            2,
            4,
            &[0.7, 0.3],
            &[ComponentKind::Unitary, ComponentKind::Unitary],
            3,
        )
        .unwrap();
        let err = form.gauge_transform(&ComplexMat::identity(2), &[0, 1]).unwrap_err();
        assert!(matches!(err, Error::BlockNotHomogeneous { .. }));

        let form = generate_form(
            2,
            4,
            &[0.5, 0.5],
            &[ComponentKind::Unitary, ComponentKind::Unitary],
            3,
        )
        .unwrap();
        let not_unitary = ComplexMat::from_fn(2, 2, |i, j| {
            if i == j {
                C64::new(0.9, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let err = form.gauge_transform(&not_unitary, &[0, 1]).unwrap_err();
        assert!(matches!(err, Error::GammaNotUnitary { .. }));
    }

    #[test]
    fn generate_form_checks_dimensions_and_orthogonality() {
        let err = generate_form(
            2,
            3,
            &[0.5, 0.5],
            &[ComponentKind::Unitary, ComponentKind::Unitary],
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimensionInsufficient { .. }));

        let form = generate_form(
            2,
            4,
            &[0.5, 0.5],
            &[ComponentKind::Unitary, ComponentKind::Unitary],
            1,
        )
        .unwrap();
        let overlap = form.components()[0]
            .1
            .matrix()
            .adjoint()
            .mul(form.components()[1].1.matrix())
            .max_norm();
        assert!(overlap < 1e-12);
    }

    #[test]
    fn form_is_trace_norm_isometry_on_probes() {
        let form = generate_form(
            3,
            9,
            &[0.5, 0.3, 0.2],
            &[
                ComponentKind::Unitary,
                ComponentKind::Antiunitary,
                ComponentKind::Unitary,
            ],
            9,
        )
        .unwrap();
        let r = form.to_channel();
        let mut rng = stream_rng(2024, 5);
        for _ in 0..6 {
            let a = seeded_hermitian(3, rng.gen());
            let tn_in = crate::linops::trace_norm(&a).unwrap();
            let tn_out = crate::linops::trace_norm(&r.apply(&a).unwrap()).unwrap();
            assert!((tn_in - tn_out).abs() < 1e-8);
        }
        // orthogonality preservation on a pure pair
        let (phi, psi) = crate::sample::haar_orthonormal_pair(&mut rng, 3);
        let t_phi = r.apply(&pure_state(&phi)).unwrap();
        let t_psi = r.apply(&pure_state(&psi)).unwrap();
        assert!(t_phi.mat().mul(t_psi.mat()).max_norm() < 1e-9);
        // dual support identity, the second isometry criterion
        let back = r.dual().apply(support_proj(&t_phi).unwrap().op()).unwrap();
        assert!(back.sub(&pure_state(&phi)).max_norm() < 1e-9);
        assert!(inner(&phi, &psi).norm() < 1e-12);
    }
}
