//! Constructive decomposition of a stochastic isometry into its canonical
//! mixed unitary/antiunitary form.
//!
//! Pipeline: spectral fingerprint → band projections (one invariant subspace
//! of the target per distinct weight) → per-band mixing channels → the
//! linear/antilinear split inside each band → rail projections carrying one
//! pure sub-isometry each → column-by-column extraction of the isometry
//! matrices. All probes are drawn from per-band ChaCha streams keyed by the
//! caller's seed, so a run is reproducible end to end; every stage records
//! its residual in the report.

use num_complex::Complex;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::Tolerances;
use crate::channel::{ChannelMatrix, ComponentKind, IsometryComponent, MixedIsometryForm};
use crate::error::{Error, Result};
use crate::linops::{
    C64, ComplexMat, EigenSystem, HermOp, Projector, herm_eig, inner, normalized, rank_threshold,
    vec_norm,
};
use crate::sample::{haar_orthonormal_pair, haar_state, pure_state, stream_rng};
use crate::verify::{SpectralFingerprint, is_trace_preserving, isometry_probe, mixing_fingerprint,
    positivity_probe};

const STREAM_BANDS: u64 = 8;
const STREAM_BAND_BASE: u64 = 0x100;

/// A new direction must stick out of the current subspace by this much
/// (after normalization) to count as rank growth; probe noise sits orders of
/// magnitude below, generic growth orders of magnitude above.
const GROWTH_TOL: f64 = 1e-7;

/// Consecutive no-growth probes required before a joined subspace is
/// considered stable.
const STABLE_PROBES: usize = 3;

/// Incrementally joined subspace, kept as an orthonormal basis.
struct GrowingSubspace {
    dim: usize,
    basis: Vec<Vec<C64>>,
}

impl GrowingSubspace {
    fn new(dim: usize) -> Self {
        Self { dim, basis: Vec::new() }
    }

    fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Returns true when the vector extended the subspace.
    fn absorb(&mut self, v: &[C64]) -> bool {
        let scale = vec_norm(v);
        if scale <= rank_threshold(1.0) {
            return false;
        }
        let mut w: Vec<C64> = v.iter().map(|z| z / scale).collect();
        for _ in 0..2 {
            for b in &self.basis {
                let c = inner(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let residual = vec_norm(&w);
        if residual > GROWTH_TOL {
            self.basis.push(w.iter().map(|z| z / residual).collect());
            true
        } else {
            false
        }
    }

    fn basis_matrix(&self) -> ComplexMat {
        ComplexMat::from_columns(&self.basis)
    }

    fn projector(&self) -> Projector {
        if self.basis.is_empty() {
            Projector::zero(self.dim)
        } else {
            Projector::from_orthonormal_columns(&self.basis_matrix())
        }
    }
}

/// Band projections P_ν of a fingerprinted isometry, plus the residual
/// projector P₀ onto the unused part of the target space.
#[derive(Debug)]
pub struct BandProjections {
    pub bands: Vec<Projector>,
    pub p0: Projector,
    /// max over fresh probes of ‖T(ρ) − Σ P_ν T(ρ) P_ν‖_max
    pub block_residual: f64,
    pub probes_used: usize,
}

/// Assign the descending nonzero eigenvalues of one probe image to the
/// fingerprint bands; index lists refer to eigensystem columns.
fn assign_bands(
    eig: &EigenSystem,
    fp: &SpectralFingerprint,
    rel_gap: f64,
) -> Result<Vec<Vec<usize>>> {
    let values = eig.values();
    let scale = values.first().map(|v| v.abs()).unwrap_or(0.0);
    let zero_cut = rank_threshold(scale).max(1e-8);
    let mut idx = 0usize;
    let mut assignment = Vec::with_capacity(fp.entries.len());
    for entry in &fp.entries {
        let tol = (rel_gap * entry.weight).max(1e-8);
        let mut members = Vec::with_capacity(entry.multiplicity);
        for _ in 0..entry.multiplicity {
            if idx >= values.len() || (values[idx] - entry.weight).abs() > tol {
                return Err(Error::FingerprintMismatch {
                    detail: format!(
                        "probe eigenvalue {} does not match band weight {}",
                        values.get(idx).copied().unwrap_or(0.0),
                        entry.weight
                    ),
                });
            }
            members.push(idx);
            idx += 1;
        }
        assignment.push(members);
    }
    if let Some(&stray) = values[idx..].iter().find(|v| v.abs() > zero_cut) {
        return Err(Error::FingerprintMismatch {
            detail: format!("unassigned probe eigenvalue {stray}"),
        });
    }
    Ok(assignment)
}

/// Join the w̃_ν-eigenspaces of T(P_φ) over probes until every band's rank is
/// stable and equals m_ν · d.
pub fn band_projections(
    r: &ChannelMatrix,
    fp: &SpectralFingerprint,
    seed: u64,
    tol: &Tolerances,
) -> Result<BandProjections> {
    let d = r.dim_in();
    let dt = r.dim_out();
    let cap = 8 * d * dt;
    let mut rng = stream_rng(seed, STREAM_BANDS);

    let targets: Vec<usize> = fp.entries.iter().map(|e| e.multiplicity * d).collect();
    let mut joined: Vec<GrowingSubspace> = targets.iter().map(|_| GrowingSubspace::new(dt)).collect();
    let mut stable = 0usize;
    let mut probes_used = 0usize;

    while probes_used < cap {
        let phi = haar_state(&mut rng, d);
        probes_used += 1;
        let image = r.apply(&pure_state(&phi))?;
        let eig = herm_eig(&image)?;
        let assignment = assign_bands(&eig, fp, tol.cluster_rel_gap)?;
        let mut grew = false;
        for (space, members) in joined.iter_mut().zip(&assignment) {
            for &k in members {
                grew |= space.absorb(&eig.eigenvector(k));
            }
        }
        stable = if grew { 0 } else { stable + 1 };
        let ranks_hit = joined.iter().zip(&targets).all(|(s, &t)| s.rank() == t);
        if ranks_hit && stable >= STABLE_PROBES {
            break;
        }
        if probes_used == cap {
            let (k, space) = joined
                .iter()
                .enumerate()
                .find(|(k, s)| s.rank() != targets[*k])
                .map(|(k, s)| (k, s.rank()))
                .unwrap_or((0, joined[0].rank()));
            return Err(Error::RankNotStabilized {
                stage: "band_projections",
                rank: space,
                target: targets[k],
                probes: probes_used,
            });
        }
    }

    let bands: Vec<Projector> = joined.iter().map(|s| s.projector()).collect();

    // pairwise orthogonality of the bands
    for (i, a) in bands.iter().enumerate() {
        for b in bands.iter().skip(i + 1) {
            let overlap = a.mat().mul(b.mat()).max_norm();
            if overlap > tol.orthogonality {
                return Err(Error::RangesNotOrthogonal { defect: overlap }
                    .at_stage("band_projections"));
            }
        }
    }

    // P₀ = complement of the joined band space
    let mut all = GrowingSubspace::new(dt);
    for s in &joined {
        for b in &s.basis {
            all.absorb(b);
        }
    }
    let p0 = all.projector().complement();

    // block-diagonality check on fresh probes
    let mut block_residual = 0.0f64;
    for _ in 0..4 {
        let phi = haar_state(&mut rng, d);
        probes_used += 1;
        let image = r.apply(&pure_state(&phi))?;
        let mut compressed = HermOp::zero(dt);
        for p in bands.iter().chain(std::iter::once(&p0)) {
            let block = p.mat().mul(image.mat()).mul(p.mat());
            compressed = compressed.add(&HermOp::hermitian_part(&block));
        }
        block_residual = block_residual.max(compressed.sub(&image).max_norm());
    }
    if block_residual > tol.band_block_residual {
        return Err(Error::FingerprintMismatch {
            detail: format!("band block-diagonality residual {block_residual:.3e}"),
        }
        .at_stage("band_projections"));
    }

    Ok(BandProjections {
        bands,
        p0,
        block_residual,
        probes_used,
    })
}

/// One band of the channel, co-restricted to an orthonormal frame of the band
/// subspace: ρ ↦ (w̃ m)⁻¹ F* T(ρ) F. Every pure state maps to (1/m) times a
/// rank-m projector.
pub struct MixingChannel {
    base: ChannelMatrix,
    frame: ComplexMat,
    m: usize,
    weight: f64,
    /// worst probe idempotency defect of m·T_ν(P_φ) seen at construction
    pub invariant_residual: f64,
}

impl MixingChannel {
    pub fn base(&self) -> &ChannelMatrix {
        &self.base
    }

    /// d̃×r isometry whose columns span the band subspace.
    pub fn frame(&self) -> &ComplexMat {
        &self.frame
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn dim_in(&self) -> usize {
        self.base.dim_in()
    }

    /// Frame dimension r = m·d.
    pub fn frame_dim(&self) -> usize {
        self.base.dim_out()
    }

    pub fn image(&self, rho: &HermOp) -> Result<HermOp> {
        self.base.apply(rho)
    }

    /// Support projection Π_φ = m·T_ν(P_φ) of a probe image, as an operator
    /// (numerically a projector up to the mixing invariant residual).
    pub fn pi_of(&self, phi: &[C64]) -> Result<HermOp> {
        Ok(self.image(&pure_state(phi))?.scaled(self.m as f64))
    }
}

/// Co-restrict one band: T_ν(ρ) = (w̃_ν m_ν)⁻¹ P_ν T(ρ) P_ν expressed in an
/// orthonormal frame of the band subspace, with the mixing invariant checked
/// on probes.
pub fn mixing_channel(
    r: &ChannelMatrix,
    band: &Projector,
    weight: f64,
    m: usize,
    rng: &mut ChaCha12Rng,
    tol: &Tolerances,
) -> Result<MixingChannel> {
    let d = r.dim_in();
    let frame = band.range_basis()?;
    let scale = 1.0 / (weight * m as f64);
    let base = ChannelMatrix::from_action(d, frame.cols(), |rho| {
        let image = r.apply(rho).expect("dimension checked by caller");
        image.conjugate_by(&frame).scaled(scale)
    });

    let chan = MixingChannel {
        base,
        frame,
        m,
        weight,
        invariant_residual: 0.0,
    };

    let mut worst = 0.0f64;
    for _ in 0..8.max(2 * d) {
        let phi = haar_state(rng, d);
        let pi = chan.pi_of(&phi)?;
        let idem = pi.mat().mul(pi.mat()).sub(pi.mat()).max_norm();
        let trace_dev = (pi.trace() - m as f64).abs();
        worst = worst.max(idem);
        if idem > tol.mixing_invariant || trace_dev > 1e-6 {
            return Err(Error::MixingInvariantViolated {
                residual: idem.max(trace_dev),
            });
        }
    }
    Ok(MixingChannel {
        invariant_residual: worst,
        ..chan
    })
}

/// Outcome of the linear/antilinear split of one mixing channel. Projectors
/// and basis columns live in the band frame coordinates.
pub struct LaSplit {
    pub p_l: Projector,
    pub p_a: Projector,
    pub m_l: usize,
    pub m_a: usize,
    /// Eigenbasis of the split operator on Π_{φ⁰}: the first m_l columns span
    /// the linear part, the remaining m_a the antilinear part.
    pub adapted_basis: ComplexMat,
    /// Reference input vector φ⁰ the split was anchored to.
    pub phi0: Vec<C64>,
    pub probes_used: usize,
}

/// Mix a probe toward the anchor when it is nearly orthogonal to it; generic
/// probes pass through unchanged. The mixing phase follows the existing
/// overlap so the perturbation cannot cancel.
fn nonorthogonal_probe(rng: &mut ChaCha12Rng, anchor: &[C64]) -> Vec<C64> {
    let psi = haar_state(rng, anchor.len());
    let overlap = inner(anchor, &psi);
    if overlap.norm() >= 1e-2 {
        return psi;
    }
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        Complex::new(1.0, 0.0)
    };
    let mixed: Vec<C64> = psi
        .iter()
        .zip(anchor)
        .map(|(p, a)| p + phase * Complex::new(1e-2, 0.0) * a)
        .collect();
    normalized(&mixed)
}

/// Split one band into its linear and antilinear parts.
///
/// The operator U = 4·Π_{φ1} Π_{φ1+iφ2} Π_{φ2} Π_{φ1+φ2} Π_{φ1} acts as a
/// unitary on the range of Π_{φ1} with eigenvalues ±i. Rank-one projector
/// algebra fixes the orientation: a unitary-generated direction carries
/// eigenvalue −i (the triple product Π_φΠ_ϑΠ_ψΠ_φ reproduces the Gram phase
/// ⟨φ|ϑ⟩⟨ϑ|ψ⟩⟨ψ|φ⟩ there), an antiunitary-generated one carries +i (the
/// conjugate phase). The split projectors P^(L), P^(A) are then joined from
/// isoclinic transports of the anchored split across probes.
pub fn la_split(chan: &MixingChannel, rng: &mut ChaCha12Rng, tol: &Tolerances) -> Result<LaSplit> {
    let d = chan.dim_in();
    if d < 2 {
        return Err(Error::DimOne);
    }
    let r = chan.frame_dim();
    let m = chan.m();

    let (phi1, phi2) = haar_orthonormal_pair(rng, d);
    let mut probes_used = 2;
    let plus: Vec<C64> = phi1.iter().zip(&phi2).map(|(a, b)| a + b).collect();
    let plus_i: Vec<C64> = phi1
        .iter()
        .zip(&phi2)
        .map(|(a, b)| a + Complex::<f64>::i() * b)
        .collect();

    let pi_1 = chan.pi_of(&phi1)?;
    let pi_2 = chan.pi_of(&phi2)?;
    let pi_plus = chan.pi_of(&normalized(&plus))?;
    let pi_plus_i = chan.pi_of(&normalized(&plus_i))?;

    let u = pi_1
        .mat()
        .mul(pi_plus_i.mat())
        .mul(pi_2.mat())
        .mul(pi_plus.mat())
        .mul(pi_1.mat())
        .scaled_re(4.0);

    // restrict to the range of Π_{φ1} and diagonalize iU there: the unitary
    // part (U-eigenvalue −i) lands on +1, the antiunitary part on −1. The
    // range has rank m by the mixing invariant, so take the top-m
    // eigenvectors rather than thresholding a support projection.
    let pi1_eig = herm_eig(&pi_1)?;
    let b = ComplexMat::from_columns(
        &(0..m).map(|j| pi1_eig.eigenvector(j)).collect::<Vec<_>>(),
    );
    let u_restricted = b.adjoint().mul(&u).mul(&b);
    let k = HermOp::hermitian_part(&u_restricted.scaled(Complex::new(0.0, 1.0)));
    let eig = herm_eig(&k)?;

    let mut m_l = 0usize;
    for j in 0..m {
        let y = eig.eigenvector(j);
        let uy = u_restricted.matvec(&y);
        let rayleigh = inner(&y, &uy);
        let dist = (rayleigh - Complex::<f64>::i())
            .norm()
            .min((rayleigh + Complex::<f64>::i()).norm());
        if dist > tol.spectral_split_window {
            return Err(Error::SpectralSplitDegenerate { distance: dist });
        }
        if rayleigh.im < 0.0 {
            m_l += 1;
        }
    }
    let m_a = m - m_l;
    // eigenvalues of iU come out descending, so +1 (linear) columns lead
    let adapted_cols: Vec<Vec<C64>> = (0..m).map(|j| b.matvec(&eig.eigenvector(j))).collect();
    let adapted_basis = ComplexMat::from_columns(&adapted_cols);

    let mut grow_l = GrowingSubspace::new(r);
    let mut grow_a = GrowingSubspace::new(r);
    for (j, col) in adapted_cols.iter().enumerate() {
        if j < m_l {
            grow_l.absorb(col);
        } else {
            grow_a.absorb(col);
        }
    }
    let pi1_l = grow_l.projector();
    let pi1_a = grow_a.projector();

    // transport the anchored split across probes and join
    let cap = 8 * d * r;
    let mut stable = 0usize;
    loop {
        let chi = nonorthogonal_probe(rng, &phi1);
        probes_used += 1;
        let pi_chi = chan.pi_of(&chi)?;
        let mut grew = false;
        for (part, grow, rank) in [
            (&pi1_l, &mut grow_l, m_l),
            (&pi1_a, &mut grow_a, m_a),
        ] {
            if rank == 0 {
                continue;
            }
            let transported =
                HermOp::hermitian_part(&pi_chi.mat().mul(part.mat()).mul(pi_chi.mat()));
            let teig = herm_eig(&transported)?;
            for j in 0..rank {
                grew |= grow.absorb(&teig.eigenvector(j));
            }
        }
        stable = if grew { 0 } else { stable + 1 };
        if grow_l.rank() == m_l * d && grow_a.rank() == m_a * d && stable >= STABLE_PROBES {
            break;
        }
        if probes_used >= cap {
            return Err(Error::RankNotStabilized {
                stage: "la_split",
                rank: grow_l.rank().max(grow_a.rank()),
                target: m_l.max(m_a) * d,
                probes: probes_used,
            });
        }
    }

    let p_l = grow_l.projector();
    let p_a = grow_a.projector();
    let cross = p_l.mat().mul(p_a.mat()).max_norm();
    if cross > tol.orthogonality {
        return Err(Error::RangesNotOrthogonal { defect: cross }.at_stage("la_split"));
    }

    Ok(LaSplit {
        p_l,
        p_a,
        m_l,
        m_a,
        adapted_basis,
        phi0: phi1,
        probes_used,
    })
}

/// Rail projections of one kind-homogeneous part of a band: rail k is the
/// join over probes ψ of the rays along Π_ψ φ_k, where {φ_k} is the adapted
/// reference basis of Π_{φ⁰}. Each rail carries one pure sub-isometry and has
/// rank d; rails are mutually orthogonal and sum to the kind subspace.
pub fn rail_projections(
    chan: &MixingChannel,
    kind_proj: &Projector,
    ref_basis: &ComplexMat,
    phi0: &[C64],
    rng: &mut ChaCha12Rng,
    tol: &Tolerances,
) -> Result<(Vec<Projector>, usize)> {
    let d = chan.dim_in();
    let r = chan.frame_dim();
    let m_kind = ref_basis.cols();
    let cap = 8 * d * r;

    let mut rails: Vec<GrowingSubspace> = (0..m_kind).map(|_| GrowingSubspace::new(r)).collect();
    for (k, rail) in rails.iter_mut().enumerate() {
        rail.absorb(&ref_basis.column(k));
    }

    let mut stable = 0usize;
    let mut probes_used = 0usize;
    loop {
        let psi = nonorthogonal_probe(rng, phi0);
        probes_used += 1;
        let pi_psi = chan.pi_of(&psi)?;
        let restricted = kind_proj.mat().mul(pi_psi.mat()).mul(kind_proj.mat());
        let mut grew = false;
        for (k, rail) in rails.iter_mut().enumerate() {
            let ray = restricted.matvec(&ref_basis.column(k));
            grew |= rail.absorb(&ray);
        }
        stable = if grew { 0 } else { stable + 1 };
        if rails.iter().all(|s| s.rank() == d) && stable >= STABLE_PROBES {
            break;
        }
        if probes_used >= cap {
            let worst = rails.iter().map(|s| s.rank()).min().unwrap_or(0);
            return Err(Error::RankNotStabilized {
                stage: "rail_projections",
                rank: worst,
                target: d,
                probes: probes_used,
            });
        }
    }

    let projectors: Vec<Projector> = rails.iter().map(|s| s.projector()).collect();
    for (i, a) in projectors.iter().enumerate() {
        for b in projectors.iter().skip(i + 1) {
            let overlap = a.mat().mul(b.mat()).max_norm();
            if overlap > tol.orthogonality {
                return Err(Error::RangesNotOrthogonal { defect: overlap }
                    .at_stage("rail_projections"));
            }
        }
    }
    Ok((projectors, probes_used))
}

/// The extracted matrix of one pure sub-isometry, in band frame coordinates.
pub struct PureExtraction {
    pub v: ComplexMat,
    pub kind: ComponentKind,
    pub residual: f64,
}

/// Top eigenvector of a Hermitian operator expected to be a rank-one
/// projector; errs when it visibly is not.
fn pure_range_vector(op: &HermOp) -> Result<Vec<C64>> {
    let eig = herm_eig(op)?;
    let top = eig.values()[0];
    let second = eig.values().get(1).copied().unwrap_or(0.0);
    if (top - 1.0).abs() > 1e-4 || second.abs() > 1e-4 {
        return Err(Error::ExtractionResidualTooLarge {
            residual: (top - 1.0).abs().max(second.abs()),
        });
    }
    Ok(eig.eigenvector(0))
}

fn canonical_phase(v: &[C64]) -> Vec<C64> {
    let vmax = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lead = v.iter().find(|z| z.norm() >= 1e-8 * vmax).expect("nonzero vector");
    let phase = lead.conj() / lead.norm();
    v.iter().map(|z| z * phase).collect()
}

/// Reconstruct the isometry matrix of one rail channel T_k: ρ ↦ m·P_k T(ρ) P_k
/// column by column, and certify its kind against the split verdict.
///
/// Column i spans the range of T_k(P_{e_i}); relative phases come from the
/// images of (e_0+e_i)/√2; the global phase makes the first significant
/// coordinate of column 0 real positive. The image of (e_0+i·e_i)/√2 lands on
/// g_0 + i·c_i g_i for unitary rails and on g_0 − i·c_i g_i for antiunitary
/// ones, which discriminates the kinds.
pub fn extract_pure(
    chan: &MixingChannel,
    rail: &Projector,
    declared: ComponentKind,
    rng: &mut ChaCha12Rng,
    tol: &Tolerances,
) -> Result<PureExtraction> {
    let d = chan.dim_in();
    let m = chan.m() as f64;

    let rail_image = |rho: &HermOp| -> Result<HermOp> {
        let image = chan.image(rho)?;
        let compressed = rail.mat().mul(image.mat()).mul(rail.mat());
        Ok(HermOp::hermitian_part(&compressed).scaled(m))
    };

    let basis_vec = |i: usize| -> Vec<C64> {
        let mut e = vec![Complex::new(0.0, 0.0); d];
        e[i] = Complex::new(1.0, 0.0);
        e
    };

    let mut columns: Vec<Vec<C64>> = Vec::with_capacity(d);
    let g0 = canonical_phase(&pure_range_vector(&rail_image(&pure_state(&basis_vec(0)))?)?);
    columns.push(g0.clone());

    let mut kind_votes: Vec<ComponentKind> = Vec::new();
    for i in 1..d {
        let gi = pure_range_vector(&rail_image(&pure_state(&basis_vec(i)))?)?;
        let mut plus = basis_vec(0);
        plus[i] = Complex::new(1.0, 0.0);
        let h = pure_range_vector(&rail_image(&pure_state(&normalized(&plus)))?)?;
        let c_raw = inner(&gi, &h) / inner(&g0, &h);
        if !(0.5..=2.0).contains(&c_raw.norm()) {
            return Err(Error::ExtractionResidualTooLarge {
                residual: (c_raw.norm() - 1.0).abs(),
            });
        }
        let c = c_raw / c_raw.norm();
        let col: Vec<C64> = gi.iter().map(|z| c * z).collect();

        // kind test on the image of (e_0 + i e_i)/√2
        let mut plus_i = basis_vec(0);
        plus_i[i] = Complex::<f64>::i();
        let h_i = pure_range_vector(&rail_image(&pure_state(&normalized(&plus_i)))?)?;
        let u_plus: Vec<C64> = g0
            .iter()
            .zip(&col)
            .map(|(a, b)| (a + Complex::<f64>::i() * b) * Complex::new(0.5f64.sqrt(), 0.0))
            .collect();
        let u_minus: Vec<C64> = g0
            .iter()
            .zip(&col)
            .map(|(a, b)| (a - Complex::<f64>::i() * b) * Complex::new(0.5f64.sqrt(), 0.0))
            .collect();
        let score_u = inner(&u_plus, &h_i).norm_sqr();
        let score_a = inner(&u_minus, &h_i).norm_sqr();
        kind_votes.push(if score_u >= score_a {
            ComponentKind::Unitary
        } else {
            ComponentKind::Antiunitary
        });
        columns.push(col);
    }

    let kind = if d == 1 {
        declared
    } else {
        let first = kind_votes[0];
        if kind_votes.iter().any(|&k| k != first) {
            return Err(Error::KindMismatch {
                detail: "phase test votes disagree across columns".into(),
            });
        }
        first
    };
    if kind != declared {
        return Err(Error::KindMismatch {
            detail: format!(
                "split declared {} but the phase test found {}",
                declared.as_str(),
                kind.as_str()
            ),
        });
    }

    let v = ComplexMat::from_columns(&columns);
    let component = IsometryComponent::new(kind, v)?;

    let mut residual = 0.0f64;
    for _ in 0..8.max(2 * d) {
        let psi = haar_state(rng, d);
        let lhs = rail_image(&pure_state(&psi))?;
        let rhs = component.apply_state(&pure_state(&psi));
        residual = residual.max(lhs.sub(&rhs).max_norm());
    }
    if residual > tol.extraction_residual {
        return Err(Error::ExtractionResidualTooLarge { residual });
    }

    Ok(PureExtraction {
        v: component.matrix().clone(),
        kind,
        residual,
    })
}

/// Per-band record in the decomposition report. Projectors are expressed in
/// the full target space coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct BandDetail {
    pub weight: f64,
    pub multiplicity: usize,
    pub m_l: usize,
    pub m_a: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_l: Option<Projector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_a: Option<Projector>,
    pub rails: Vec<Projector>,
    pub mixing_residual: f64,
    pub extraction_residuals: Vec<f64>,
    /// true when the d = 1 convention (all components emitted as unitary)
    /// applied to this band
    pub d1_unitary_convention: bool,
}

/// Full provenance of one decomposition run.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub fingerprint: SpectralFingerprint,
    pub band_projectors: Vec<Projector>,
    pub p0: Projector,
    pub band_block_residual: f64,
    pub bands: Vec<BandDetail>,
    pub reconstruction_error: f64,
    pub probes_used: usize,
    pub seed: u64,
    pub p0_completion_note: String,
}

fn lift_projector(p: &Projector, frame: &ComplexMat) -> Result<Projector> {
    if p.rank() == 0 {
        return Ok(Projector::zero(frame.rows()));
    }
    let lifted_basis = frame.mul(&p.range_basis()?);
    Ok(Projector::from_orthonormal_columns(&lifted_basis))
}

/// Decompose a verified stochastic isometry into its canonical form.
///
/// Orchestrates fingerprint → band projections → per-band split → rails →
/// extraction. Components inherit the fingerprint weight of their band;
/// kinds come from the split and are re-certified during extraction. Fails
/// before any decomposition work when the channel is not stochastic or not an
/// isometry at probe level.
pub fn decompose(
    r: &ChannelMatrix,
    seed: u64,
    tol: &Tolerances,
) -> Result<(MixedIsometryForm, DecompositionReport)> {
    let d = r.dim_in();
    let probes = crate::verify::default_probe_count(d);
    let mut probes_used = 0usize;

    let (tp, tp_res) = is_trace_preserving(r, tol.trace_preserving);
    if !tp {
        return Err(Error::NotStochastic { residual: tp_res });
    }
    let (pos, worst_min) = positivity_probe(r, probes, seed, tol.positivity)?;
    probes_used += probes;
    if !pos {
        return Err(Error::NotStochastic {
            residual: -worst_min,
        });
    }
    let iso = isometry_probe(r, probes, seed, tol.isometry_defect)?;
    probes_used += probes;
    if !iso.ok {
        return Err(Error::NotAnIsometry {
            defect: iso.worst_defect,
            pair: Box::new(iso.failing_pair.expect("failing probe recorded")),
        });
    }

    let fingerprint = mixing_fingerprint(r, probes, seed, tol.cluster_rel_gap)
        .map_err(|e| e.at_stage("fingerprint"))?;
    probes_used += probes;

    let band_proj = band_projections(r, &fingerprint, seed, tol)?;
    probes_used += band_proj.probes_used;

    let mut components: Vec<(f64, IsometryComponent)> = Vec::new();
    let mut band_details: Vec<BandDetail> = Vec::new();

    for (nu, entry) in fingerprint.entries.iter().enumerate() {
        let mut rng = stream_rng(seed, STREAM_BAND_BASE + nu as u64);
        let band = &band_proj.bands[nu];
        let chan = mixing_channel(r, band, entry.weight, entry.multiplicity, &mut rng, tol)
            .map_err(|e| e.at_stage("mixing_channel"))?;
        probes_used += 8.max(2 * d);
        let frame = chan.frame().clone();

        if d == 1 {
            // on C¹ the unitary and antiunitary actions coincide on Hermitian
            // inputs and no orthogonal probe pair exists, so the band splits
            // into any orthonormal rays, emitted as unitary columns
            let m = entry.multiplicity;
            let pi = chan.pi_of(&[Complex::new(1.0, 0.0)])?;
            let eig = herm_eig(&pi)?;
            let mut rails = Vec::with_capacity(m);
            let mut residuals = Vec::with_capacity(m);
            let mut reconstructed = HermOp::zero(chan.frame_dim());
            for k in 0..m {
                let f = eig.eigenvector(k);
                let col = canonical_phase(&f);
                let v_full = frame.mul(&ComplexMat::from_columns(std::slice::from_ref(&col)));
                components.push((
                    entry.weight,
                    IsometryComponent::new(ComponentKind::Unitary, v_full)?,
                ));
                let rail_frame = Projector::from_vector(&col);
                reconstructed = reconstructed.add(rail_frame.op());
                rails.push(lift_projector(&rail_frame, &frame)?);
                residuals.push(0.0);
            }
            let res = reconstructed.sub(&pi).max_norm();
            for r in residuals.iter_mut() {
                *r = res;
            }
            band_details.push(BandDetail {
                weight: entry.weight,
                multiplicity: m,
                m_l: m,
                m_a: 0,
                p_l: Some(lift_projector(&Projector::identity(chan.frame_dim()), &frame)?),
                p_a: None,
                rails,
                mixing_residual: chan.invariant_residual,
                extraction_residuals: residuals,
                d1_unitary_convention: true,
            });
            continue;
        }

        let split = la_split(&chan, &mut rng, tol).map_err(|e| e.at_stage("la_split"))?;
        probes_used += split.probes_used;

        let mut rails_all: Vec<Projector> = Vec::new();
        let mut residuals: Vec<f64> = Vec::new();

        let mut sides: Vec<(ComponentKind, &Projector, usize, usize)> = Vec::new();
        if split.m_l > 0 {
            sides.push((ComponentKind::Unitary, &split.p_l, 0, split.m_l));
        }
        if split.m_a > 0 {
            sides.push((ComponentKind::Antiunitary, &split.p_a, split.m_l, split.m_a));
        }

        for (kind, kind_proj, col_offset, m_kind) in sides {
            let ref_cols: Vec<Vec<C64>> = (col_offset..col_offset + m_kind)
                .map(|j| split.adapted_basis.column(j))
                .collect();
            let ref_basis = ComplexMat::from_columns(&ref_cols);
            let (rails, rail_probes) =
                rail_projections(&chan, kind_proj, &ref_basis, &split.phi0, &mut rng, tol)
                    .map_err(|e| e.at_stage("rail_projections"))?;
            probes_used += rail_probes;
            for rail in &rails {
                let extraction = extract_pure(&chan, rail, kind, &mut rng, tol)
                    .map_err(|e| e.at_stage("extract_pure"))?;
                probes_used += 8.max(2 * d);
                let v_full = frame.mul(&extraction.v);
                components.push((entry.weight, IsometryComponent::new(extraction.kind, v_full)?));
                residuals.push(extraction.residual);
                rails_all.push(lift_projector(rail, &frame)?);
            }
        }

        band_details.push(BandDetail {
            weight: entry.weight,
            multiplicity: entry.multiplicity,
            m_l: split.m_l,
            m_a: split.m_a,
            p_l: (split.m_l > 0).then(|| lift_projector(&split.p_l, &frame)).transpose()?,
            p_a: (split.m_a > 0).then(|| lift_projector(&split.p_a, &frame)).transpose()?,
            rails: rails_all,
            mixing_residual: chan.invariant_residual,
            extraction_residuals: residuals,
            d1_unitary_convention: false,
        });
    }

    // fingerprint weights are numerical estimates; renormalize exactly before
    // form validation (the reconstruction check below guards correctness)
    let total: f64 = components.iter().map(|(w, _)| *w).sum();
    let components: Vec<(f64, IsometryComponent)> = components
        .into_iter()
        .map(|(w, c)| (w / total, c))
        .collect();

    let form = MixedIsometryForm::new(d, r.dim_out(), components)?;
    let reconstruction_error = form.to_channel().max_diff(r);
    if reconstruction_error > tol.reconstruction {
        return Err(Error::ReconstructionFailed {
            residual: reconstruction_error,
        });
    }

    let report = DecompositionReport {
        fingerprint,
        band_projectors: band_proj.bands,
        p0: band_proj.p0,
        band_block_residual: band_proj.block_residual,
        bands: band_details,
        reconstruction_error,
        probes_used,
        seed,
        p0_completion_note: "reversal reroutes tr[P0 rho P0] to the maximally mixed state on the \
                             input space; any stochastic completion is valid off T(V)"
            .into(),
    };
    Ok((form, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_form;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn decompose_identity_channel() {
        let r = ChannelMatrix::identity(2);
        let (form, report) = decompose(&r, 1, &tols()).unwrap();
        assert_eq!(form.components().len(), 1);
        let (w, c) = &form.components()[0];
        assert!((w - 1.0).abs() < 1e-12);
        assert_eq!(c.kind(), ComponentKind::Unitary);
        // global phase convention makes the recovered matrix exactly I
        assert!(c.matrix().sub(&ComplexMat::identity(2)).max_norm() < 1e-9);
        assert!(report.reconstruction_error <= 1e-8);
    }

    #[test]
    fn decompose_transpose_channel() {
        let form_in = generate_form(2, 2, &[1.0], &[ComponentKind::Antiunitary], 0).unwrap();
        // the generated unitary is Haar; use the plain transpose instead
        let _ = form_in;
        let r = MixedIsometryForm::new(
            2,
            2,
            vec![(
                1.0,
                IsometryComponent::new(ComponentKind::Antiunitary, ComplexMat::identity(2))
                    .unwrap(),
            )],
        )
        .unwrap()
        .to_channel();
        let (form, _report) = decompose(&r, 3, &tols()).unwrap();
        assert_eq!(form.components().len(), 1);
        let (_, c) = &form.components()[0];
        assert_eq!(c.kind(), ComponentKind::Antiunitary);
        assert!(c.matrix().sub(&ComplexMat::identity(2)).max_norm() < 1e-9);
    }

    #[test]
    fn decompose_mixed_kind_form() {
        let gen = generate_form(
            2,
            5,
            &[0.7, 0.3],
            &[ComponentKind::Unitary, ComponentKind::Antiunitary],
            11,
        )
        .unwrap();
        let r = gen.to_channel();
        let (form, report) = decompose(&r, 5, &tols()).unwrap();
        assert_eq!(form.components().len(), 2);
        let mut weights: Vec<f64> = form.components().iter().map(|(w, _)| *w).collect();
        weights.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((weights[0] - 0.7).abs() < 1e-9);
        assert!((weights[1] - 0.3).abs() < 1e-9);
        let kinds: Vec<ComponentKind> = form
            .components()
            .iter()
            .map(|(_, c)| c.kind())
            .collect();
        assert!(kinds.contains(&ComponentKind::Unitary));
        assert!(kinds.contains(&ComponentKind::Antiunitary));
        assert!(report.reconstruction_error <= 1e-8);
        assert_eq!(report.bands.len(), 2);
    }

    #[test]
    fn decompose_equal_weight_same_kind_band() {
        let gen = generate_form(2, 4, &[0.5, 0.5], &[ComponentKind::Unitary; 2], 2).unwrap();
        let r = gen.to_channel();
        let (form, report) = decompose(&r, 7, &tols()).unwrap();
        assert_eq!(form.components().len(), 2);
        assert_eq!(report.bands.len(), 1);
        assert_eq!(report.bands[0].multiplicity, 2);
        assert_eq!(report.bands[0].m_l, 2);
        assert_eq!(report.bands[0].m_a, 0);
        // rails are isoclinic with every probe image: they commute with it
        let chan_bands = band_projections(&r, &report.fingerprint, 7, &tols()).unwrap();
        assert_eq!(chan_bands.bands[0].rank(), 4);
    }

    #[test]
    fn decompose_equal_weight_mixed_kind_band() {
        let gen = generate_form(
            2,
            6,
            &[0.5, 0.5],
            &[ComponentKind::Unitary, ComponentKind::Antiunitary],
            13,
        )
        .unwrap();
        let r = gen.to_channel();
        let (form, report) = decompose(&r, 9, &tols()).unwrap();
        assert_eq!(report.bands.len(), 1);
        assert_eq!(report.bands[0].m_l, 1);
        assert_eq!(report.bands[0].m_a, 1);
        let kinds: Vec<ComponentKind> = form.components().iter().map(|(_, c)| c.kind()).collect();
        assert!(kinds.contains(&ComponentKind::Unitary));
        assert!(kinds.contains(&ComponentKind::Antiunitary));
    }

    #[test]
    fn decompose_d1_channel() {
        let gen = generate_form(1, 3, &[0.6, 0.4], &[ComponentKind::Unitary; 2], 4).unwrap();
        let r = gen.to_channel();
        let (form, report) = decompose(&r, 2, &tols()).unwrap();
        assert_eq!(form.components().len(), 2);
        assert!(report.bands.iter().all(|b| b.d1_unitary_convention));
        assert!(report.reconstruction_error <= 1e-10);
    }

    #[test]
    fn decompose_rejects_non_isometry() {
        let x = ComplexMat::from_fn(2, 2, |i, j| {
            if i + j == 1 {
                Complex::new(1.0, 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        });
        let r = ChannelMatrix::from_action(2, 2, move |rho| {
            let conj = HermOp::hermitian_part(&x.mul(rho.mat()).mul(&x.adjoint()));
            rho.add(&conj).scaled(0.5)
        });
        let err = decompose(&r, 1, &tols()).unwrap_err();
        assert!(matches!(err, Error::NotAnIsometry { .. }));
    }

    #[test]
    fn decompose_rejects_scaled_isometry_at_trace_stage() {
        let r = ChannelMatrix::identity(2).scaled(0.9);
        let err = decompose(&r, 1, &tols()).unwrap_err();
        assert!(matches!(err, Error::NotStochastic { .. }));
    }

    #[test]
    fn band_projections_match_generator_ranges() {
        let gen = generate_form(
            2,
            4,
            &[0.7, 0.3],
            &[ComponentKind::Unitary, ComponentKind::Antiunitary],
            31,
        )
        .unwrap();
        let r = gen.to_channel();
        let fp = mixing_fingerprint(&r, 16, 5, 1e-6).unwrap();
        let bands = band_projections(&r, &fp, 5, &tols()).unwrap();
        assert_eq!(bands.bands.len(), 2);
        assert_eq!(bands.p0.rank(), 0);
        assert!(bands.block_residual <= 1e-8);
        // the bands and p0 resolve the identity
        let mut total = bands.p0.op().clone();
        for band in &bands.bands {
            total = total.add(band.op());
        }
        assert!(total.sub(&HermOp::identity(4)).max_norm() <= 1e-9);
        for (band, (_, c)) in bands.bands.iter().zip(gen.components()) {
            assert_eq!(band.rank(), 2);
            let expected = c.range_projector();
            assert!(band.mat().sub(expected.mat()).max_norm() <= 1e-8);
        }

        // equal weights merge into a single rank-4 band
        let merged = generate_form(2, 4, &[0.5, 0.5], &[ComponentKind::Unitary; 2], 32).unwrap();
        let r = merged.to_channel();
        let fp = mixing_fingerprint(&r, 16, 5, 1e-6).unwrap();
        let bands = band_projections(&r, &fp, 5, &tols()).unwrap();
        assert_eq!(bands.bands.len(), 1);
        assert_eq!(bands.bands[0].rank(), 4);

        // a pure channel's band is its range projector, p0 the complement
        let pure = generate_form(2, 5, &[1.0], &[ComponentKind::Unitary], 33).unwrap();
        let r = pure.to_channel();
        let fp = mixing_fingerprint(&r, 16, 5, 1e-6).unwrap();
        let bands = band_projections(&r, &fp, 5, &tols()).unwrap();
        assert_eq!(bands.bands.len(), 1);
        assert_eq!(bands.bands[0].rank(), 2);
        assert_eq!(bands.p0.rank(), 3);
        let expected = pure.components()[0].1.range_projector();
        assert!(bands.bands[0].mat().sub(expected.mat()).max_norm() <= 1e-8);
    }

    fn band_channel_of(
        r: &ChannelMatrix,
        seed: u64,
    ) -> (MixingChannel, crate::verify::SpectralFingerprint) {
        let fp = mixing_fingerprint(r, 16, seed, 1e-6).unwrap();
        let bands = band_projections(r, &fp, seed, &tols()).unwrap();
        let mut rng = stream_rng(seed, 0x900);
        let chan = mixing_channel(
            r,
            &bands.bands[0],
            fp.entries[0].weight,
            fp.entries[0].multiplicity,
            &mut rng,
            &tols(),
        )
        .unwrap();
        (chan, fp)
    }

    #[test]
    fn mixing_channel_probe_spectra() {
        // merged equal-weight band: every probe image has eigenvalues 1/2
        let merged = generate_form(2, 4, &[0.5, 0.5], &[ComponentKind::Unitary; 2], 41).unwrap();
        let (chan, _) = band_channel_of(&merged.to_channel(), 6);
        assert_eq!(chan.m(), 2);
        assert!(chan.invariant_residual <= 1e-8);
        let mut rng = stream_rng(88, 0);
        for _ in 0..4 {
            let phi = haar_state(&mut rng, 2);
            let image = chan.image(&pure_state(&phi)).unwrap();
            assert!((image.trace() - 1.0).abs() <= 1e-9);
            let eig = herm_eig(&image).unwrap();
            assert!((eig.values()[0] - 0.5).abs() <= 1e-9);
            assert!((eig.values()[1] - 0.5).abs() <= 1e-9);
        }

        // pure band: probe images are rank-1 projectors
        let pure = generate_form(3, 4, &[1.0], &[ComponentKind::Unitary], 42).unwrap();
        let (chan, _) = band_channel_of(&pure.to_channel(), 6);
        assert_eq!(chan.m(), 1);
        let phi = haar_state(&mut rng, 3);
        let pi = chan.pi_of(&phi).unwrap();
        assert!(pi.mat().mul(pi.mat()).sub(pi.mat()).max_norm() <= 1e-9);
    }

    #[test]
    fn la_split_examples() {
        // all-unitary 2-mixing: (rank 2d, rank 0), m_l = 2
        let gen = generate_form(2, 4, &[0.5, 0.5], &[ComponentKind::Unitary; 2], 51).unwrap();
        let (chan, _) = band_channel_of(&gen.to_channel(), 7);
        let mut rng = stream_rng(7, 0x901);
        let split = la_split(&chan, &mut rng, &tols()).unwrap();
        assert_eq!((split.m_l, split.m_a), (2, 0));
        assert_eq!(split.p_l.rank(), 4);
        assert_eq!(split.p_a.rank(), 0);

        // pure antiunitary (transpose): m_l = 0, m_a = 1
        let transpose = MixedIsometryForm::new(
            2,
            2,
            vec![(
                1.0,
                IsometryComponent::new(ComponentKind::Antiunitary, ComplexMat::identity(2))
                    .unwrap(),
            )],
        )
        .unwrap();
        let (chan, _) = band_channel_of(&transpose.to_channel(), 7);
        let mut rng = stream_rng(7, 0x902);
        let split = la_split(&chan, &mut rng, &tols()).unwrap();
        assert_eq!((split.m_l, split.m_a), (0, 1));

        // mixed band: the linear part is the generator's unitary range
        let mixed = generate_form(
            2,
            4,
            &[0.5, 0.5],
            &[ComponentKind::Unitary, ComponentKind::Antiunitary],
            52,
        )
        .unwrap();
        let (chan, _) = band_channel_of(&mixed.to_channel(), 7);
        let mut rng = stream_rng(7, 0x903);
        let split = la_split(&chan, &mut rng, &tols()).unwrap();
        assert_eq!((split.m_l, split.m_a), (1, 1));
        let lifted = lift_projector(&split.p_l, chan.frame()).unwrap();
        let expected = mixed.components()[0].1.range_projector();
        assert!(lifted.mat().sub(expected.mat()).max_norm() <= 1e-8);
    }

    #[test]
    fn basis_transport_is_orthonormal() {
        // transport property for a kind-homogeneous mixing channel:
        // the normalized images of a reference basis stay orthonormal
        let gen = generate_form(3, 6, &[0.5, 0.5], &[ComponentKind::Unitary; 2], 61).unwrap();
        let (chan, _) = band_channel_of(&gen.to_channel(), 8);
        let mut rng = stream_rng(8, 0x904);
        let phi = haar_state(&mut rng, 3);
        let pi_phi = chan.pi_of(&phi).unwrap();
        let basis = crate::linops::support_proj(&pi_phi).unwrap().range_basis().unwrap();
        for _ in 0..16 {
            let psi = haar_state(&mut rng, 3);
            let overlap = inner(&psi, &phi).norm();
            if overlap < 1e-2 {
                continue;
            }
            let pi_psi = chan.pi_of(&psi).unwrap();
            let transported: Vec<Vec<C64>> = (0..chan.m())
                .map(|k| {
                    let raw = pi_psi.mat().matvec(&basis.column(k));
                    raw.iter().map(|z| z / overlap).collect()
                })
                .collect();
            for (i, u) in transported.iter().enumerate() {
                for (j, v) in transported.iter().enumerate() {
                    let g = inner(u, v);
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (g - Complex::new(expected, 0.0)).norm() <= 1e-8,
                        "transport gram[{i}][{j}] = {g}"
                    );
                }
            }
        }
    }

    #[test]
    fn rails_commute_with_probe_images() {
        // isoclinic family: rails of a merged equal-weight band commute with
        // every probe image
        let gen = generate_form(2, 4, &[0.5, 0.5], &[ComponentKind::Unitary; 2], 71).unwrap();
        let r = gen.to_channel();
        let (_, report) = decompose(&r, 19, &tols()).unwrap();
        assert_eq!(report.bands.len(), 1);
        let rails = &report.bands[0].rails;
        assert_eq!(rails.len(), 2);
        let mut rng = stream_rng(20, 0);
        for _ in 0..50 {
            let psi = haar_state(&mut rng, 2);
            let image = r.apply(&pure_state(&psi)).unwrap();
            for rail in rails {
                assert_eq!(rail.rank(), 2);
                let commutator = rail
                    .mat()
                    .mul(image.mat())
                    .sub(&image.mat().mul(rail.mat()))
                    .max_norm();
                assert!(commutator <= 1e-8, "commutator {commutator}");
            }
        }

        // a pure band has a single rail: the band subspace itself
        let pure = generate_form(3, 5, &[1.0], &[ComponentKind::Unitary], 72).unwrap();
        let (_, report) = decompose(&pure.to_channel(), 19, &tols()).unwrap();
        assert_eq!(report.bands[0].rails.len(), 1);
        assert_eq!(report.bands[0].rails[0].rank(), 3);
        assert!(
            report.bands[0].rails[0]
                .mat()
                .sub(report.band_projectors[0].mat())
                .max_norm()
                <= 1e-8
        );
    }

    #[test]
    fn decompose_handles_many_components_and_max_dims() {
        let cases: Vec<(usize, usize, Vec<f64>, Vec<ComponentKind>)> = vec![
            (2, 9, vec![0.25; 4], vec![
                ComponentKind::Unitary,
                ComponentKind::Antiunitary,
                ComponentKind::Unitary,
                ComponentKind::Antiunitary,
            ]),
            (4, 16, vec![0.25; 4], vec![
                ComponentKind::Unitary,
                ComponentKind::Antiunitary,
                ComponentKind::Unitary,
                ComponentKind::Antiunitary,
            ]),
            (2, 10, vec![0.2; 5], vec![
                ComponentKind::Unitary,
                ComponentKind::Antiunitary,
                ComponentKind::Antiunitary,
                ComponentKind::Unitary,
                ComponentKind::Unitary,
            ]),
        ];
        for (i, (din, dout, w, k)) in cases.iter().enumerate() {
            let form = generate_form(*din, *dout, w, k, 777 + i as u64).unwrap();
            let r = form.to_channel();
            let (rec, rep) = decompose(&r, 555 + i as u64, &tols()).unwrap();
            assert!(rep.reconstruction_error <= 1e-8, "case {i}");
            assert_eq!(rec.components().len(), k.len(), "case {i}");
            let unitary_in = k.iter().filter(|&&x| x == ComponentKind::Unitary).count();
            let unitary_out = rec
                .components()
                .iter()
                .filter(|(_, c)| c.kind() == ComponentKind::Unitary)
                .count();
            assert_eq!(unitary_in, unitary_out, "case {i}");
        }
    }

    #[test]
    fn near_degenerate_weights_fail_loudly() {
        // weights inside the cluster gap but not exactly equal sit outside
        // the contract; the mixing invariant rejects them instead of letting
        // a wrong decomposition through
        let form = generate_form(
            2,
            4,
            &[0.5000001, 0.4999999],
            &[ComponentKind::Unitary; 2],
            99,
        )
        .unwrap();
        let err = decompose(&form.to_channel(), 1, &tols()).unwrap_err();
        assert!(
            matches!(err.root(), Error::MixingInvariantViolated { .. }),
            "got {err}"
        );
    }

    #[test]
    fn roundtrip_recovers_component_matrix_up_to_phase() {
        let gen = generate_form(3, 3, &[1.0], &[ComponentKind::Unitary], 21).unwrap();
        let r = gen.to_channel();
        let (form, _) = decompose(&r, 17, &tols()).unwrap();
        let vin = gen.components()[0].1.matrix();
        let vout = form.components()[0].1.matrix();
        // align global phase on the largest entry
        let mut best = (0usize, 0usize);
        let mut best_norm = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                if vin[(i, j)].norm() > best_norm {
                    best_norm = vin[(i, j)].norm();
                    best = (i, j);
                }
            }
        }
        let phase = vin[best] / vout[best] * (vout[best].norm() / vin[best].norm());
        assert!(vout.scaled(phase).sub(vin).max_norm() < 1e-8);
    }
}
