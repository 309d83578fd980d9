//! Predicate suite classifying a channel matrix: stochastic? isometric?
//! completely positive? pure? m-mixing?
//!
//! Positivity and isometry are probe-certified: negatives are sound, positives
//! are probabilistic. "For all states" is not finitely checkable; the
//! decomposition pipeline re-certifies structurally, and its success is the
//! actual certificate. Probe vectors are drawn from explicit seeds, so every
//! verdict is reproducible.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelMatrix;
use crate::error::{Error, ProbePair, Result};
use crate::linops::{C64, HermOp, Projector, herm_eig, rank_threshold};
use crate::sample::{haar_orthonormal_pair, haar_state, pure_state, stream_rng};

const STREAM_POSITIVITY: u64 = 1;
const STREAM_ISOMETRY: u64 = 2;
const STREAM_FINGERPRINT: u64 = 3;

/// Default probe count: max(16, 4·d) pairs. Generic vectors make the
/// constructions almost surely nondegenerate.
pub fn default_probe_count(dim_in: usize) -> usize {
    16usize.max(4 * dim_in)
}

/// Trace preservation via the dual: residual of T*(I) − I in max norm.
pub fn is_trace_preserving(r: &ChannelMatrix, tol: f64) -> (bool, f64) {
    let unital = r
        .dual()
        .apply(&HermOp::identity(r.dim_out()))
        .expect("dual dimensions match by construction");
    let residual = unital.sub(&HermOp::identity(r.dim_in())).max_norm();
    (residual <= tol, residual)
}

/// Applies the channel to seeded Haar-random pure states and reports the
/// worst output eigenvalue. Positivity on pure states suffices by convexity;
/// this is a probabilistic check, not a certificate.
pub fn positivity_probe(
    r: &ChannelMatrix,
    n_probes: usize,
    seed: u64,
    tol: f64,
) -> Result<(bool, f64)> {
    assert!(n_probes >= 1);
    let mut rng = stream_rng(seed, STREAM_POSITIVITY);
    let mut worst = f64::INFINITY;
    for _ in 0..n_probes {
        let phi = haar_state(&mut rng, r.dim_in());
        let out = r.apply(&pure_state(&phi))?;
        let eig = herm_eig(&out)?;
        let min = eig.values().last().copied().unwrap_or(0.0);
        worst = worst.min(min);
    }
    Ok((worst >= -tol, worst))
}

/// Outcome of the orthogonality-preservation probe.
#[derive(Debug, Clone)]
pub struct IsometryProbe {
    pub ok: bool,
    /// max over probes of both defect families below
    pub worst_defect: f64,
    /// ‖T(P_φ)·T(P_ψ)‖_max over seeded orthogonal pure pairs
    pub worst_orthogonality: f64,
    /// ‖T*(Π(T(P_φ))) − P_φ‖_max, the dual-support criterion
    pub worst_dual_support: f64,
    /// the first pair exceeding the tolerance, if any
    pub failing_pair: Option<ProbePair>,
}

fn encode_pair(phi: &[C64], psi: &[C64]) -> ProbePair {
    ProbePair {
        phi: phi.iter().map(|z| [z.re, z.im]).collect(),
        psi: psi.iter().map(|z| [z.re, z.im]).collect(),
    }
}

/// Projector onto the eigenspaces with significantly positive eigenvalue.
/// For genuinely positive operators this is the support projection; keeping
/// it total lets the probe measure defects of non-positive maps instead of
/// aborting.
fn positive_part_support(op: &HermOp) -> Result<Projector> {
    let eig = herm_eig(op)?;
    let scale = eig.values().iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tol = rank_threshold(scale);
    let kept: Vec<usize> = (0..eig.values().len())
        .filter(|&k| eig.values()[k] > tol)
        .collect();
    if kept.is_empty() {
        return Ok(Projector::zero(op.dim()));
    }
    Ok(eig.eigenspace_projector(&kept))
}

/// Orthogonality preservation on seeded orthogonal pure pairs, cross-checked
/// with the dual-support criterion on each pair's first member.
pub fn isometry_probe(
    r: &ChannelMatrix,
    n_pairs: usize,
    seed: u64,
    tol: f64,
) -> Result<IsometryProbe> {
    let mut rng = stream_rng(seed, STREAM_ISOMETRY);
    let dual = r.dual();
    let mut worst_orth = 0.0f64;
    let mut worst_dual = 0.0f64;
    let mut failing: Option<ProbePair> = None;

    let mut pairs: Vec<(Vec<C64>, Option<Vec<C64>>)> = Vec::new();
    if r.dim_in() == 1 {
        // no orthogonal pairs exist on C¹; the dual-support criterion on the
        // unique pure state is the whole content of the probe
        pairs.push((vec![Complex::new(1.0, 0.0)], None));
    } else {
        for _ in 0..n_pairs {
            let (phi, psi) = haar_orthonormal_pair(&mut rng, r.dim_in());
            pairs.push((phi, Some(psi)));
        }
    }

    for (phi, psi) in &pairs {
        let t_phi = r.apply(&pure_state(phi))?;
        if let Some(psi) = psi {
            let t_psi = r.apply(&pure_state(psi))?;
            let defect = t_phi.mat().mul(t_psi.mat()).max_norm();
            worst_orth = worst_orth.max(defect);
            if defect > tol && failing.is_none() {
                failing = Some(encode_pair(phi, psi));
            }
        }
        let support = positive_part_support(&t_phi)?;
        let back = dual.apply(support.op())?;
        let residual = back.sub(&pure_state(phi)).max_norm();
        worst_dual = worst_dual.max(residual);
        if residual > tol && failing.is_none() {
            failing = Some(encode_pair(phi, psi.as_deref().unwrap_or(phi)));
        }
    }

    let worst = worst_orth.max(worst_dual);
    Ok(IsometryProbe {
        ok: worst <= tol,
        worst_defect: worst,
        worst_orthogonality: worst_orth,
        worst_dual_support: worst_dual,
        failing_pair: failing,
    })
}

/// Witness of failed complete positivity: a pure state on the doubled space
/// H̃ ⊗ H with a certified negative Choi expectation value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CpWitness {
    /// complex amplitudes as [re, im]
    pub state: Vec<[f64; 2]>,
    /// ⟨Ψ|C|Ψ⟩ recomputed from the witness, equals the min Choi eigenvalue
    pub expectation: f64,
}

impl CpWitness {
    pub fn state_vector(&self) -> Vec<C64> {
        self.state.iter().map(|&[re, im]| Complex::new(re, im)).collect()
    }
}

/// Complete positivity via the minimum Choi eigenvalue. When negative, the
/// corresponding eigenvector is returned with its recomputed expectation.
pub fn is_completely_positive(
    r: &ChannelMatrix,
    tol: f64,
) -> Result<(bool, f64, Option<CpWitness>)> {
    let choi = r.choi()?;
    let eig = herm_eig(&choi)?;
    let min = *eig.values().last().expect("choi matrix is non-empty");
    if min >= -tol {
        return Ok((true, min, None));
    }
    let psi = eig.eigenvector(eig.values().len() - 1);
    let image = choi.mat().matvec(&psi);
    let expectation = crate::linops::inner(&psi, &image).re;
    Ok((
        false,
        min,
        Some(CpWitness {
            state: psi.iter().map(|z| [z.re, z.im]).collect(),
            expectation,
        }),
    ))
}

/// The distinct eigenvalues w̃_ν of T(P_φ) with their multiplicities m_ν —
/// the probe-independent invariant of a mixing decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFingerprint {
    pub entries: Vec<FingerprintEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintEntry {
    pub weight: f64,
    pub multiplicity: usize,
}

impl SpectralFingerprint {
    /// Σ w̃_ν · m_ν, which must be 1 for a stochastic isometry.
    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight * e.multiplicity as f64).sum()
    }
}

/// Cluster one descending spectrum into (weight, multiplicity) groups. A new
/// group opens when the relative gap to the previous eigenvalue exceeds
/// `rel_gap`.
fn cluster_spectrum(values: &[f64], rel_gap: f64) -> Vec<FingerprintEntry> {
    let mut entries: Vec<FingerprintEntry> = Vec::new();
    let mut members: Vec<f64> = Vec::new();
    for &v in values {
        match members.last() {
            Some(&prev) if (prev - v) <= rel_gap * prev.max(v).max(f64::MIN_POSITIVE) => {
                members.push(v);
            }
            Some(_) => {
                entries.push(FingerprintEntry {
                    weight: members.iter().sum::<f64>() / members.len() as f64,
                    multiplicity: members.len(),
                });
                members = vec![v];
            }
            None => members.push(v),
        }
    }
    if !members.is_empty() {
        entries.push(FingerprintEntry {
            weight: members.iter().sum::<f64>() / members.len() as f64,
            multiplicity: members.len(),
        });
    }
    entries
}

/// Nonzero descending eigenvalues of one probe image.
fn probe_spectrum(r: &ChannelMatrix, phi: &[C64]) -> Result<Vec<f64>> {
    let out = r.apply(&pure_state(phi))?;
    let eig = herm_eig(&out)?;
    let scale = eig.values().first().map(|v| v.abs()).unwrap_or(0.0);
    let cut = rank_threshold(scale);
    Ok(eig.values().iter().copied().filter(|&v| v > cut).collect())
}

/// Spectral fingerprint of a probe-certified stochastic isometry: clusters
/// the nonzero spectrum of T(P_φ) per probe and asserts that all probes agree.
pub fn mixing_fingerprint(
    r: &ChannelMatrix,
    n_probes: usize,
    seed: u64,
    cluster_rel_gap: f64,
) -> Result<SpectralFingerprint> {
    assert!(n_probes >= 1);
    let mut rng = stream_rng(seed, STREAM_FINGERPRINT);
    let mut reference: Option<Vec<FingerprintEntry>> = None;
    let mut sums: Vec<f64> = Vec::new();
    for k in 0..n_probes {
        let phi = haar_state(&mut rng, r.dim_in());
        let spectrum = probe_spectrum(r, &phi)?;
        let entries = cluster_spectrum(&spectrum, cluster_rel_gap);
        match &reference {
            None => {
                sums = entries.iter().map(|e| e.weight).collect();
                reference = Some(entries);
            }
            Some(prev) => {
                let matches = prev.len() == entries.len()
                    && prev.iter().zip(&entries).all(|(a, b)| {
                        a.multiplicity == b.multiplicity
                            && (a.weight - b.weight).abs()
                                <= cluster_rel_gap * a.weight.max(b.weight)
                    });
                if !matches {
                    return Err(Error::FingerprintMismatch {
                        detail: format!(
                            "probe {k} produced {entries:?}, expected pattern {prev:?}"
                        ),
                    });
                }
                for (s, e) in sums.iter_mut().zip(&entries) {
                    *s += e.weight;
                }
            }
        }
    }
    let reference = reference.expect("at least one probe");
    let entries: Vec<FingerprintEntry> = reference
        .iter()
        .zip(&sums)
        .map(|(e, &s)| FingerprintEntry {
            weight: s / n_probes as f64,
            multiplicity: e.multiplicity,
        })
        .collect();
    let fp = SpectralFingerprint { entries };
    let total = fp.total_weight();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::FingerprintMismatch {
            detail: format!("fingerprint weights sum to {total}, expected 1"),
        });
    }
    Ok(fp)
}

/// Probe configuration for [`verify_channel`].
#[derive(Debug, Clone, Default)]
pub struct VerifyConfig {
    /// Probe pair count; defaults to max(16, 4·d).
    pub probes: Option<usize>,
    pub seed: u64,
    pub tol: crate::Tolerances,
}

/// Aggregated verification verdict for one channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub dim_in: usize,
    pub dim_out: usize,
    pub trace_preserving: bool,
    pub trace_residual: f64,
    pub positive_on_probes: bool,
    pub worst_min_eigenvalue: f64,
    pub isometry_on_probes: bool,
    pub worst_orthogonality_defect: f64,
    pub dual_support_ok: bool,
    pub worst_dual_support_residual: f64,
    pub completely_positive: bool,
    pub min_choi_eigenvalue: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cp_witness: Option<CpWitness>,
    pub pure_on_probes: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<SpectralFingerprint>,
    pub probes_used: usize,
    pub seed: u64,
}

impl VerifyReport {
    pub fn is_stochastic(&self) -> bool {
        self.trace_preserving && self.positive_on_probes
    }

    pub fn is_isometry(&self) -> bool {
        self.is_stochastic() && self.isometry_on_probes && self.dual_support_ok
    }
}

/// Run the full predicate suite.
pub fn verify_channel(r: &ChannelMatrix, config: &VerifyConfig) -> Result<VerifyReport> {
    let probes = config.probes.unwrap_or_else(|| default_probe_count(r.dim_in()));
    let tol = &config.tol;
    let seed = config.seed;

    let (tp, tp_res) = is_trace_preserving(r, tol.trace_preserving);
    let (pos, worst_min) = positivity_probe(r, probes, seed, tol.positivity)?;
    let iso = isometry_probe(r, probes, seed, tol.isometry_defect)?;
    let (cp, min_choi, witness) = is_completely_positive(r, tol.complete_positivity)?;
    let pure = pure_on_probes(r, probes, seed)?;

    let fingerprint = if tp && pos && iso.ok {
        match mixing_fingerprint(r, probes, seed, tol.cluster_rel_gap) {
            Ok(fp) => Some(fp),
            Err(Error::FingerprintMismatch { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    Ok(VerifyReport {
        dim_in: r.dim_in(),
        dim_out: r.dim_out(),
        trace_preserving: tp,
        trace_residual: tp_res,
        positive_on_probes: pos,
        worst_min_eigenvalue: worst_min,
        isometry_on_probes: iso.worst_orthogonality <= tol.isometry_defect,
        worst_orthogonality_defect: iso.worst_orthogonality,
        dual_support_ok: iso.worst_dual_support <= tol.isometry_defect,
        worst_dual_support_residual: iso.worst_dual_support,
        completely_positive: cp,
        min_choi_eigenvalue: min_choi,
        cp_witness: witness,
        pure_on_probes: pure,
        fingerprint,
        probes_used: probes,
        seed,
    })
}

/// True when all probe images are rank one.
fn pure_on_probes(r: &ChannelMatrix, n_probes: usize, seed: u64) -> Result<bool> {
    let mut rng = stream_rng(seed, STREAM_POSITIVITY);
    for _ in 0..n_probes {
        let phi = haar_state(&mut rng, r.dim_in());
        let spectrum = probe_spectrum(r, &phi)?;
        if spectrum.len() != 1 {
            return Ok(false);
        }
    }
    Ok(true)
}
