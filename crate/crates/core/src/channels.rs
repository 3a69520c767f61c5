//! Discrete-variable channels: generalized Pauli, depolarizing, dephasing and
//! erasure families, their Choi matrices, and the teleportation-covariance
//! check that underwrites the whole simulation story.
//!
//! Conventions fixed here and relied on by tests elsewhere:
//! - generalized Pauli (Weyl) operators are `P_k = X^a Z^b` with `k = a*d + b`;
//! - the generalized Bell basis is `(I (x) P_k)|Phi>` in the same order, so a
//!   Pauli channel's Choi matrix has eigenvalue `p_k` exactly at slot `k`;
//! - erasure channels output dimension `d + 1`, the extra basis state being
//!   the erasure flag, which unitary corrections leave fixed.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermiticity_deviation, partial_trace, re, CMatrix, CVector, DensityMatrix};

/// Completeness tolerance for Kraus lists.
pub const CPTP_TOL: f64 = 1e-10;
/// Tolerance for the covariance conjugation check.
pub const COVARIANCE_TOL: f64 = 1e-10;

/// Probability distribution over the d^2 generalized Pauli operators.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliDistribution {
    d: usize,
    probs: Vec<f64>,
}

impl PauliDistribution {
    pub fn new(d: usize, probs: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::Domain("qudit dimension must be >= 2".into()));
        }
        if probs.len() != d * d {
            return Err(Error::DimMismatch(format!(
                "need {} probabilities for d={}, got {}",
                d * d,
                d,
                probs.len()
            )));
        }
        if probs.iter().any(|&p| p < 0.0) {
            return Err(Error::Domain("negative probability".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("probabilities sum to {sum}")));
        }
        Ok(Self { d, probs })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Channel family tag carried alongside the Kraus data.
#[derive(Clone, Debug, PartialEq)]
pub enum ChannelLabel {
    Depolarizing {
        p: f64,
    },
    Dephasing {
        p: f64,
    },
    Erasure {
        pi: f64,
        d: usize,
    },
    Pauli(PauliDistribution),
    /// Escape hatch: arbitrary Kraus data, no covariance guarantee.
    Raw,
}

/// A completely positive trace-preserving map, carried as a Kraus list.
#[derive(Clone, Debug)]
pub struct QuantumChannel {
    kraus: Vec<CMatrix>,
    d_in: usize,
    d_out: usize,
    label: ChannelLabel,
}

impl QuantumChannel {
    /// Build a channel from raw Kraus operators, checking completeness.
    pub fn from_kraus(kraus: Vec<CMatrix>, label: ChannelLabel) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::Spec("empty Kraus list".into()));
        }
        let d_out = kraus[0].nrows();
        let d_in = kraus[0].ncols();
        if kraus
            .iter()
            .any(|k| k.nrows() != d_out || k.ncols() != d_in)
        {
            return Err(Error::DimMismatch("inconsistent Kraus shapes".into()));
        }
        let mut sum = CMatrix::zeros(d_in, d_in);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        let dev = (&sum - CMatrix::identity(d_in, d_in)).norm();
        if dev > CPTP_TOL {
            return Err(Error::NotCptp(dev));
        }
        Ok(Self {
            kraus,
            d_in,
            d_out,
            label,
        })
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn label(&self) -> &ChannelLabel {
        &self.label
    }
}

/// The d^2 generalized Pauli (Weyl) operators `X^a Z^b`, index `k = a*d + b`.
pub fn generalized_pauli_operators(d: usize) -> Vec<CMatrix> {
    let omega = 2.0 * PI / d as f64;
    let mut ops = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let mut m = CMatrix::zeros(d, d);
            for j in 0..d {
                let phase = omega * (j * b) as f64;
                m[((j + a) % d, j)] = Complex64::new(phase.cos(), phase.sin());
            }
            ops.push(m);
        }
    }
    ops
}

/// Maximally entangled ket `d^{-1/2} sum_j |jj>`.
pub fn maximally_entangled_ket(d: usize) -> CVector {
    let mut v = CVector::zeros(d * d);
    let amp = re(1.0 / (d as f64).sqrt());
    for j in 0..d {
        v[j * d + j] = amp;
    }
    v
}

/// The d^2 generalized Bell kets `(I (x) P_k)|Phi>`, index matching
/// [`generalized_pauli_operators`].
pub fn bell_kets(d: usize) -> Vec<CVector> {
    let phi = maximally_entangled_ket(d);
    generalized_pauli_operators(d)
        .iter()
        .map(|p| {
            let op = CMatrix::identity(d, d).kronecker(p);
            &op * &phi
        })
        .collect()
}

/// Generalized Pauli channel `rho -> sum_k p_k P_k rho P_k^dag`.
pub fn pauli_channel(dist: PauliDistribution) -> QuantumChannel {
    let ops = generalized_pauli_operators(dist.dim());
    let kraus: Vec<CMatrix> = dist
        .probs()
        .iter()
        .zip(&ops)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, op)| op * re(p.sqrt()))
        .collect();
    QuantumChannel::from_kraus(kraus, ChannelLabel::Pauli(dist))
        .expect("Pauli Kraus list is complete by construction")
}

fn check_prob(p: f64, name: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("{name}={p} outside [0, 1]")));
    }
    Ok(())
}

/// Qubit depolarizing channel with Pauli weights `{1-p, p/3, p/3, p/3}`.
pub fn depolarizing(p: f64) -> Result<QuantumChannel> {
    check_prob(p, "p")?;
    let dist = PauliDistribution::new(2, vec![1.0 - p, p / 3.0, p / 3.0, p / 3.0])?;
    let mut ch = pauli_channel(dist);
    ch.label = ChannelLabel::Depolarizing { p };
    Ok(ch)
}

/// Qubit phase-flip channel `rho -> (1-p) rho + p Z rho Z`.
pub fn dephasing(p: f64) -> Result<QuantumChannel> {
    check_prob(p, "p")?;
    // Weight p sits on Z, which is slot k=1 in the X^a Z^b ordering.
    let dist = PauliDistribution::new(2, vec![1.0 - p, p, 0.0, 0.0])?;
    let mut ch = pauli_channel(dist);
    ch.label = ChannelLabel::Dephasing { p };
    Ok(ch)
}

/// Qudit erasure channel `rho -> (1-pi) rho + pi |e><e|`; the output space is
/// `d + 1`-dimensional with the erasure flag as the extra basis state.
pub fn erasure(pi: f64, d: usize) -> Result<QuantumChannel> {
    check_prob(pi, "pi")?;
    if d < 2 {
        return Err(Error::Domain("qudit dimension must be >= 2".into()));
    }
    let mut kraus = Vec::with_capacity(d + 1);
    if pi < 1.0 {
        // sqrt(1-pi) times the embedding of C^d into C^{d+1}.
        let mut k0 = CMatrix::zeros(d + 1, d);
        for j in 0..d {
            k0[(j, j)] = re((1.0 - pi).sqrt());
        }
        kraus.push(k0);
    }
    if pi > 0.0 {
        for j in 0..d {
            let mut k = CMatrix::zeros(d + 1, d);
            k[(d, j)] = re(pi.sqrt());
            kraus.push(k);
        }
    }
    QuantumChannel::from_kraus(kraus, ChannelLabel::Erasure { pi, d })
}

/// Build a channel from its family label.
pub fn make_channel(label: ChannelLabel) -> Result<QuantumChannel> {
    match label {
        ChannelLabel::Depolarizing { p } => depolarizing(p),
        ChannelLabel::Dephasing { p } => dephasing(p),
        ChannelLabel::Erasure { pi, d } => erasure(pi, d),
        ChannelLabel::Pauli(dist) => Ok(pauli_channel(dist)),
        ChannelLabel::Raw => Err(Error::Spec(
            "raw channels carry no parameters; use QuantumChannel::from_kraus".into(),
        )),
    }
}

/// Apply a Kraus list to an arbitrary matrix (linear extension of the map).
pub fn apply_kraus(kraus: &[CMatrix], m: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(kraus[0].nrows(), kraus[0].nrows());
    for k in kraus {
        out += k * m * k.adjoint();
    }
    out
}

/// Apply the channel to a state.
pub fn apply_channel(ch: &QuantumChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != ch.d_in {
        return Err(Error::DimMismatch(format!(
            "state dim {} != channel input dim {}",
            rho.dim(),
            ch.d_in
        )));
    }
    DensityMatrix::new(apply_kraus(&ch.kraus, rho.matrix()))
}

/// Choi matrix `(I (x) E)(Phi)` of a channel; the untouched input leg is the
/// first tensor factor.
#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    state: DensityMatrix,
    d_in: usize,
    d_out: usize,
}

impl ChoiMatrix {
    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }
}

/// Build the Choi matrix of a channel and verify the trace-preservation
/// witness: the input-leg marginal must be maximally mixed.
pub fn choi_matrix(ch: &QuantumChannel) -> Result<ChoiMatrix> {
    let d = ch.d_in;
    let phi = maximally_entangled_ket(d);
    let phi_mat = &phi * phi.adjoint();
    let id = CMatrix::identity(d, d);
    let lifted: Vec<CMatrix> = ch.kraus.iter().map(|k| id.kronecker(k)).collect();
    let state = DensityMatrix::new(apply_kraus(&lifted, &phi_mat))?;
    let marginal = partial_trace(&state, &[d, ch.d_out], &[0])?;
    let dev = (marginal.matrix() - DensityMatrix::maximally_mixed(d).matrix()).norm();
    if dev > 1e-10 {
        return Err(Error::NotCptp(dev));
    }
    Ok(ChoiMatrix {
        state,
        d_in: d,
        d_out: ch.d_out,
    })
}

/// Outcome of the teleportation-covariance check.
#[derive(Clone, Debug)]
pub enum Covariance {
    /// For every teleportation unitary `U_k` a correction `V_k` exists with
    /// `E(U_k rho U_k^dag) = V_k E(rho) V_k^dag`; the list is indexed like
    /// [`generalized_pauli_operators`].
    Covariant { corrections: Vec<CMatrix> },
    /// Some teleportation unitary admits no correction in the search set.
    NotCovariant { witness_index: usize },
}

impl Covariance {
    pub fn is_covariant(&self) -> bool {
        matches!(self, Covariance::Covariant { .. })
    }
}

/// Candidate corrections: the generalized Paulis, embedded block-diagonally
/// (flag state fixed) when the output space is one dimension larger.
fn correction_candidates(ch: &QuantumChannel) -> Result<Vec<CMatrix>> {
    let d = ch.d_in;
    let paulis = generalized_pauli_operators(d);
    if ch.d_out == d {
        Ok(paulis)
    } else if ch.d_out == d + 1 {
        Ok(paulis
            .into_iter()
            .map(|p| {
                let mut v = CMatrix::identity(d + 1, d + 1);
                v.view_mut((0, 0), (d, d)).copy_from(&p);
                v
            })
            .collect())
    } else {
        Err(Error::DimMismatch(format!(
            "covariance check needs d_out in {{d, d+1}}, got {} for d={}",
            ch.d_out, d
        )))
    }
}

/// Spanning set of inputs for the conjugation identity: the d^2 matrix units.
fn matrix_units(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let mut m = CMatrix::zeros(d, d);
            m[(i, j)] = re(1.0);
            out.push(m);
        }
    }
    out
}

/// Search for a correction `V` with `E(U m U^dag) = V E(m) V^dag` on the full
/// matrix-unit basis.
pub fn find_correction(ch: &QuantumChannel, u: &CMatrix) -> Result<Option<CMatrix>> {
    let candidates = correction_candidates(ch)?;
    let units = matrix_units(ch.d_in);
    let outputs: Vec<CMatrix> = units.iter().map(|m| apply_kraus(&ch.kraus, m)).collect();
    let rotated: Vec<CMatrix> = units
        .iter()
        .map(|m| apply_kraus(&ch.kraus, &(u * m * u.adjoint())))
        .collect();
    'cand: for v in candidates {
        for (out, rot) in outputs.iter().zip(&rotated) {
            let dev = (&v * out * v.adjoint() - rot).norm();
            if dev > COVARIANCE_TOL {
                continue 'cand;
            }
        }
        return Ok(Some(v));
    }
    Ok(None)
}

/// Check Eq.-style teleportation covariance against every teleportation
/// unitary, returning the corrections or the first falsifying unitary.
pub fn check_teleportation_covariance(ch: &QuantumChannel) -> Result<Covariance> {
    let paulis = generalized_pauli_operators(ch.d_in);
    let mut corrections = Vec::with_capacity(paulis.len());
    for (k, u) in paulis.iter().enumerate() {
        match find_correction(ch, u)? {
            Some(v) => corrections.push(v),
            None => return Ok(Covariance::NotCovariant { witness_index: k }),
        }
    }
    Ok(Covariance::Covariant { corrections })
}

/// Bures fidelity between two Pauli-channel Choi matrices: the Bhattacharyya
/// overlap of the Pauli distributions.
pub fn pauli_choi_fidelity(p0: &PauliDistribution, p1: &PauliDistribution) -> Result<f64> {
    if p0.dim() != p1.dim() {
        return Err(Error::DimMismatch("distributions over different d".into()));
    }
    Ok(p0
        .probs()
        .iter()
        .zip(p1.probs())
        .map(|(&a, &b)| (a * b).sqrt())
        .sum())
}

/// Relative entropy (bits) between Choi matrices of two same-family
/// depolarizing/dephasing/erasure channels with total error probabilities
/// `p` and `q`.
pub fn pauli_relative_entropy(p: f64, q: f64) -> Result<f64> {
    check_prob(p, "p")?;
    check_prob(q, "q")?;
    if p == q {
        return Ok(0.0);
    }
    // kl term x*log2(x/y), with 0 log 0 = 0 and x>0, y=0 -> infinity
    let term = |x: f64, y: f64| -> f64 {
        if x == 0.0 {
            0.0
        } else if y == 0.0 {
            f64::INFINITY
        } else {
            x * (x / y).log2()
        }
    };
    Ok(term(1.0 - p, 1.0 - q) + term(p, q))
}

/// Max Bell-basis off-diagonal magnitude; Pauli-channel Choi matrices must be
/// Bell-diagonal.
pub fn bell_offdiagonal_norm(choi: &ChoiMatrix) -> f64 {
    let kets = bell_kets(choi.d_in);
    let mut max: f64 = 0.0;
    for (i, a) in kets.iter().enumerate() {
        for (j, b) in kets.iter().enumerate() {
            if i == j {
                continue;
            }
            let v = (a.adjoint() * choi.state.matrix() * b)[(0, 0)].norm();
            max = max.max(v);
        }
    }
    max
}

/// Eigenvalue of the Choi matrix along Bell ket `k` (diagonal entry in the
/// Bell basis).
pub fn bell_diagonal_entry(choi: &ChoiMatrix, k: usize) -> f64 {
    let kets = bell_kets(choi.d_in);
    (kets[k].adjoint() * choi.state.matrix() * &kets[k])[(0, 0)].re
}

/// Amplitude damping with decay probability `gamma`; not teleportation
/// covariant, used as the counterexample channel.
pub fn amplitude_damping(gamma: f64) -> Result<QuantumChannel> {
    check_prob(gamma, "gamma")?;
    let k0 = CMatrix::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re((1.0 - gamma).sqrt())]);
    let k1 = CMatrix::from_row_slice(2, 2, &[re(0.0), re(gamma.sqrt()), re(0.0), re(0.0)]);
    QuantumChannel::from_kraus(vec![k0, k1], ChannelLabel::Raw)
}

/// Hermiticity guard used when consuming externally supplied Kraus data.
pub fn kraus_sanity(kraus: &[CMatrix]) -> Result<()> {
    if kraus.is_empty() {
        return Err(Error::Spec("empty Kraus list".into()));
    }
    let d = kraus[0].ncols();
    let mut sum = CMatrix::zeros(d, d);
    for k in kraus {
        sum += k.adjoint() * k;
    }
    let dev = hermiticity_deviation(&sum).max((&sum - CMatrix::identity(d, d)).norm());
    if dev > CPTP_TOL {
        return Err(Error::NotCptp(dev));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::fidelity;
    use crate::sample;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn weyl_operators_qubit() {
        let ops = generalized_pauli_operators(2);
        assert_eq!(ops.len(), 4);
        assert!((&ops[0] - CMatrix::identity(2, 2)).norm() < 1e-15);
        // k=1 is Z, k=2 is X.
        assert_relative_eq!(ops[1][(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(ops[1][(1, 1)].re, -1.0, epsilon = 1e-12);
        assert_relative_eq!(ops[2][(1, 0)].re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(ops[2][(0, 1)].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn weyl_operators_unitary_and_orthogonal() {
        for d in [2usize, 3] {
            let ops = generalized_pauli_operators(d);
            for p in &ops {
                assert!((p * p.adjoint() - CMatrix::identity(d, d)).norm() < 1e-12);
            }
            for (j, pj) in ops.iter().enumerate() {
                for (k, pk) in ops.iter().enumerate() {
                    let tr = (pj.adjoint() * pk).trace();
                    let expect = if j == k { d as f64 } else { 0.0 };
                    assert!((tr - re(expect)).norm() < 1e-12, "d={d} j={j} k={k}");
                }
            }
        }
    }

    #[test]
    fn depolarizing_limits() {
        let id = depolarizing(0.0).unwrap();
        assert_eq!(id.kraus().len(), 1);
        assert!((id.kraus()[0].clone() - CMatrix::identity(2, 2)).norm() < 1e-15);

        // p = 3/4 sends every Pauli eigenstate to I/2.
        let ch = depolarizing(0.75).unwrap();
        let kets: Vec<CVector> = vec![
            CVector::from_column_slice(&[re(1.0), re(0.0)]),
            CVector::from_column_slice(&[re(0.0), re(1.0)]),
            CVector::from_column_slice(&[re(1.0 / 2f64.sqrt()), re(1.0 / 2f64.sqrt())]),
            CVector::from_column_slice(&[re(1.0 / 2f64.sqrt()), re(-1.0 / 2f64.sqrt())]),
            CVector::from_column_slice(&[
                re(1.0 / 2f64.sqrt()),
                Complex64::new(0.0, 1.0 / 2f64.sqrt()),
            ]),
            CVector::from_column_slice(&[
                re(1.0 / 2f64.sqrt()),
                Complex64::new(0.0, -1.0 / 2f64.sqrt()),
            ]),
        ];
        for ket in kets {
            let rho = DensityMatrix::from_pure(&ket).unwrap();
            let out = apply_channel(&ch, &rho).unwrap();
            assert!((out.matrix() - DensityMatrix::maximally_mixed(2).matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn erasure_limits() {
        let ch = erasure(1.0, 2).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        let out = apply_channel(&ch, &rho).unwrap();
        let mut expect = CMatrix::zeros(3, 3);
        expect[(2, 2)] = re(1.0);
        assert!((out.matrix() - &expect).norm() < 1e-14);
    }

    #[test]
    fn apply_channel_dim_mismatch() {
        let ch = depolarizing(0.2).unwrap();
        let rho = DensityMatrix::maximally_mixed(3);
        assert!(matches!(
            apply_channel(&ch, &rho),
            Err(Error::DimMismatch(_))
        ));
    }

    #[test]
    fn dephasing_half_kills_coherence() {
        let plus = CVector::from_column_slice(&[re(1.0 / 2f64.sqrt()), re(1.0 / 2f64.sqrt())]);
        let rho = DensityMatrix::from_pure(&plus).unwrap();
        let ch = dephasing(0.5).unwrap();
        let out = apply_channel(&ch, &rho).unwrap();
        assert!((out.matrix() - DensityMatrix::maximally_mixed(2).matrix()).norm() < 1e-14);
    }

    #[test]
    fn channels_preserve_psd_and_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let rho = sample::random_density(2, 2, &mut rng);
            for ch in [
                depolarizing(0.3).unwrap(),
                dephasing(0.7).unwrap(),
                erasure(0.4, 2).unwrap(),
            ] {
                // apply_channel validates PSD and unit trace on construction.
                apply_channel(&ch, &rho).unwrap();
            }
        }
    }

    #[test]
    fn choi_of_identity_is_bell_projector() {
        let dist = PauliDistribution::new(2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let ch = pauli_channel(dist);
        let choi = choi_matrix(&ch).unwrap();
        let phi = maximally_entangled_ket(2);
        let expect = &phi * phi.adjoint();
        assert!((choi.state().matrix() - &expect).norm() < 1e-14);
    }

    #[test]
    fn choi_eigenvalues_bell_placement() {
        let p = 0.3;
        let choi = choi_matrix(&depolarizing(p).unwrap()).unwrap();
        let expect = [1.0 - p, p / 3.0, p / 3.0, p / 3.0];
        for (k, &e) in expect.iter().enumerate() {
            assert_relative_eq!(bell_diagonal_entry(&choi, k), e, epsilon = 1e-12);
        }
        assert!(bell_offdiagonal_norm(&choi) < 1e-12);

        let choi = choi_matrix(&dephasing(p).unwrap()).unwrap();
        let expect = [1.0 - p, p, 0.0, 0.0];
        for (k, &e) in expect.iter().enumerate() {
            assert_relative_eq!(bell_diagonal_entry(&choi, k), e, epsilon = 1e-12);
        }
    }

    #[test]
    fn erasure_choi_entrywise() {
        let pi = 0.35;
        let choi = choi_matrix(&erasure(pi, 2).unwrap()).unwrap();
        let phi = maximally_entangled_ket(2);
        let phi_mat = &phi * phi.adjoint();
        // Embed Phi into the 2x3 output-leg space.
        let mut embed = CMatrix::zeros(6, 4);
        for i in 0..2 {
            for j in 0..2 {
                embed[(3 * i + j, 2 * i + j)] = re(1.0);
            }
        }
        let mut expect = &embed * phi_mat * embed.adjoint() * re(1.0 - pi);
        for i in 0..2 {
            expect[(3 * i + 2, 3 * i + 2)] += re(pi * 0.5);
        }
        assert!((choi.state().matrix() - &expect).norm() < 1e-13);
    }

    #[test]
    fn covariance_of_builtin_families() {
        for ch in [
            depolarizing(0.3).unwrap(),
            dephasing(0.6).unwrap(),
            erasure(0.25, 2).unwrap(),
            erasure(0.25, 3).unwrap(),
        ] {
            let cov = check_teleportation_covariance(&ch).unwrap();
            assert!(cov.is_covariant(), "{:?} not covariant", ch.label());
        }

        // Depolarizing admits V_k = U_k.
        let ch = depolarizing(0.3).unwrap();
        if let Covariance::Covariant { corrections } = check_teleportation_covariance(&ch).unwrap()
        {
            let paulis = generalized_pauli_operators(2);
            for (v, u) in corrections.iter().zip(&paulis) {
                assert!((v - u).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn amplitude_damping_not_covariant() {
        let ch = amplitude_damping(0.5).unwrap();
        match check_teleportation_covariance(&ch).unwrap() {
            Covariance::NotCovariant { witness_index } => {
                // I and Z commute with damping; X (slot 2) is the witness.
                assert_eq!(witness_index, 2);
            }
            Covariance::Covariant { .. } => panic!("amplitude damping must fail"),
        }
    }

    #[test]
    fn pauli_fidelity_matches_matrix_fidelity() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for d in [2usize, 3] {
            for _ in 0..25 {
                let p0 = PauliDistribution::new(d, sample::random_distribution(d * d, &mut rng))
                    .unwrap();
                let p1 = PauliDistribution::new(d, sample::random_distribution(d * d, &mut rng))
                    .unwrap();
                let f_cls = pauli_choi_fidelity(&p0, &p1).unwrap();
                let c0 = choi_matrix(&pauli_channel(p0)).unwrap();
                let c1 = choi_matrix(&pauli_channel(p1)).unwrap();
                let f_mat = fidelity(c0.state(), c1.state()).unwrap();
                assert_relative_eq!(f_cls, f_mat, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn pauli_fidelity_expansion() {
        // F(p, p+dp) ~ 1 - (1/8) sum dp_k^2 / p_k
        let p = 0.3;
        let dp = 1e-3;
        let p0 = PauliDistribution::new(2, vec![1.0 - p, p / 3.0, p / 3.0, p / 3.0]).unwrap();
        let q = p + dp;
        let p1 = PauliDistribution::new(2, vec![1.0 - q, q / 3.0, q / 3.0, q / 3.0]).unwrap();
        let f = pauli_choi_fidelity(&p0, &p1).unwrap();
        let quad: f64 = p0
            .probs()
            .iter()
            .zip(p1.probs())
            .map(|(&a, &b)| (b - a) * (b - a) / a)
            .sum();
        assert_relative_eq!(1.0 - f, quad / 8.0, max_relative = 1e-2);
    }

    #[test]
    fn pauli_fidelity_trivial() {
        let p = PauliDistribution::new(2, vec![0.4, 0.2, 0.2, 0.2]).unwrap();
        assert_relative_eq!(pauli_choi_fidelity(&p, &p).unwrap(), 1.0, epsilon = 1e-14);
        let a = PauliDistribution::new(2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let b = PauliDistribution::new(2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(pauli_choi_fidelity(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn pauli_relative_entropy_cases() {
        assert_eq!(pauli_relative_entropy(0.3, 0.3).unwrap(), 0.0);
        let s = pauli_relative_entropy(0.25, 0.5).unwrap();
        let expect = 0.75 * (1.5f64).log2() + 0.25 * (0.5f64).log2();
        assert_relative_eq!(s, expect, epsilon = 1e-12);
        assert!(pauli_relative_entropy(0.25, 0.0).unwrap().is_infinite());
        assert!(pauli_relative_entropy(0.25, 1.0).unwrap().is_infinite());
    }

    #[test]
    fn pauli_relative_entropy_matches_choi() {
        use crate::linalg::relative_entropy;
        let (p, q) = (0.2, 0.45);
        let c0 = choi_matrix(&depolarizing(p).unwrap()).unwrap();
        let c1 = choi_matrix(&depolarizing(q).unwrap()).unwrap();
        let s_mat = relative_entropy(c0.state(), c1.state()).unwrap();
        // Depolarizing splits the error weight in three, so the matrix

        // entropy decomposes over the 4-outcome Bell distribution.
        let s_dist: f64 = [1.0 - p, p / 3.0, p / 3.0, p / 3.0]
            .iter()
            .zip([1.0 - q, q / 3.0, q / 3.0, q / 3.0].iter())
            .map(|(&a, &b)| if a == 0.0 { 0.0 } else { a * (a / b).log2() })
            .sum();
        assert_relative_eq!(s_mat, s_dist, epsilon = 1e-10);
        // And the two-point closed form matches the dephasing Choi pair.
        let c0 = choi_matrix(&dephasing(p).unwrap()).unwrap();
        let c1 = choi_matrix(&dephasing(q).unwrap()).unwrap();
        let s_mat = relative_entropy(c0.state(), c1.state()).unwrap();
        assert_relative_eq!(
            s_mat,
            pauli_relative_entropy(p, q).unwrap(),
            epsilon = 1e-10
        );
    }
}
