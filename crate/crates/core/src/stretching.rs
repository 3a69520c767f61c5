//! Executable adaptive protocols and their teleportation-stretched form.
//!
//! A protocol interleaves register operations with probe transmissions. The
//! direct evaluator [`run_adaptive`] threads the channel through the register
//! round by round. The stretched evaluator [`run_stretched`] replaces every
//! transmission with teleportation over a fresh Choi copy and applies the
//! resulting channel-parameter-independent map to `choi^{(x)n} (x) rho0`,
//! which is exactly the reduction the bounds in [`crate::metrology`] and
//! [`crate::discrimination`] rest on. The two evaluators must agree to
//! numerical precision, and the fuzz harness checks the no-go inequality
//! `I(P) <= n B` on randomly drawn protocols.
//!
//! Measurements inside the register operations are deferred: protocols are
//! CPTP maps only, and Bell outcomes are averaged with their corrections,
//! which keeps every evaluator deterministic.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channels::{
    apply_kraus, bell_kets, choi_matrix, find_correction, generalized_pauli_operators, ChoiMatrix,
    QuantumChannel,
};
use crate::error::{Error, Result};
use crate::linalg::{fidelity, re, trace_norm_diff, CMatrix, CVector, DensityMatrix};
use crate::sample;

/// Agreement tolerance between the direct and stretched evaluators.
pub const STRETCH_TOL: f64 = 1e-10;

/// Kraus completeness tolerance for protocol operations.
const OP_TOL: f64 = 1e-10;

/// One probing round: which register slot goes through the box, then a joint
/// operation on the whole register.
#[derive(Clone, Debug)]
pub struct ProtocolRound {
    pub probe_slot: usize,
    pub op: Vec<CMatrix>,
}

/// A finite adaptive protocol: register layout, preparation map, and the
/// interleaved rounds.
#[derive(Clone, Debug)]
pub struct AdaptiveProtocol {
    register_dims: Vec<usize>,
    initial_op: Vec<CMatrix>,
    rounds: Vec<ProtocolRound>,
}

fn check_completeness(kraus: &[CMatrix], dim: usize, what: &str) -> Result<()> {
    if kraus.is_empty() {
        return Err(Error::Spec(format!("{what}: empty Kraus list")));
    }
    if kraus.iter().any(|k| k.ncols() != dim || k.nrows() != dim) {
        return Err(Error::DimMismatch(format!(
            "{what}: operations on the register must be {dim}x{dim}"
        )));
    }
    let mut sum = CMatrix::zeros(dim, dim);
    for k in kraus {
        sum += k.adjoint() * k;
    }
    let dev = (&sum - CMatrix::identity(dim, dim)).norm();
    if dev > OP_TOL {
        return Err(Error::NotCptp(dev));
    }
    Ok(())
}

impl AdaptiveProtocol {
    pub fn new(
        register_dims: Vec<usize>,
        initial_op: Vec<CMatrix>,
        rounds: Vec<ProtocolRound>,
    ) -> Result<Self> {
        if register_dims.is_empty() || register_dims.iter().any(|&d| d < 2) {
            return Err(Error::Spec("register dims must all be >= 2".into()));
        }
        let prot = Self {
            register_dims,
            initial_op,
            rounds,
        };
        // Shape checks that do not depend on the channel signature.
        let dim: usize = prot.register_dims.iter().product();
        check_completeness(&prot.initial_op, dim, "initial op")?;
        Ok(prot)
    }

    pub fn n_rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn register_dims(&self) -> &[usize] {
        &self.register_dims
    }

    pub fn rounds(&self) -> &[ProtocolRound] {
        &self.rounds
    }

    pub fn initial_op(&self) -> &[CMatrix] {
        &self.initial_op
    }

    /// Validate probe-slot dims and per-round completeness against a channel
    /// signature, tracking the register dims as transmissions change them.
    pub fn validate_against(&self, d_in: usize, d_out: usize) -> Result<()> {
        let mut dims = self.register_dims.clone();
        for (i, round) in self.rounds.iter().enumerate() {
            if round.probe_slot >= dims.len() {
                return Err(Error::DimMismatch(format!(
                    "round {i}: probe slot {} out of range",
                    round.probe_slot
                )));
            }
            if dims[round.probe_slot] != d_in {
                return Err(Error::DimMismatch(format!(
                    "round {i}: probe slot dim {} != channel input dim {d_in}",
                    dims[round.probe_slot]
                )));
            }
            dims[round.probe_slot] = d_out;
            let dim: usize = dims.iter().product();
            check_completeness(&round.op, dim, "round op")?;
        }
        Ok(())
    }

    /// The non-adaptive protocol that saturates the adaptive QFI: prepare `n`
    /// maximally entangled pairs and send one half of each through the box.
    pub fn bell_probe(d_in: usize, d_out: usize, n: usize) -> Result<Self> {
        let pair = crate::channels::maximally_entangled_ket(d_in);
        let mut target = pair.clone();
        for _ in 1..n {
            target = kron_vec(&target, &pair);
        }
        let prep = sample::unitary_with_first_column(&target);

        let mut rounds = Vec::with_capacity(n);
        let mut dims = vec![d_in; 2 * n];
        for i in 0..n {
            // Halves live at the odd positions; send those through the box.
            let slot = 2 * i + 1;
            dims[slot] = d_out;
            let dim = dims.iter().product();
            rounds.push(ProtocolRound {
                probe_slot: slot,
                op: vec![CMatrix::identity(dim, dim)],
            });
        }
        Self::new(vec![d_in; 2 * n], vec![prep], rounds)
    }

    /// A protocol that discards every channel output and re-prepares the
    /// probe, so its output state carries no parameter information.
    /// Square channels only.
    pub fn channel_ignoring(d: usize, n: usize) -> Result<Self> {
        let dims = vec![d, d];
        let dim = d * d;
        let reset: Vec<CMatrix> = (0..d)
            .map(|m| {
                let mut take = CMatrix::zeros(d, d);
                take[(0, m)] = re(1.0);
                take.kronecker(&CMatrix::identity(d, d))
            })
            .collect();
        let rounds = (0..n)
            .map(|_| ProtocolRound {
                probe_slot: 0,
                op: reset.clone(),
            })
            .collect();
        Self::new(dims, vec![CMatrix::identity(dim, dim)], rounds)
    }
}

fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[i * b.len() + j] = a[i] * b[j];
        }
    }
    out
}

/// Dense register of subsystems with stable ids, supporting the operations
/// the two evaluators need.
struct Register {
    /// `(id, dim)` in tensor order.
    subsystems: Vec<(u32, usize)>,
    state: CMatrix,
}

impl Register {
    fn new(subsystems: Vec<(u32, usize)>, state: CMatrix) -> Self {
        debug_assert_eq!(
            subsystems.iter().map(|&(_, d)| d).product::<usize>(),
            state.nrows()
        );
        Self { subsystems, state }
    }

    fn dim(&self) -> usize {
        self.state.nrows()
    }

    fn position(&self, id: u32) -> usize {
        self.subsystems
            .iter()
            .position(|&(i, _)| i == id)
            .expect("subsystem id present")
    }

    /// Reorder subsystems so that `front` (by id) come first, in the given
    /// order, with the remaining subsystems keeping their relative order.
    fn bring_to_front(&mut self, front: &[u32]) {
        let mut order: Vec<usize> = front.iter().map(|&id| self.position(id)).collect();
        for i in 0..self.subsystems.len() {
            if !order.contains(&i) {
                order.push(i);
            }
        }
        self.permute(&order);
    }

    /// Apply the permutation `order[new_pos] = old_pos` to the subsystems.
    fn permute(&mut self, order: &[usize]) {
        if order.iter().enumerate().all(|(a, &b)| a == b) {
            return;
        }
        let old_dims: Vec<usize> = self.subsystems.iter().map(|&(_, d)| d).collect();
        let n = old_dims.len();
        let mut old_strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            old_strides[i] = old_strides[i + 1] * old_dims[i + 1];
        }
        let dim = self.dim();
        // map[new_full_index] = old_full_index
        let mut map = vec![0usize; dim];
        let new_dims: Vec<usize> = order.iter().map(|&o| old_dims[o]).collect();
        for (new_idx, slot) in map.iter_mut().enumerate() {
            let mut rem = new_idx;
            let mut old_idx = 0;
            for pos in (0..n).rev() {
                let digit = rem % new_dims[pos];
                rem /= new_dims[pos];
                old_idx += digit * old_strides[order[pos]];
            }
            *slot = old_idx;
        }
        let mut out = CMatrix::zeros(dim, dim);
        for r in 0..dim {
            for c in 0..dim {
                out[(r, c)] = self.state[(map[r], map[c])];
            }
        }
        self.state = out;
        self.subsystems = order.iter().map(|&o| self.subsystems[o]).collect();
    }

    /// Apply a Kraus family acting on the leading `front_dim` factor.
    fn apply_kraus_front(&mut self, kraus: &[CMatrix], front_dim: usize) {
        let rest = self.dim() / front_dim;
        let lifted: Vec<CMatrix> = kraus
            .iter()
            .map(|k| k.kronecker(&CMatrix::identity(rest, rest)))
            .collect();
        self.state = apply_kraus(&lifted, &self.state);
    }

    /// Apply a channel's Kraus list to one subsystem, updating its dimension.
    fn apply_channel_at(&mut self, id: u32, kraus: &[CMatrix], d_in: usize, d_out: usize) {
        self.bring_to_front(&[id]);
        debug_assert_eq!(self.subsystems[0].1, d_in);
        self.apply_kraus_front(kraus, d_in);
        self.subsystems[0].1 = d_out;
    }

    /// Tensor another state onto the right end of the register.
    fn append(&mut self, subsystems: &[(u32, usize)], state: &CMatrix) {
        self.state = self.state.kronecker(state);
        self.subsystems.extend_from_slice(subsystems);
    }

    /// Average Bell measurement over subsystems `(a, b)` with unitary
    /// corrections applied to `target`: the teleportation LOCC made
    /// trace-preserving by summing the outcomes.
    fn bell_teleport(
        &mut self,
        a: u32,
        b: u32,
        target: u32,
        bell: &[CVector],
        corrections: &[CMatrix],
    ) {
        self.bring_to_front(&[a, b]);
        let da = self.subsystems[0].1;
        let db = self.subsystems[1].1;
        let pair = da * db;
        debug_assert_eq!(pair, bell[0].len());
        let rest = self.dim() / pair;

        // Position (and dimension) of the correction target in the reduced
        // register.
        let target_pos = self
            .subsystems
            .iter()
            .skip(2)
            .position(|&(i, _)| i == target)
            .expect("target id present");
        let pre: usize = self.subsystems[2..2 + target_pos]
            .iter()
            .map(|&(_, d)| d)
            .product();
        let d_t = self.subsystems[2 + target_pos].1;
        let post = rest / (pre * d_t);

        let mut out = CMatrix::zeros(rest, rest);
        for (k, ket) in bell.iter().enumerate() {
            // block_k = (<beta_k| (x) I) rho (|beta_k> (x) I)
            let mut block = CMatrix::zeros(rest, rest);
            for x in 0..pair {
                let bx = ket[x].conj();
                if bx.norm() == 0.0 {
                    continue;
                }
                for y in 0..pair {
                    let by = ket[y];
                    if by.norm() == 0.0 {
                        continue;
                    }
                    let w = bx * by;
                    let xo = x * rest;
                    let yo = y * rest;
                    for r in 0..rest {
                        for c in 0..rest {
                            block[(r, c)] += w * self.state[(xo + r, yo + c)];
                        }
                    }
                }
            }
            // Undo the teleportation unitary on the target leg.
            let v_dag = corrections[k].adjoint();
            let lifted = CMatrix::identity(pre, pre)
                .kronecker(&v_dag)
                .kronecker(&CMatrix::identity(post, post));
            out += &lifted * block * lifted.adjoint();
        }
        self.state = out;
        self.subsystems.drain(0..2);
    }
}

/// Teleportation simulation data for one covariant channel: the Choi
/// resource, the Bell basis, and the correction for each outcome.
#[derive(Clone, Debug)]
pub struct TeleportationSimulation {
    resource: ChoiMatrix,
    bell: Vec<CVector>,
    corrections: Vec<CMatrix>,
    kraus: Vec<CMatrix>,
}

impl TeleportationSimulation {
    /// Build the simulation; fails with a covariance witness if some
    /// teleportation unitary admits no correction.
    pub fn new(ch: &QuantumChannel) -> Result<Self> {
        let d = ch.d_in();
        let paulis = generalized_pauli_operators(d);
        let mut corrections = Vec::with_capacity(paulis.len());
        for (k, p) in paulis.iter().enumerate() {
            // Bell outcome k teleports the input up to conj(P_k).
            let induced = p.map(|z| z.conj());
            match find_correction(ch, &induced)? {
                Some(v) => corrections.push(v),
                None => return Err(Error::NotCovariant { witness: k }),
            }
        }
        Ok(Self {
            resource: choi_matrix(ch)?,
            bell: bell_kets(d),
            corrections,
            kraus: ch.kraus().to_vec(),
        })
    }

    pub fn resource(&self) -> &ChoiMatrix {
        &self.resource
    }

    pub fn bell_projectors(&self) -> Vec<CMatrix> {
        self.bell.iter().map(|k| k * k.adjoint()).collect()
    }

    pub fn corrections(&self) -> &[CMatrix] {
        &self.corrections
    }
}

/// Simulate the channel on `rho` by teleporting over the Choi resource:
/// Bell-measure the input against the resource's input leg, apply the
/// outcome correction, average. Errors if the result strays from the direct
/// channel application.
pub fn teleport_simulate(
    sim: &TeleportationSimulation,
    rho: &DensityMatrix,
) -> Result<DensityMatrix> {
    let d_in = sim.resource.d_in();
    let d_out = sim.resource.d_out();
    if rho.dim() != d_in {
        return Err(Error::DimMismatch(format!(
            "input dim {} != channel input {d_in}",
            rho.dim()
        )));
    }
    let mut reg = Register::new(vec![(0, d_in)], rho.matrix().clone());
    reg.append(&[(1, d_in), (2, d_out)], sim.resource.state().matrix());
    reg.bell_teleport(0, 1, 2, &sim.bell, &sim.corrections);

    let direct = apply_kraus(&sim.kraus, rho.matrix());
    let residual = trace_norm_diff(&reg.state, &direct);
    if residual > STRETCH_TOL {
        return Err(Error::SimulationMismatch(residual));
    }
    DensityMatrix::new(reg.state)
}

/// Run the protocol against the channel directly: prepare, then alternate
/// transmissions and register operations.
pub fn run_adaptive(prot: &AdaptiveProtocol, ch: &QuantumChannel) -> Result<DensityMatrix> {
    prot.validate_against(ch.d_in(), ch.d_out())?;
    let dims = prot.register_dims();
    let dim: usize = dims.iter().product();
    let mut state = CMatrix::zeros(dim, dim);
    state[(0, 0)] = re(1.0);
    let subsystems: Vec<(u32, usize)> = dims
        .iter()
        .enumerate()
        .map(|(i, &d)| (i as u32, d))
        .collect();
    let mut reg = Register::new(subsystems, state);

    let slot_ids: Vec<u32> = (0..dims.len() as u32).collect();
    reg.bring_to_front(&slot_ids);
    reg.apply_kraus_front(&prot.initial_op, reg.dim());

    for round in prot.rounds() {
        reg.apply_channel_at(
            slot_ids[round.probe_slot],
            ch.kraus(),
            ch.d_in(),
            ch.d_out(),
        );
        reg.bring_to_front(&slot_ids);
        reg.apply_kraus_front(&round.op, reg.dim());
    }
    reg.bring_to_front(&slot_ids);
    DensityMatrix::new(reg.state)
}

/// The collapsed, parameter-independent map of the stretched protocol. Its
/// data are the protocol's own operations plus the teleportation corrections;
/// two members of one covariant family share it exactly, only the Choi
/// copies differ.
#[derive(Clone, Debug)]
pub struct CollapsedMap {
    register_dims: Vec<usize>,
    d_in: usize,
    d_out: usize,
    bell: Vec<CVector>,
    corrections: Vec<CMatrix>,
    initial_op: Vec<CMatrix>,
    rounds: Vec<ProtocolRound>,
}

impl CollapsedMap {
    /// Structural equality of the collapsed data (the theta-independence
    /// witness): every operator is compared exactly.
    pub fn same_structure(&self, other: &CollapsedMap) -> bool {
        self.register_dims == other.register_dims
            && self.d_in == other.d_in
            && self.d_out == other.d_out
            && self.bell == other.bell
            && self.corrections == other.corrections
            && self.initial_op == other.initial_op
            && self.rounds.len() == other.rounds.len()
            && self
                .rounds
                .iter()
                .zip(&other.rounds)
                .all(|(a, b)| a.probe_slot == b.probe_slot && a.op == b.op)
    }

    /// Number of Choi copies the map consumes.
    pub fn copies(&self) -> usize {
        self.rounds.len()
    }

    /// Evaluate the collapsed map on `choi^{(x) n} (x) rho0`.
    ///
    /// The Choi copies are laid out first, the protocol register last; each
    /// round consumes one copy through an averaged Bell measurement with
    /// corrections, after which the copy's output leg takes over the probe
    /// slot.
    pub fn apply(&self, choi: &ChoiMatrix) -> Result<DensityMatrix> {
        if choi.d_in() != self.d_in || choi.d_out() != self.d_out {
            return Err(Error::DimMismatch(
                "Choi copy does not match the protocol's channel signature".into(),
            ));
        }
        let n = self.rounds.len();
        let k = self.register_dims.len();

        // Ids: Choi copy i gets (2i, 2i+1) = (input leg, output leg);
        // register slots get 2n + r.
        let mut subsystems = Vec::new();
        let mut state = CMatrix::from_element(1, 1, re(1.0));
        for i in 0..n {
            subsystems.push(((2 * i) as u32, self.d_in));
            subsystems.push(((2 * i + 1) as u32, self.d_out));
            state = state.kronecker(choi.state().matrix());
        }
        // Protocol register prepared by the initial operation.
        let reg_dim: usize = self.register_dims.iter().product();
        let mut reg0 = CMatrix::zeros(reg_dim, reg_dim);
        reg0[(0, 0)] = re(1.0);
        reg0 = apply_kraus(&self.initial_op, &reg0);
        for (r, &d) in self.register_dims.iter().enumerate() {
            subsystems.push(((2 * n + r) as u32, d));
        }
        state = state.kronecker(&reg0);

        let mut reg = Register::new(subsystems, state);
        let mut slot_ids: Vec<u32> = (0..k as u32).map(|r| 2 * n as u32 + r).collect();
        let mut reg_dims = self.register_dims.clone();

        for (i, round) in self.rounds.iter().enumerate() {
            let probe_id = slot_ids[round.probe_slot];
            let choi_in = (2 * i) as u32;
            let choi_out = (2 * i + 1) as u32;
            reg.bell_teleport(probe_id, choi_in, choi_out, &self.bell, &self.corrections);
            // The copy's output leg now plays the probe slot's role.
            slot_ids[round.probe_slot] = choi_out;
            reg_dims[round.probe_slot] = self.d_out;
            reg.bring_to_front(&slot_ids);
            reg.apply_kraus_front(&round.op, reg_dims.iter().product());
        }
        reg.bring_to_front(&slot_ids);
        DensityMatrix::new(reg.state)
    }
}

/// Build the collapsed map for a protocol over a covariant channel.
pub fn collapsed_map(prot: &AdaptiveProtocol, ch: &QuantumChannel) -> Result<CollapsedMap> {
    prot.validate_against(ch.d_in(), ch.d_out())?;
    let sim = TeleportationSimulation::new(ch)?;
    Ok(CollapsedMap {
        register_dims: prot.register_dims().to_vec(),
        d_in: ch.d_in(),
        d_out: ch.d_out(),
        bell: sim.bell,
        corrections: sim.corrections,
        initial_op: prot.initial_op().to_vec(),
        rounds: prot.rounds().to_vec(),
    })
}

/// Run the protocol in stretched form: collapse it, then evaluate on
/// `choi^{(x) n} (x) rho0`.
pub fn run_stretched(prot: &AdaptiveProtocol, ch: &QuantumChannel) -> Result<DensityMatrix> {
    let map = collapsed_map(prot, ch)?;
    let choi = choi_matrix(ch)?;
    map.apply(&choi)
}

/// Protocol-dependent QFI: `8 (1 - F(rho_ab(theta), rho_ab(theta+dtheta))) /
/// dtheta^2` with the protocol run at both parameter values.
pub fn protocol_qfi(
    prot: &AdaptiveProtocol,
    channel_at: impl Fn(f64) -> Result<QuantumChannel>,
    theta: f64,
    dtheta: f64,
) -> Result<f64> {
    if dtheta <= 0.0 {
        return Err(Error::Domain("dtheta must be > 0".into()));
    }
    let out0 = run_adaptive(prot, &channel_at(theta)?)?;
    let out1 = run_adaptive(prot, &channel_at(theta + dtheta)?)?;
    let f = fidelity(&out0, &out1)?;
    Ok((8.0 * (1.0 - f) / (dtheta * dtheta)).max(0.0))
}

/// Summary of one randomized no-go run.
#[derive(Clone, Debug)]
pub struct FuzzReport {
    pub trials: usize,
    pub n: usize,
    /// Per-probe closed-form QFI `B(theta)` used in the denominators.
    pub b_per_probe: f64,
    /// `I(P) / (n B)` per random protocol.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Ratio achieved by the planted maximally-entangled-probe protocol.
    pub planted_ratio: f64,
}

impl FuzzReport {
    pub fn max_ratio_within(&self, slack: f64) -> bool {
        self.max_ratio <= 1.0 + slack
    }
}

/// Sample random adaptive protocols and record their QFI against the `n B`
/// ceiling; the planted Bell-probe protocol is evaluated alongside as the
/// tightness witness. Trials run in parallel with per-trial seeds derived
/// from `seed`, so the report is reproducible.
pub fn fuzz_no_go(
    channel_at: impl Fn(f64) -> Result<QuantumChannel> + Sync,
    b_per_probe: f64,
    theta: f64,
    dtheta: f64,
    trials: usize,
    n: usize,
    seed: u64,
) -> Result<FuzzReport> {
    let ch = channel_at(theta)?;
    let d_in = ch.d_in();
    let d_out = ch.d_out();
    if d_in != d_out {
        return Err(Error::DimMismatch(
            "fuzz harness drives square channels only".into(),
        ));
    }
    let d = d_in;
    let denominator = n as f64 * b_per_probe;

    let ratios: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
            let dims = vec![d; 3.min(n + 1).max(2)];
            let reg_dim: usize = dims.iter().product();
            let initial = sample::random_cptp_kraus(reg_dim, 2, &mut rng);
            let rounds = (0..n)
                .map(|i| ProtocolRound {
                    probe_slot: i % dims.len(),
                    op: sample::random_cptp_kraus(reg_dim, 2, &mut rng),
                })
                .collect();
            let prot = AdaptiveProtocol::new(dims, initial, rounds)?;
            let qfi = protocol_qfi(&prot, &channel_at, theta, dtheta)?;
            Ok(qfi / denominator)
        })
        .collect::<Result<Vec<f64>>>()?;

    let planted = AdaptiveProtocol::bell_probe(d, d, n)?;
    let planted_ratio = protocol_qfi(&planted, &channel_at, theta, dtheta)? / denominator;

    let max_ratio = ratios.iter().copied().fold(planted_ratio, f64::max);
    Ok(FuzzReport {
        trials,
        n,
        b_per_probe,
        ratios,
        max_ratio,
        planted_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{dephasing, depolarizing, erasure, pauli_channel, PauliDistribution};
    use crate::linalg::{tensor, trace_distance};
    use crate::sample;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity_channel(d: usize) -> QuantumChannel {
        let mut probs = vec![0.0; d * d];
        probs[0] = 1.0;
        pauli_channel(PauliDistribution::new(d, probs).unwrap())
    }

    #[test]
    fn teleport_identity_channel_reproduces_input() {
        let sim = TeleportationSimulation::new(&identity_channel(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let rho = sample::random_density(2, 2, &mut rng);
            let out = teleport_simulate(&sim, &rho).unwrap();
            assert!(trace_distance(&out, &rho).unwrap() < 1e-12);
        }
    }

    #[test]
    fn teleport_simulates_builtin_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let channels = vec![
            depolarizing(0.3).unwrap(),
            dephasing(0.45).unwrap(),
            erasure(0.25, 2).unwrap(),
        ];
        for ch in &channels {
            let sim = TeleportationSimulation::new(ch).unwrap();
            for _ in 0..10 {
                let rho = sample::random_density(2, 2, &mut rng);
                // teleport_simulate itself enforces the 1e-10 identity.
                teleport_simulate(&sim, &rho).unwrap();
            }
        }
    }

    #[test]
    fn teleport_qutrit_pauli() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let dist = PauliDistribution::new(3, sample::random_distribution(9, &mut rng)).unwrap();
        let ch = pauli_channel(dist);
        let sim = TeleportationSimulation::new(&ch).unwrap();
        for _ in 0..5 {
            let rho = sample::random_density(3, 2, &mut rng);
            teleport_simulate(&sim, &rho).unwrap();
        }
    }

    #[test]
    fn bell_projectors_resolve_identity() {
        for d in [2usize, 3] {
            let sim = TeleportationSimulation::new(&identity_channel(d)).unwrap();
            let mut sum = CMatrix::zeros(d * d, d * d);
            for p in sim.bell_projectors() {
                sum += p;
            }
            assert!((sum - CMatrix::identity(d * d, d * d)).norm() < 1e-10);
        }
    }

    #[test]
    fn teleport_input_dim_mismatch() {
        let sim = TeleportationSimulation::new(&identity_channel(2)).unwrap();
        let rho = DensityMatrix::maximally_mixed(3);
        assert!(matches!(
            teleport_simulate(&sim, &rho),
            Err(Error::DimMismatch(_))
        ));
    }

    #[test]
    fn non_covariant_channel_rejected() {
        let ch = crate::channels::amplitude_damping(0.5).unwrap();
        assert!(matches!(
            TeleportationSimulation::new(&ch),
            Err(Error::NotCovariant { .. })
        ));
    }

    #[test]
    fn teleportation_preserves_correlations() {
        // Teleporting one half of an entangled pair must reproduce the
        // extended channel acting on that half.
        let ch = depolarizing(0.3).unwrap();
        let sim = TeleportationSimulation::new(&ch).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..10 {
            let joint = sample::random_density(4, 2, &mut rng);

            // Register route: reference qubit id 0, probe id 1; teleport the
            // probe through the simulation appended as ids (2, 3).
            let mut reg = Register::new(vec![(0, 2), (1, 2)], joint.matrix().clone());
            reg.append(&[(2, 2), (3, 2)], sim.resource.state().matrix());
            reg.bell_teleport(1, 2, 3, &sim.bell, &sim.corrections);
            reg.bring_to_front(&[0, 3]);

            // Direct route: I (x) E.
            let id2 = CMatrix::identity(2, 2);
            let lifted: Vec<CMatrix> = ch.kraus().iter().map(|k| id2.kronecker(k)).collect();
            let direct = apply_kraus(&lifted, joint.matrix());

            assert!(trace_norm_diff(&reg.state, &direct) < 1e-10);
        }
    }

    #[test]
    fn bell_probe_protocol_outputs_choi_copies() {
        let ch = depolarizing(0.35).unwrap();
        let choi = choi_matrix(&ch).unwrap();
        let prot = AdaptiveProtocol::bell_probe(2, 2, 1).unwrap();
        let out = run_adaptive(&prot, &ch).unwrap();
        assert!(trace_distance(&out, choi.state()).unwrap() < 1e-12);

        // Two rounds produce choi (x) choi.
        let prot = AdaptiveProtocol::bell_probe(2, 2, 2).unwrap();
        let out = run_adaptive(&prot, &ch).unwrap();
        let expect =
            DensityMatrix::new(tensor(choi.state().matrix(), choi.state().matrix()).unwrap())
                .unwrap();
        assert!(trace_distance(&out, &expect).unwrap() < 1e-12);
    }

    #[test]
    fn channel_ignoring_protocol_has_zero_qfi() {
        let prot = AdaptiveProtocol::channel_ignoring(2, 2).unwrap();
        let qfi = protocol_qfi(&prot, depolarizing, 0.3, 1e-4).unwrap();
        // The output is exactly parameter-independent; what remains is the
        // fidelity evaluation noise divided by dtheta^2.
        assert!(qfi < 1e-6, "qfi {qfi}");
    }

    #[test]
    fn run_adaptive_matches_straight_line_oracle() {
        // Independent evaluator for a fixed 2-round shape: register [2, 2],
        // probe slot 0 twice, with explicit kron embeddings.
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let ch = depolarizing(0.4).unwrap();
        let lam0 = sample::random_cptp_kraus(4, 2, &mut rng);
        let lam1 = sample::random_cptp_kraus(4, 2, &mut rng);
        let lam2 = sample::random_cptp_kraus(4, 2, &mut rng);

        let prot = AdaptiveProtocol::new(
            vec![2, 2],
            lam0.clone(),
            vec![
                ProtocolRound {
                    probe_slot: 0,
                    op: lam1.clone(),
                },
                ProtocolRound {
                    probe_slot: 0,
                    op: lam2.clone(),
                },
            ],
        )
        .unwrap();
        let out = run_adaptive(&prot, &ch).unwrap();

        // Oracle.
        let id2 = CMatrix::identity(2, 2);
        let mut state = CMatrix::zeros(4, 4);
        state[(0, 0)] = re(1.0);
        state = apply_kraus(&lam0, &state);
        let ch_lifted: Vec<CMatrix> = ch.kraus().iter().map(|k| k.kronecker(&id2)).collect();
        state = apply_kraus(&ch_lifted, &state);
        state = apply_kraus(&lam1, &state);
        state = apply_kraus(&ch_lifted, &state);
        state = apply_kraus(&lam2, &state);

        assert!(trace_norm_diff(out.matrix(), &state) < 1e-12);
    }

    #[test]
    fn stretched_equals_adaptive_qubit() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        for ch in [depolarizing(0.3).unwrap(), dephasing(0.6).unwrap()] {
            for n in 1..=2 {
                let dims = vec![2usize, 2, 2];
                let reg_dim = 8;
                let initial = sample::random_cptp_kraus(reg_dim, 2, &mut rng);
                let rounds = (0..n)
                    .map(|i| ProtocolRound {
                        probe_slot: i,
                        op: sample::random_cptp_kraus(reg_dim, 2, &mut rng),
                    })
                    .collect();
                let prot = AdaptiveProtocol::new(dims, initial, rounds).unwrap();
                let direct = run_adaptive(&prot, &ch).unwrap();
                let stretched = run_stretched(&prot, &ch).unwrap();
                let dist = trace_distance(&direct, &stretched).unwrap();
                assert!(dist < STRETCH_TOL, "n={n} dist={dist}");
            }
        }
    }

    #[test]
    fn stretched_equals_adaptive_erasure() {
        // Output dims grow to 3 after each transmission; use distinct slots.
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let ch = erasure(0.25, 2).unwrap();
        let initial = sample::random_cptp_kraus(8, 2, &mut rng);
        // After round 1 the register is [3, 2, 2] (dim 12).
        let op1 = sample::random_cptp_kraus(12, 2, &mut rng);
        // After round 2 it is [3, 3, 2] (dim 18).
        let op2 = sample::random_cptp_kraus(18, 2, &mut rng);
        let prot = AdaptiveProtocol::new(
            vec![2, 2, 2],
            initial,
            vec![
                ProtocolRound {
                    probe_slot: 0,
                    op: op1,
                },
                ProtocolRound {
                    probe_slot: 1,
                    op: op2,
                },
            ],
        )
        .unwrap();
        let direct = run_adaptive(&prot, &ch).unwrap();
        let stretched = run_stretched(&prot, &ch).unwrap();
        assert!(trace_distance(&direct, &stretched).unwrap() < STRETCH_TOL);
    }

    #[test]
    fn stretched_equals_adaptive_qutrit() {
        let mut rng = ChaCha8Rng::seed_from_u64(48);
        let dist = PauliDistribution::new(3, sample::random_distribution(9, &mut rng)).unwrap();
        let ch = pauli_channel(dist);
        let initial = sample::random_cptp_kraus(9, 2, &mut rng);
        let rounds = (0..2)
            .map(|i| ProtocolRound {
                probe_slot: i,
                op: sample::random_cptp_kraus(9, 2, &mut rng),
            })
            .collect();
        let prot = AdaptiveProtocol::new(vec![3, 3], initial, rounds).unwrap();
        let direct = run_adaptive(&prot, &ch).unwrap();
        let stretched = run_stretched(&prot, &ch).unwrap();
        assert!(trace_distance(&direct, &stretched).unwrap() < STRETCH_TOL);
    }

    #[test]
    fn collapsed_map_is_theta_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(49);
        let initial = sample::random_cptp_kraus(8, 2, &mut rng);
        let rounds: Vec<ProtocolRound> = (0..2)
            .map(|i| ProtocolRound {
                probe_slot: i,
                op: sample::random_cptp_kraus(8, 2, &mut rng),
            })
            .collect();
        let prot = AdaptiveProtocol::new(vec![2, 2, 2], initial, rounds).unwrap();

        let theta = 0.3;
        let d = 1e-4;
        let map0 = collapsed_map(&prot, &depolarizing(theta).unwrap()).unwrap();
        let map1 = collapsed_map(&prot, &depolarizing(theta + d).unwrap()).unwrap();
        assert!(map0.same_structure(&map1));

        // Only the Choi copies differ between the two parameter values.
        let c0 = choi_matrix(&depolarizing(theta).unwrap()).unwrap();
        let c1 = choi_matrix(&depolarizing(theta + d).unwrap()).unwrap();
        let out0 = map0.apply(&c0).unwrap();
        let out1 = map0.apply(&c1).unwrap();
        let direct1 = run_adaptive(&prot, &depolarizing(theta + d).unwrap()).unwrap();
        assert!(trace_distance(&out1, &direct1).unwrap() < STRETCH_TOL);
        assert!(trace_distance(&out0, &out1).unwrap() > 0.0);
    }

    #[test]
    fn bell_probe_protocol_saturates_qfi() {
        let theta = 0.3;
        let prot = AdaptiveProtocol::bell_probe(2, 2, 1).unwrap();
        let qfi = protocol_qfi(&prot, depolarizing, theta, 1e-4).unwrap();
        let b = 1.0 / (theta * (1.0 - theta));
        assert_relative_eq!(qfi, b, max_relative = 1e-3);
    }

    #[test]
    fn fuzz_smoke() {
        let report =
            fuzz_no_go(depolarizing, 1.0 / (0.5 * 0.5), 0.5, 1e-4, 20, 2, 7).unwrap();
        assert_eq!(report.trials, 20);
        assert!(report.max_ratio_within(1e-4), "max {}", report.max_ratio);
        assert!(
            report.planted_ratio >= 0.999,
            "planted {}",
            report.planted_ratio
        );

        // Reproducible given the seed.
        let again =
            fuzz_no_go(depolarizing, 1.0 / (0.5 * 0.5), 0.5, 1e-4, 20, 2, 7).unwrap();
        assert_eq!(report.ratios, again.ratios);
    }

    #[test]
    fn fuzz_empty_report() {
        let report = fuzz_no_go(dephasing, 1.0 / (0.3 * 0.7), 0.3, 1e-4, 0, 2, 1).unwrap();
        assert!(report.ratios.is_empty());
        // The planted protocol is still evaluated.
        assert!(report.planted_ratio > 0.99);
    }
}
