//! Entanglement distillation for dephasing channels with a small support `S`.
//!
//! After a Hadamard layer on both halves, each Choi copy is `(X^x ⊗ I)|gamma>`
//! for an unknown `x ∈ S`. Both parties apply the CNOT circuit of a shared
//! random invertible matrix `M`, which maps the error to `X^{Mx}`, then
//! measure their first `m` qubits. The XOR of the two outcomes is `(Mx)|_m`,
//! which pins down `x` inside `S` unless two support elements collide on
//! those bits. On success Alice undoes `X^{(Mx)|_{m..n}}` and the pair keeps
//! `n - m` perfect ebits.
//!
//! Everything here is exact Pauli-frame bookkeeping; the dense oracle is
//! used only by [`end_to_end_transmit`] to check the frame against the
//! actual quantum state at small `n`.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::channel::{ChannelError, GeneralizedDephasingChannel};
use crate::dense::{self, DenseState, OracleError};
use crate::gf2::{self, BitString, Cnot, Gf2Error, Gf2Matrix, PauliString};
use crate::par::{self, Execution};
use crate::stream_rng;

pub const DEFAULT_DELTA: f64 = 1e-3;

/// Bits charged for the shared scramble seed.
pub const SEED_BITS: u64 = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistillError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("failure budget delta = {0} must lie in (0, 1)")]
    InvalidDelta(f64),
    #[error("payload of {payload} qubits exceeds the {ebits} distilled ebits")]
    PayloadTooLarge { payload: usize, ebits: usize },
    #[error("channel does not match the configured support: {0}")]
    ChannelMismatch(String),
    #[error("dense simulation disagrees with the Pauli frame: {0}")]
    FrameMismatch(String),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Requested syndrome length: a fixed count or the failure-budget rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyndromeBits {
    Auto,
    Fixed(usize),
}

impl fmt::Display for SyndromeBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Fixed(m) => write!(f, "{m}"),
        }
    }
}

impl std::str::FromStr for SyndromeBits {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        s.parse()
            .map(Self::Fixed)
            .map_err(|_| format!("expected \"auto\" or a non-negative integer, got {s:?}"))
    }
}

impl Serialize for SyndromeBits {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Auto => serializer.serialize_str("auto"),
            Self::Fixed(m) => serializer.serialize_u64(*m as u64),
        }
    }
}

impl<'de> Deserialize<'de> for SyndromeBits {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(usize),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(m) => Ok(Self::Fixed(m)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillConfig {
    pub n: usize,
    pub support: Vec<BitString>,
    pub m: SyndromeBits,
    pub delta: f64,
    pub trials: u64,
    pub master_seed: u64,
}

impl DistillConfig {
    pub fn new(
        n: usize,
        support: Vec<BitString>,
        m: SyndromeBits,
        delta: f64,
        trials: u64,
        master_seed: u64,
    ) -> Result<Self, DistillError> {
        let cfg = Self {
            n,
            support,
            m,
            delta,
            trials,
            master_seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), DistillError> {
        if self.n == 0 {
            return Err(DistillError::Config("n must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(DistillError::InvalidDelta(self.delta));
        }
        if self.support.is_empty() {
            return Err(DistillError::Config("support is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for x in &self.support {
            if x.len() != self.n {
                return Err(DistillError::Config(format!(
                    "support element {} has length {}, expected {}",
                    x.to_hex(),
                    x.len(),
                    self.n
                )));
            }
            if !seen.insert(x) {
                return Err(DistillError::Config(format!("duplicate support element {}", x.to_hex())));
            }
        }
        if let SyndromeBits::Fixed(m) = self.m {
            if m > self.n {
                return Err(DistillError::Config(format!("m = {m} exceeds n = {}", self.n)));
            }
        }
        if self.trials == 0 {
            return Err(DistillError::Config("trials must be at least 1".into()));
        }
        Ok(())
    }

    pub fn resolve_m(&self) -> Result<MSelection, DistillError> {
        match self.m {
            SyndromeBits::Auto => choose_m(self.support.len(), self.n, self.delta),
            SyndromeBits::Fixed(m) => Ok(MSelection {
                m,
                unclamped: m,
                clamped: false,
                auto: false,
            }),
        }
    }
}

/// Outcome of the syndrome-length rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MSelection {
    pub m: usize,
    /// `ceil(log2(|S|^2 / delta))` before clamping to `n`.
    pub unclamped: usize,
    pub clamped: bool,
    pub auto: bool,
}

/// `m = min(n, ceil(log2(|S|^2 / delta)))`, or 0 for a singleton support.
pub fn choose_m(support_size: usize, n: usize, delta: f64) -> Result<MSelection, DistillError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(DistillError::InvalidDelta(delta));
    }
    if support_size == 0 {
        return Err(DistillError::Config("support is empty".into()));
    }
    if support_size == 1 {
        return Ok(MSelection {
            m: 0,
            unclamped: 0,
            clamped: false,
            auto: true,
        });
    }
    let raw = (2.0 * (support_size as f64).log2() - delta.log2()).ceil() as usize;
    Ok(MSelection {
        m: raw.min(n),
        unclamped: raw,
        clamped: raw > n,
        auto: true,
    })
}

/// Exact `(2^{n-m} - 1) / (2^n - 1)`: the chance that a uniform invertible
/// scramble makes two distinct strings agree on their first `m` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CollisionProbability {
    pub numerator: u128,
    pub denominator: u128,
}

impl CollisionProbability {
    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

pub fn collision_probability(n: usize, m: usize) -> Result<CollisionProbability, DistillError> {
    if n == 0 || n > 127 || m > n {
        return Err(DistillError::Config(format!(
            "collision probability needs 1 <= n <= 127 and m <= n (n = {n}, m = {m})"
        )));
    }
    Ok(CollisionProbability {
        numerator: (1u128 << (n - m)) - 1,
        denominator: (1u128 << n) - 1,
    })
}

/// Gate, measurement and communication counts for one protocol run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityAudit {
    /// Hadamards on both halves.
    pub hadamards: u64,
    /// CNOTs in the scrambling circuit; each party applies one copy.
    pub cnot_gates: u64,
    /// Single-qubit measurements on both halves.
    pub measurements: u64,
    /// X gates applied by Alice to undo the identified error.
    pub corrections: u64,
    /// Syndrome comparisons during the candidate scan.
    pub classical_comparisons: u64,
    pub classical_bits_communicated: u64,
}

impl ComplexityAudit {
    /// The per-run caps: `2n` Hadamards, `n^2` CNOTs, `2m` measurements,
    /// `n` corrections, `|S|` comparisons, `64 + n^2 + 2m` classical bits.
    pub fn caps(n: usize, m: usize, support_size: usize) -> Self {
        let (n, m) = (n as u64, m as u64);
        Self {
            hadamards: 2 * n,
            cnot_gates: n * n,
            measurements: 2 * m,
            corrections: n,
            classical_comparisons: support_size as u64,
            classical_bits_communicated: SEED_BITS + n * n + 2 * m,
        }
    }

    pub fn within(&self, caps: &Self) -> bool {
        self.hadamards <= caps.hadamards
            && self.cnot_gates <= caps.cnot_gates
            && self.measurements <= caps.measurements
            && self.corrections <= caps.corrections
            && self.classical_comparisons <= caps.classical_comparisons
            && self.classical_bits_communicated <= caps.classical_bits_communicated
    }

    pub fn sum(self, o: Self) -> Self {
        Self {
            hadamards: self.hadamards + o.hadamards,
            cnot_gates: self.cnot_gates + o.cnot_gates,
            measurements: self.measurements + o.measurements,
            corrections: self.corrections + o.corrections,
            classical_comparisons: self.classical_comparisons + o.classical_comparisons,
            classical_bits_communicated: self.classical_bits_communicated + o.classical_bits_communicated,
        }
    }

    pub fn max(self, o: Self) -> Self {
        Self {
            hadamards: self.hadamards.max(o.hadamards),
            cnot_gates: self.cnot_gates.max(o.cnot_gates),
            measurements: self.measurements.max(o.measurements),
            corrections: self.corrections.max(o.corrections),
            classical_comparisons: self.classical_comparisons.max(o.classical_comparisons),
            classical_bits_communicated: self.classical_bits_communicated.max(o.classical_bits_communicated),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub scramble_seed: u64,
    pub hidden_x: BitString,
    pub scramble: Gf2Matrix,
    /// Alice's raw outcomes on her first `m` qubits.
    pub y_a: BitString,
    /// Bob's raw outcomes on his first `m` qubits.
    pub y_b: BitString,
    /// `y_a ⊕ y_b`.
    pub syndrome: BitString,
    pub candidates: usize,
    pub identified_x: Option<BitString>,
    /// Pauli frame left on Alice's `n - m` kept qubits; `None` when the run aborted.
    pub residual: Option<PauliString>,
    pub success: bool,
    pub ebits_out: usize,
    pub audit: ComplexityAudit,
}

/// Randomness derived from one scramble seed. Stream 0 drives the matrix,
/// stream 1 the hidden support index, stream 2 the shared measurement
/// outcomes of the maximally entangled pairs.
pub fn derive_scramble(n: usize, scramble_seed: u64) -> Result<Gf2Matrix, Gf2Error> {
    gf2::sample_invertible(n, &mut stream_rng(scramble_seed, 0))
}

pub fn derive_hidden_index(support_size: usize, scramble_seed: u64) -> usize {
    stream_rng(scramble_seed, 1).gen_range(0..support_size)
}

pub fn derive_shared_outcomes(m: usize, scramble_seed: u64) -> BitString {
    BitString::random(m, &mut stream_rng(scramble_seed, 2))
}

/// A validated configuration with its syndrome length fixed.
#[derive(Debug, Clone)]
pub struct DistillProtocol {
    cfg: DistillConfig,
    selection: MSelection,
}

/// Result of matching a syndrome against the support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Identification {
    pub candidates: usize,
    pub identified: Option<BitString>,
    pub comparisons: u64,
}

impl DistillProtocol {
    pub fn new(cfg: DistillConfig) -> Result<Self, DistillError> {
        cfg.validate()?;
        let selection = cfg.resolve_m()?;
        Ok(Self { cfg, selection })
    }

    pub fn config(&self) -> &DistillConfig {
        &self.cfg
    }

    pub fn n(&self) -> usize {
        self.cfg.n
    }

    pub fn m(&self) -> usize {
        self.selection.m
    }

    pub fn selection(&self) -> MSelection {
        self.selection
    }

    /// Linear scan for support elements whose scrambled prefix equals `syndrome`.
    pub fn identify(&self, scramble: &Gf2Matrix, syndrome: &BitString) -> Result<Identification, Gf2Error> {
        let m = self.m();
        let mut hit = None;
        let mut candidates = 0;
        for x in &self.cfg.support {
            if scramble.mul_vec(x)?.prefix(m) == *syndrome {
                candidates += 1;
                hit = Some(x.clone());
            }
        }
        Ok(Identification {
            candidates,
            identified: if candidates == 1 { hit } else { None },
            comparisons: self.cfg.support.len() as u64,
        })
    }

    /// Alice's correction on her kept qubits for an identified string.
    pub fn correction_for(&self, scramble: &Gf2Matrix, identified: &BitString) -> Result<BitString, Gf2Error> {
        let (n, m) = (self.n(), self.m());
        Ok(scramble.mul_vec(identified)?.slice(m, n))
    }

    pub fn run_trial<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<TrialOutcome, DistillError> {
        self.run_trial_seeded(rng.next_u64())
    }

    /// One protocol run whose randomness is fully determined by `scramble_seed`.
    pub fn run_trial_seeded(&self, scramble_seed: u64) -> Result<TrialOutcome, DistillError> {
        let (n, m) = (self.n(), self.m());
        let scramble = derive_scramble(n, scramble_seed)?;
        let hidden_x = self.cfg.support[derive_hidden_index(self.cfg.support.len(), scramble_seed)].clone();
        let shared = derive_shared_outcomes(m, scramble_seed);

        let frame = scramble.mul_vec(&hidden_x)?;
        let y_b = shared.clone();
        let y_a = &shared ^ &frame.prefix(m);
        let syndrome = &y_a ^ &y_b;

        let ident = self.identify(&scramble, &syndrome)?;
        let circuit_len = scramble.cnot_circuit()?.len() as u64;
        let mut audit = ComplexityAudit {
            hadamards: 2 * n as u64,
            cnot_gates: circuit_len,
            measurements: 2 * m as u64,
            corrections: 0,
            classical_comparisons: ident.comparisons,
            classical_bits_communicated: SEED_BITS + 2 * m as u64,
        };

        let (residual, success) = match &ident.identified {
            Some(found) => {
                let correction = self.correction_for(&scramble, found)?;
                audit.corrections = correction.weight() as u64;
                let left = &frame.slice(m, n) ^ &correction;
                let residual = PauliString::x_string(left);
                let success = residual.is_identity();
                (Some(residual), success)
            }
            None => (None, false),
        };
        Ok(TrialOutcome {
            scramble_seed,
            hidden_x,
            scramble,
            y_a,
            y_b,
            syndrome,
            candidates: ident.candidates,
            identified_x: ident.identified,
            residual,
            success,
            ebits_out: if success { n - m } else { 0 },
            audit,
        })
    }

    /// Scramble seed used by Monte Carlo trial `index`.
    pub fn trial_seed(&self, index: u64) -> u64 {
        stream_rng(self.cfg.master_seed, index).next_u64()
    }

    pub fn run_monte_carlo(&self, exec: Execution) -> Result<DistillReport, DistillError> {
        let (n, m) = (self.n(), self.m());
        let caps = ComplexityAudit::caps(n, m, self.cfg.support.len());
        let tally = par::map_reduce(
            self.cfg.trials,
            exec,
            || Ok(Tally::default()),
            |i| {
                let t = self.run_trial_seeded(self.trial_seed(i))?;
                Ok(Tally::from_trial(&t, n, m, &caps))
            },
            |a: Result<Tally, DistillError>, b| Ok(a?.merge(b?)),
        )?;
        Ok(self.report(tally, caps))
    }

    fn report(&self, t: Tally, caps: ComplexityAudit) -> DistillReport {
        let (n, m) = (self.n(), self.m());
        let s = self.cfg.support.len() as f64;
        let trials = t.trials as f64;
        let rate = t.failures as f64 / trials;
        let q = collision_probability(n, m).map(|c| c.value()).unwrap_or(0.0);
        let pairs = s * (s - 1.0) / 2.0;
        let mut notes = vec![
            "delta is a per-run failure budget; a budget across all copies would divide it by the copy count".to_string(),
        ];
        if self.selection.clamped {
            notes.push(format!(
                "auto m = {} exceeded n = {n} and was clamped to n: identification is certain and the yield is 0 ebits",
                self.selection.unclamped
            ));
        }
        DistillReport {
            version: crate::VERSION.to_string(),
            config: self.cfg.clone(),
            m_selection: self.selection,
            trials: t.trials,
            successes: t.successes,
            failures: t.failures,
            empirical_failure_rate: rate,
            failure_rate_sigma: (rate * (1.0 - rate) / trials).sqrt(),
            union_bound: s * s * 2f64.powi(-(m as i32)),
            pairwise_bound: pairs * q,
            collision_probability: q,
            mean_ebits: t.ebits as f64 / trials,
            expected_ebits_per_success: n - m,
            successes_with_full_yield: t.full_yield,
            successes_with_identity_residual: t.identity_residual,
            syndrome_relation_violations: t.syndrome_violations,
            complexity_audit: AuditSummary {
                per_trial_max: t.audit_max,
                per_trial_caps: caps,
                total: t.audit_total,
                trials_over_cap: t.over_cap,
                within_caps: t.over_cap == 0,
            },
            master_seed: self.cfg.master_seed,
            notes,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    trials: u64,
    successes: u64,
    failures: u64,
    ebits: u64,
    full_yield: u64,
    identity_residual: u64,
    syndrome_violations: u64,
    over_cap: u64,
    audit_total: ComplexityAudit,
    audit_max: ComplexityAudit,
}

impl Tally {
    fn from_trial(t: &TrialOutcome, n: usize, m: usize, caps: &ComplexityAudit) -> Self {
        let frame_prefix = t.scramble.mul_vec(&t.hidden_x).map(|f| f.prefix(m)).ok();
        let relation_ok = frame_prefix.as_ref() == Some(&t.syndrome) && (&t.y_a ^ &t.y_b) == t.syndrome;
        Self {
            trials: 1,
            successes: t.success as u64,
            failures: (!t.success) as u64,
            ebits: t.ebits_out as u64,
            full_yield: (t.success && t.ebits_out == n - m) as u64,
            identity_residual: (t.success && t.residual.as_ref().is_some_and(PauliString::is_identity)) as u64,
            syndrome_violations: (!relation_ok) as u64,
            over_cap: (!t.audit.within(caps)) as u64,
            audit_total: t.audit,
            audit_max: t.audit,
        }
    }

    fn merge(self, o: Self) -> Self {
        Self {
            trials: self.trials + o.trials,
            successes: self.successes + o.successes,
            failures: self.failures + o.failures,
            ebits: self.ebits + o.ebits,
            full_yield: self.full_yield + o.full_yield,
            identity_residual: self.identity_residual + o.identity_residual,
            syndrome_violations: self.syndrome_violations + o.syndrome_violations,
            over_cap: self.over_cap + o.over_cap,
            audit_total: self.audit_total.sum(o.audit_total),
            audit_max: self.audit_max.max(o.audit_max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditSummary {
    pub per_trial_max: ComplexityAudit,
    pub per_trial_caps: ComplexityAudit,
    /// Sum over trials: `trials x per-copy cost`, there is no one-time cost.
    pub total: ComplexityAudit,
    pub trials_over_cap: u64,
    pub within_caps: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistillReport {
    pub version: String,
    pub config: DistillConfig,
    pub m_selection: MSelection,
    pub trials: u64,
    pub successes: u64,
    pub failures: u64,
    pub empirical_failure_rate: f64,
    pub failure_rate_sigma: f64,
    /// `|S|^2 2^-m`.
    pub union_bound: f64,
    /// `C(|S|, 2) (2^{n-m} - 1) / (2^n - 1)`.
    pub pairwise_bound: f64,
    pub collision_probability: f64,
    pub mean_ebits: f64,
    pub expected_ebits_per_success: usize,
    pub successes_with_full_yield: u64,
    pub successes_with_identity_residual: u64,
    pub syndrome_relation_violations: u64,
    pub complexity_audit: AuditSummary,
    pub master_seed: u64,
    pub notes: Vec<String>,
}

impl DistillReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn run_trial<R: RngCore + ?Sized>(cfg: &DistillConfig, rng: &mut R) -> Result<TrialOutcome, DistillError> {
    DistillProtocol::new(cfg.clone())?.run_trial(rng)
}

pub fn run_monte_carlo(cfg: &DistillConfig) -> Result<DistillReport, DistillError> {
    DistillProtocol::new(cfg.clone())?.run_monte_carlo(Execution::default())
}

/// Counts scrambles under which `x` and `x_prime` agree on their first `m`
/// scrambled bits. Scramble `i` is drawn from stream `i` of `seed`.
pub fn pair_collision_count(
    n: usize,
    m: usize,
    x: &BitString,
    x_prime: &BitString,
    scrambles: u64,
    seed: u64,
    exec: Execution,
) -> Result<u64, DistillError> {
    let diff = x.try_xor(x_prime)?;
    if diff.len() != n || diff.is_zero() {
        return Err(DistillError::Config("need two distinct strings of length n".into()));
    }
    if m > n {
        return Err(DistillError::Config(format!("m = {m} exceeds n = {n}")));
    }
    par::map_reduce(
        scrambles,
        exec,
        || Ok(0u64),
        |i| {
            let scramble = gf2::sample_invertible(n, &mut stream_rng(seed, i))?;
            Ok(scramble.mul_vec(&diff)?.prefix(m).is_zero() as u64)
        },
        |a: Result<u64, DistillError>, b| Ok(a? + b?),
    )
}

/// How a dense end-to-end run finished.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TransmitStatus {
    Delivered,
    Aborted { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransmitTranscript {
    pub trial: TrialOutcome,
    /// Born probability of the simulated measurement record in the dense state.
    pub outcome_probability: f64,
    pub distilled_fidelity: Option<f64>,
    pub payload_fidelity: Option<f64>,
    pub status: TransmitStatus,
}

#[derive(Debug, Clone)]
pub struct TransmitResult {
    pub output: Option<DenseState>,
    pub transcript: TransmitTranscript,
}

/// Largest `n` for the dense end-to-end pipeline.
pub const MAX_TRANSMIT_N: usize = 3;

fn circuit_permutation(circuit: &[Cnot], n: usize, index: usize) -> usize {
    // scramble the left (high) and right (low) halves with the same circuit
    let mask = (1usize << n) - 1;
    let run = |v: usize| {
        let mut z = BitString::from_u64(n, v as u64);
        for g in circuit {
            g.apply(&mut z);
        }
        z.to_u64() as usize
    };
    (run(index >> n) << n) | run(index & mask)
}

/// Sends the Choi state through the whole protocol densely and, when the
/// distillation succeeds, teleports `payload` through the distilled ebits.
pub fn end_to_end_transmit<R: RngCore + ?Sized>(
    channel: &GeneralizedDephasingChannel,
    payload: &DenseState,
    cfg: &DistillConfig,
    rng: &mut R,
) -> Result<TransmitResult, DistillError> {
    let protocol = DistillProtocol::new(cfg.clone())?;
    let (n, m) = (protocol.n(), protocol.m());
    if n > MAX_TRANSMIT_N {
        return Err(ChannelError::DenseCap { n, max: MAX_TRANSMIT_N }.into());
    }
    if channel.n() != n {
        return Err(DistillError::ChannelMismatch(format!("channel has n = {}, config n = {n}", channel.n())));
    }
    let channel_support: BTreeSet<_> = channel.dist().weighted_support()?.into_iter().map(|(x, _)| x).collect();
    let cfg_support: BTreeSet<_> = cfg.support.iter().cloned().collect();
    if channel_support != cfg_support {
        return Err(DistillError::ChannelMismatch("support sets differ".into()));
    }
    let ebits = n - m;
    if payload.qubits() > ebits {
        return Err(DistillError::PayloadTooLarge {
            payload: payload.qubits(),
            ebits,
        });
    }

    // Choi state with the left half sent through the channel; left = qubits n..2n.
    let mut state = channel.choi_dense()?;
    for q in 0..2 * n {
        state = state.apply_hadamard(q)?;
    }
    let trial = protocol.run_trial(rng)?;
    let circuit = trial.scramble.cnot_circuit()?;
    state = state.apply_monomial(|i| (circuit_permutation(&circuit, n, i), num_complex::Complex64::new(1.0, 0.0)))?;

    let alice_measured: Vec<usize> = (n..n + m).collect();
    let bob_measured: Vec<usize> = (0..m).collect();
    let record = trial.y_a.concat(&trial.y_b);
    let measured: Vec<usize> = alice_measured.iter().chain(&bob_measured).copied().collect();
    let outcome_probability = state.outcome_probability(&measured, &record);
    if outcome_probability <= 1e-12 {
        return Err(DistillError::FrameMismatch(format!(
            "record y_a = {}, y_b = {} has zero probability",
            trial.y_a, trial.y_b
        )));
    }
    for (k, &q) in measured.iter().enumerate() {
        state = state.measure_qubit(q, record.get(k))?.1;
    }

    let Some(identified) = trial.identified_x.clone() else {
        let reason = format!("{} support elements match the syndrome", trial.candidates);
        return Ok(TransmitResult {
            output: None,
            transcript: TransmitTranscript {
                trial,
                outcome_probability,
                distilled_fidelity: None,
                payload_fidelity: None,
                status: TransmitStatus::Aborted { reason },
            },
        });
    };
    let correction = protocol.correction_for(&trial.scramble, &identified)?;
    let mut full = BitString::zeros(n);
    for j in m..n {
        full.set(j, correction.get(j - m));
    }
    state = state.apply_pauli_at(&PauliString::x_string(full), n)?;

    // kept pairs: right qubits m..n (low), left qubits n+m..2n (high)
    let keep: Vec<usize> = (m..n).chain(n + m..2 * n).collect();
    let distilled = state.partial_trace(&keep)?;
    let distilled_fidelity = if ebits > 0 {
        Some(dense::fidelity(&distilled, &DenseState::max_entangled(ebits)?)?)
    } else {
        None
    };

    let k = payload.qubits();
    let (output, payload_fidelity) = if k == 0 {
        (None, None)
    } else {
        let pairs: Vec<usize> = (0..k).chain(ebits..ebits + k).collect();
        let resource = distilled.partial_trace(&pairs)?;
        let out = dense::teleport_through(&resource, payload)?;
        let f = dense::fidelity(&out, payload)?;
        (Some(out), Some(f))
    };
    let status = if trial.success {
        TransmitStatus::Delivered
    } else {
        TransmitStatus::Aborted {
            reason: "identified string differs from the hidden error".into(),
        }
    };
    Ok(TransmitResult {
        output,
        transcript: TransmitTranscript {
            trial,
            outcome_probability,
            distilled_fidelity,
            payload_fidelity,
            status,
        },
    })
}
