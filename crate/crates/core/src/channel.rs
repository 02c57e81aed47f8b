//! Generalized dephasing channels `rho -> sum_x p(x) Z^x rho Z^x`, their
//! Choi states, and the JSON channel-spec file format.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dense::{self, DenseState, OracleError, Side};
use crate::gf2::{BitString, Gf2Error, PauliString};
use crate::prg::{self, OwfSpec, PrgConfig, PrgError};

/// PRG images are enumerated exhaustively only up to this seed length.
pub const MAX_ENUMERABLE_SEED_LEN: usize = 20;
/// Largest `n` for which the full uniform distribution may be listed explicitly.
pub const MAX_UNIFORM_N: usize = 20;
/// Qubit cap for dense channel application (Choi states on `2n` qubits).
pub const MAX_DENSE_N: usize = 5;
/// Qubit cap for dense teleportation (`3n` qubits in play).
pub const MAX_TELEPORT_N: usize = 3;

const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid channel spec, field `{field}`: {reason}")]
    Spec { field: String, reason: String },
    #[error("PRG image with seed length {0} is too large to enumerate")]
    NotEnumerable(usize),
    #[error("n = {n} exceeds the dense cap of {max}")]
    DenseCap { n: usize, max: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error(transparent)]
    Prg(#[from] PrgError),
}

/// A distribution over `{0,1}^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    n: usize,
    kind: DistributionKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionKind {
    /// Strictly positive weights, sorted by bitstring.
    Explicit { weights: Vec<(BitString, f64)> },
    /// Uniform over a set of distinct strings, kept in the given order.
    UniformSupport { support: Vec<BitString> },
    /// Image of a uniform seed under a PRG. `image` holds the exhaustive
    /// output table when the seed is short enough to enumerate.
    PrgInduced {
        prg: PrgConfig,
        image: Option<Arc<Vec<(BitString, f64)>>>,
    },
}

impl DistributionSpec {
    pub fn explicit(n: usize, weights: Vec<(BitString, f64)>) -> Result<Self, ChannelError> {
        let invalid = |m: String| ChannelError::InvalidDistribution(m);
        let mut merged: BTreeMap<BitString, f64> = BTreeMap::new();
        for (x, w) in weights {
            if x.len() != n {
                return Err(invalid(format!("element {x} has length {}, expected {n}", x.len())));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(invalid(format!("weight {w} for {x} is not a non-negative number")));
            }
            if merged.insert(x.clone(), w).is_some() {
                return Err(invalid(format!("duplicate element {x}")));
            }
        }
        let total: f64 = merged.values().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            n,
            kind: DistributionKind::Explicit {
                weights: merged.into_iter().filter(|(_, w)| *w > 0.0).collect(),
            },
        })
    }

    pub fn uniform_support(n: usize, support: Vec<BitString>) -> Result<Self, ChannelError> {
        let invalid = |m: String| ChannelError::InvalidDistribution(m);
        if support.is_empty() {
            return Err(invalid("support is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for x in &support {
            if x.len() != n {
                return Err(invalid(format!("element {x} has length {}, expected {n}", x.len())));
            }
            if !seen.insert(x) {
                return Err(invalid(format!("duplicate element {x}")));
            }
        }
        Ok(Self {
            n,
            kind: DistributionKind::UniformSupport { support },
        })
    }

    pub fn point_mass(x: BitString) -> Self {
        Self {
            n: x.len(),
            kind: DistributionKind::UniformSupport { support: vec![x] },
        }
    }

    /// Uniform over all of `{0,1}^n` (the fully dephasing channel).
    pub fn uniform(n: usize) -> Result<Self, ChannelError> {
        if n > MAX_UNIFORM_N {
            return Err(ChannelError::InvalidDistribution(format!(
                "full uniform support needs n <= {MAX_UNIFORM_N}"
            )));
        }
        let support = (0..1u64 << n).map(|v| BitString::from_u64(n, v)).collect();
        Self::uniform_support(n, support)
    }

    pub(crate) fn prg_induced(prg: PrgConfig, image: Option<Vec<(BitString, f64)>>) -> Self {
        Self {
            n: prg.out_len(),
            kind: DistributionKind::PrgInduced {
                prg,
                image: image.map(Arc::new),
            },
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &DistributionKind {
        &self.kind
    }

    pub fn is_enumerable(&self) -> bool {
        !matches!(
            self.kind,
            DistributionKind::PrgInduced { image: None, .. }
        )
    }

    /// Every string with positive probability, with its probability.
    pub fn weighted_support(&self) -> Result<Vec<(BitString, f64)>, ChannelError> {
        match &self.kind {
            DistributionKind::Explicit { weights } => Ok(weights.clone()),
            DistributionKind::UniformSupport { support } => {
                let w = 1.0 / support.len() as f64;
                Ok(support.iter().map(|x| (x.clone(), w)).collect())
            }
            DistributionKind::PrgInduced { image: Some(t), .. } => Ok(t.as_ref().clone()),
            DistributionKind::PrgInduced { prg, image: None } => {
                Err(ChannelError::NotEnumerable(prg.seed_len()))
            }
        }
    }

    /// Draws `x` with probability `p(x)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BitString {
        match &self.kind {
            DistributionKind::Explicit { weights } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (x, w) in weights {
                    acc += w;
                    if u < acc {
                        return x.clone();
                    }
                }
                weights.last().expect("explicit weights are non-empty").0.clone()
            }
            DistributionKind::UniformSupport { support } => {
                support[rng.gen_range(0..support.len())].clone()
            }
            DistributionKind::PrgInduced { prg, .. } => {
                let seed = BitString::random(prg.seed_len(), rng);
                prg::stretch(prg, &seed).expect("seed length matches config")
            }
        }
    }

    /// The channel-spec document for this distribution.
    pub fn to_spec_file(&self) -> ChannelSpecFile {
        let mut file = ChannelSpecFile {
            n: self.n,
            kind: String::new(),
            weights: None,
            support: None,
            prg: None,
        };
        match &self.kind {
            DistributionKind::Explicit { weights } => {
                file.kind = "explicit".into();
                file.weights = Some(weights.iter().map(|(x, w)| (x.to_hex(), *w)).collect());
            }
            DistributionKind::UniformSupport { support } => {
                file.kind = "uniform_support".into();
                file.support = Some(support.iter().map(BitString::to_hex).collect());
            }
            DistributionKind::PrgInduced { prg, .. } => {
                file.kind = "prg".into();
                file.prg = Some(PrgSpecFile {
                    owf_id: prg.owf().id().to_string(),
                    seed_len: prg.seed_len(),
                });
            }
        }
        file
    }
}

/// On-disk channel description. Bitstrings are hex with the GF(2) byte packing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpecFile {
    pub n: usize,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prg: Option<PrgSpecFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrgSpecFile {
    pub owf_id: String,
    pub seed_len: usize,
}

fn spec_err(field: impl Into<String>, reason: impl ToString) -> ChannelError {
    ChannelError::Spec {
        field: field.into(),
        reason: reason.to_string(),
    }
}

impl ChannelSpecFile {
    pub fn from_json(text: &str) -> Result<Self, ChannelError> {
        serde_json::from_str(text).map_err(|e| spec_err("<document>", e))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec file serializes")
    }

    pub fn to_distribution(&self) -> Result<DistributionSpec, ChannelError> {
        let n = self.n;
        if n == 0 {
            return Err(spec_err("n", "must be at least 1"));
        }
        let parse = |field: String, hex: &str| {
            BitString::from_hex(n, hex).map_err(|e| spec_err(field, e))
        };
        match self.kind.as_str() {
            "explicit" => {
                let weights = self
                    .weights
                    .as_ref()
                    .ok_or_else(|| spec_err("weights", "required for kind \"explicit\""))?;
                let parsed = weights
                    .iter()
                    .map(|(k, &w)| Ok((parse(format!("weights.{k}"), k)?, w)))
                    .collect::<Result<Vec<_>, ChannelError>>()?;
                DistributionSpec::explicit(n, parsed).map_err(|e| spec_err("weights", e))
            }
            "uniform_support" => {
                let support = self
                    .support
                    .as_ref()
                    .ok_or_else(|| spec_err("support", "required for kind \"uniform_support\""))?;
                let parsed = support
                    .iter()
                    .enumerate()
                    .map(|(i, h)| parse(format!("support[{i}]"), h))
                    .collect::<Result<Vec<_>, _>>()?;
                DistributionSpec::uniform_support(n, parsed).map_err(|e| spec_err("support", e))
            }
            "prg" => {
                let p = self
                    .prg
                    .as_ref()
                    .ok_or_else(|| spec_err("prg", "required for kind \"prg\""))?;
                let owf = OwfSpec::from_id(&p.owf_id, p.seed_len / 2)
                    .map_err(|e| spec_err("prg.owf_id", e))?;
                let cfg = PrgConfig::new(owf, p.seed_len, n).map_err(|e| spec_err("prg.seed_len", e))?;
                Ok(prg::induced_distribution(&cfg))
            }
            other => Err(spec_err(
                "kind",
                format!("unknown kind {other:?} (expected explicit, uniform_support or prg)"),
            )),
        }
    }
}

/// Which Pauli family labels the Choi-state mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionBasis {
    /// `(Z^x ⊗ I)|gamma>`, as produced by the channel.
    PhaseFlip,
    /// `(X^x ⊗ I)|gamma>`, after Hadamards on every qubit of both halves.
    BitFlip,
}

impl CorrectionBasis {
    fn pauli(self, x: &BitString) -> PauliString {
        match self {
            Self::PhaseFlip => PauliString::z_string(x.clone()),
            Self::BitFlip => PauliString::x_string(x.clone()),
        }
    }
}

/// The Choi state as a classical mixture; no matrix unless asked for.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMixture {
    pub dist: DistributionSpec,
    pub basis: CorrectionBasis,
}

impl ChoiMixture {
    pub fn n(&self) -> usize {
        self.dist.n()
    }

    /// Applies Hadamards to every qubit of both halves, swapping Z and X labels.
    pub fn hadamard_frame(&self) -> Self {
        Self {
            dist: self.dist.clone(),
            basis: match self.basis {
                CorrectionBasis::PhaseFlip => CorrectionBasis::BitFlip,
                CorrectionBasis::BitFlip => CorrectionBasis::PhaseFlip,
            },
        }
    }

    /// `sum_x p(x) (P^x ⊗ I) gamma (P^x ⊗ I)^dagger`.
    pub fn render_dense(&self) -> Result<DenseState, ChannelError> {
        let n = self.n();
        check_dense_cap(n, MAX_DENSE_N)?;
        let gamma = DenseState::max_entangled(n)?;
        mix(&self.dist.weighted_support()?, |x| {
            Ok(gamma.apply_pauli(&self.basis.pauli(x), Side::Left)?)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedDephasingChannel {
    dist: DistributionSpec,
}

impl GeneralizedDephasingChannel {
    pub fn new(dist: DistributionSpec) -> Self {
        Self { dist }
    }

    pub fn n(&self) -> usize {
        self.dist.n()
    }

    pub fn dist(&self) -> &DistributionSpec {
        &self.dist
    }

    pub fn choi_mixture(&self) -> ChoiMixture {
        ChoiMixture {
            dist: self.dist.clone(),
            basis: CorrectionBasis::PhaseFlip,
        }
    }

    pub fn sample_x<R: Rng + ?Sized>(&self, rng: &mut R) -> BitString {
        self.dist.sample(rng)
    }

    /// Outcome of a Bell-basis measurement of one copy of the Choi state.
    ///
    /// The Choi state is diagonal in the Bell basis with weight `p(x)` on
    /// `(Z^x ⊗ I)|gamma>`, so the outcome label is distributed exactly as `x`.
    pub fn choi_syndrome_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BitString {
        self.dist.sample(rng)
    }

    /// `D_p[rho]` for an `n`-qubit state.
    pub fn apply_dense(&self, rho: &DenseState) -> Result<DenseState, ChannelError> {
        let n = self.n();
        check_dense_cap(n, MAX_DENSE_N)?;
        if rho.qubits() != n {
            return Err(OracleError::DimensionMismatch {
                left: rho.qubits(),
                right: n,
            }
            .into());
        }
        mix(&self.dist.weighted_support()?, |x| {
            Ok(rho.apply_pauli_at(&PauliString::z_string(x.clone()), 0)?)
        })
    }

    /// `(D_p ⊗ id)` or `(id ⊗ D_p)` on a `2n`-qubit state.
    pub fn apply_dense_on(&self, rho: &DenseState, side: Side) -> Result<DenseState, ChannelError> {
        check_dense_cap(self.n(), MAX_DENSE_N)?;
        mix(&self.dist.weighted_support()?, |x| {
            Ok(rho.apply_pauli(&PauliString::z_string(x.clone()), side)?)
        })
    }

    /// Choi state: the channel applied to the left half of `|gamma>`.
    pub fn choi_dense(&self) -> Result<DenseState, ChannelError> {
        check_dense_cap(self.n(), MAX_DENSE_N)?;
        let gamma = DenseState::max_entangled(self.n())?;
        self.apply_dense_on(&gamma, Side::Left)
    }

    /// Simulates the channel by teleporting `rho` through one copy of its Choi state.
    pub fn teleport_simulate(&self, rho: &DenseState) -> Result<DenseState, ChannelError> {
        check_dense_cap(self.n(), MAX_TELEPORT_N)?;
        let resource = self.choi_dense()?;
        Ok(dense::teleport_through(&resource, rho)?)
    }
}

fn check_dense_cap(n: usize, max: usize) -> Result<(), ChannelError> {
    if n > max {
        return Err(ChannelError::DenseCap { n, max });
    }
    Ok(())
}

fn mix(
    support: &[(BitString, f64)],
    term: impl Fn(&BitString) -> Result<DenseState, ChannelError>,
) -> Result<DenseState, ChannelError> {
    let mut acc: Option<dense::CMatrix> = None;
    for (x, w) in support {
        let m = term(x)?.matrix() * num_complex::Complex64::new(*w, 0.0);
        acc = Some(match acc {
            Some(a) => a + m,
            None => m,
        });
    }
    let matrix = acc.ok_or_else(|| ChannelError::InvalidDistribution("empty support".into()))?;
    Ok(DenseState::from_matrix_unchecked(matrix)?)
}

pub type BellOutcome = ((BitString, BitString), f64);

/// Probabilities of the `4^n` Bell outcomes `(a, b)`, i.e. the weight of a
/// `2n`-qubit state on `(X^a Z^b ⊗ I)|gamma>`.
pub fn bell_basis_probabilities(
    state: &DenseState,
) -> Result<Vec<BellOutcome>, ChannelError> {
    let n = state.qubits() / 2;
    let gamma = DenseState::max_entangled(n)?;
    let side = 1u64 << n;
    let mut out = Vec::with_capacity((side * side) as usize);
    for a in 0..side {
        for b in 0..side {
            let (xa, zb) = (BitString::from_u64(n, a), BitString::from_u64(n, b));
            let p = PauliString::new(xa.clone(), zb.clone(), 0)?;
            let bell = gamma.apply_pauli(&p, Side::Left)?;
            let prob = (bell.matrix() * state.matrix()).trace().re;
            out.push(((xa, zb), prob));
        }
    }
    Ok(out)
}
