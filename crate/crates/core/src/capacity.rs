//! Closed-form entropies and capacities of generalized dephasing channels.
//!
//! For these channels the unbounded two-way capacity, the distillable
//! entanglement of the Choi state and the coherent information of the
//! maximally entangled input all equal `n ln 2 - H(p)`. The computational
//! capacity is only ever reported as regime-dependent bounds carrying
//! provenance notes.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::channel::{ChannelError, DistributionKind, DistributionSpec, GeneralizedDephasingChannel};
use crate::distill::{self, MSelection};

/// Disclaimer attached to capacities that hold only under a hardness assumption.
pub const ASSUMPTION_CONDITIONAL: &str = "assumption-conditional (Thm 8): the computational \
two-way capacity of a channel whose distribution is computationally indistinguishable from \
uniform vanishes, provided quantum-secure one-to-one one-way functions exist; the stand-in \
OWF used here is insecure, so this value is cited, not computed";

/// A quantity in nats with its value in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantity {
    pub nats: f64,
    pub bits: f64,
}

impl Quantity {
    pub fn from_nats(nats: f64) -> Self {
        Self {
            nats,
            bits: nats / LN_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    PolySupport,
    PrgInduced,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityReport {
    pub n: usize,
    pub regime: Regime,
    /// `true` when the entropy is only the seed-length ceiling, not exact.
    pub entropy_is_bound: bool,
    pub entropy_p: Quantity,
    /// Unbounded two-way capacity `D(p || u)`; a lower bound when the entropy is a bound.
    pub divergence_to_uniform: Quantity,
    pub coherent_info_lower: Quantity,
    pub computational_lower: Option<Quantity>,
    pub computational_upper: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub syndrome_bits: Option<MSelection>,
    pub delta: f64,
    pub provenance_notes: Vec<String>,
}

impl CapacityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `-sum p log p` in nats, exact.
pub fn shannon_entropy(dist: &DistributionSpec) -> Result<f64, ChannelError> {
    Ok(dist
        .weighted_support()?
        .iter()
        .map(|(_, p)| *p)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum())
}

/// `D(p || u) = n ln 2 - H(p)`.
pub fn divergence_to_uniform(dist: &DistributionSpec) -> Result<f64, ChannelError> {
    Ok(dist.n() as f64 * LN_2 - shannon_entropy(dist)?)
}

/// Fills in the exact unbounded quantities and the regime's computational bounds.
pub fn capacity_report(
    channel: &GeneralizedDephasingChannel,
    delta: f64,
) -> Result<CapacityReport, ChannelError> {
    let dist = channel.dist();
    let n = dist.n();
    let mut notes = vec![
        "unbounded two-way capacity = distillable entanglement of the Choi state = D(p||u)".to_string(),
        "coherent information of the maximally entangled input: n log 2 - S(J) with S(J) = H(p)".to_string(),
    ];
    let (entropy, entropy_is_bound) = match shannon_entropy(dist) {
        Ok(h) => (h, false),
        Err(ChannelError::NotEnumerable(seed_len)) => {
            notes.push(format!(
                "seed length {seed_len} is too large to enumerate; entropy reported as the bound seed_len*log 2, so capacities are lower bounds"
            ));
            (seed_len as f64 * LN_2, true)
        }
        Err(e) => return Err(e),
    };
    let divergence = (n as f64 * LN_2 - entropy).max(0.0);

    let (regime, lower, upper, selection) = match dist.kind() {
        DistributionKind::UniformSupport { support } => {
            let sel = distill::choose_m(support.len(), n, delta)
                .map_err(|e| ChannelError::InvalidDistribution(e.to_string()))?;
            notes.push(format!(
                "computational lower bound (n - m) log 2 from the scrambling protocol with m = {} syndrome bits at failure budget delta = {delta}",
                sel.m
            ));
            if sel.clamped {
                notes.push(format!(
                    "m = ceil(log2(|S|^2/delta)) = {} exceeds n = {n} and was clamped to n; the protocol then identifies x with certainty but yields 0 ebits",
                    sel.unclamped
                ));
            }
            notes.push("computational upper bound: the unbounded capacity".to_string());
            let lower = (n - sel.m) as f64 * LN_2;
            (Regime::PolySupport, Some(lower.min(divergence)), Some(divergence), Some(sel))
        }
        DistributionKind::PrgInduced { .. } => {
            notes.push(ASSUMPTION_CONDITIONAL.to_string());
            (Regime::PrgInduced, Some(0.0), Some(0.0), None)
        }
        DistributionKind::Explicit { .. } => {
            notes.push(
                "computational bounds omitted: no general efficient distillation algorithm exists for arbitrary explicit distributions".to_string(),
            );
            (Regime::Explicit, None, None, None)
        }
    };

    Ok(CapacityReport {
        n,
        regime,
        entropy_is_bound,
        entropy_p: Quantity::from_nats(entropy),
        divergence_to_uniform: Quantity::from_nats(divergence),
        coherent_info_lower: Quantity::from_nats(divergence),
        computational_lower: lower.map(Quantity::from_nats),
        computational_upper: upper.map(Quantity::from_nats),
        syndrome_bits: selection,
        delta,
        provenance_notes: notes,
    })
}
