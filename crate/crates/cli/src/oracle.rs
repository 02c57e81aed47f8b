//! The dense-oracle agreement suite behind `oracle-verify`.

use std::collections::BTreeSet;
use std::f64::consts::LN_2;

use anyhow::Context;
use compcap::channel::{DistributionSpec, GeneralizedDephasingChannel};
use compcap::dense::{self, DenseState};
use compcap::distill::{end_to_end_transmit, DistillConfig, SyndromeBits, TransmitStatus};
use compcap::gf2::{BitString, PauliString};
use compcap::stream_rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::commands::emit;
use crate::{Failure, OracleArgs};

pub const MAX_ORACLE_N: usize = 3;
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    case: u64,
    /// Absolute deviation from the closed form, or `1 - fidelity`.
    error: f64,
    tolerance: f64,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Debug, Serialize)]
struct SuiteReport {
    n: usize,
    cases: u64,
    checks: Vec<Check>,
    passed: usize,
    failed: usize,
}

#[derive(Debug, Serialize)]
struct Echo {
    n: usize,
    cases: u64,
    seed: u64,
}

fn random_support(n: usize, size: usize, rng: &mut ChaCha8Rng) -> Vec<BitString> {
    let mut set = BTreeSet::new();
    while set.len() < size {
        set.insert(BitString::random(n, rng));
    }
    set.into_iter().collect()
}

fn random_distribution(n: usize, rng: &mut ChaCha8Rng) -> Vec<(BitString, f64)> {
    let support = random_support(n, rng.gen_range(1..=1usize << n), rng);
    let raw: Vec<f64> = support.iter().map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    support.into_iter().zip(raw.into_iter().map(|w| w / total)).collect()
}

fn check(name: &'static str, case: u64, error: f64, note: Option<String>) -> Check {
    Check {
        name,
        case,
        error,
        tolerance: TOLERANCE,
        pass: error <= TOLERANCE,
        note,
    }
}

fn run_case(n: usize, case: u64, rng: &mut ChaCha8Rng) -> anyhow::Result<Vec<Check>> {
    let weights = random_distribution(n, rng);
    let h: f64 = weights.iter().map(|(_, p)| -p * p.ln()).sum();
    let ch = GeneralizedDephasingChannel::new(DistributionSpec::explicit(n, weights.clone())?);
    let choi = ch.choi_dense()?;
    let uniform = GeneralizedDephasingChannel::new(DistributionSpec::uniform(n)?).choi_dense()?;
    let mut out = vec![
        check("choi_entropy", case, (dense::von_neumann_entropy(&choi)? - h).abs(), None),
        check(
            "divergence_identity",
            case,
            (dense::relative_entropy(&choi, &uniform)? - (n as f64 * LN_2 - h)).abs(),
            None,
        ),
    ];

    let rho = DenseState::random_mixed(n, rng)?;
    let tele = dense::trace_distance(&ch.teleport_simulate(&rho)?, &ch.apply_dense(&rho)?)?;
    out.push(check("teleportation_equivalence", case, tele, None));

    // Bell-diagonal components (Z^x ⊗ I)|gamma> are pairwise orthogonal
    let gamma = DenseState::max_entangled(n)?;
    let (x, y) = (weights[0].0.clone(), BitString::random(n, rng));
    let component = |z: &BitString| gamma.apply_pauli_at(&PauliString::z_string(z.clone()), n);
    let overlap = dense::fidelity(&component(&x)?, &component(&y)?)?;
    let expected = if x == y { 1.0 } else { 0.0 };
    out.push(check("bell_orthogonality", case, (overlap - expected).abs(), None));

    let support = random_support(n, rng.gen_range(1..=1usize << n), rng);
    let m = rng.gen_range(0..n);
    let uniform_s = GeneralizedDephasingChannel::new(DistributionSpec::uniform_support(n, support.clone())?);
    let cfg = DistillConfig::new(n, support, SyndromeBits::Fixed(m), 1e-3, 1, case)?;
    let payload = DenseState::random_mixed(1, rng)?;
    let r = end_to_end_transmit(&uniform_s, &payload, &cfg, rng)?;
    let t = &r.transcript;
    let (error, note) = match t.status {
        TransmitStatus::Delivered => {
            let worst = t.distilled_fidelity.unwrap_or(0.0).min(t.payload_fidelity.unwrap_or(0.0));
            (1.0 - worst, None)
        }
        TransmitStatus::Aborted { ref reason } => (0.0, Some(format!("m = {m}, aborted: {reason}"))),
    };
    out.push(check("distillation_fidelity", case, error, note));
    Ok(out)
}

pub fn verify(args: &OracleArgs) -> Result<(), Failure> {
    if args.n == 0 || args.n > MAX_ORACLE_N {
        return Err(Failure::Usage(format!(
            "--n {} is outside the dense oracle range 1..={MAX_ORACLE_N}",
            args.n
        )));
    }
    let mut checks = Vec::new();
    for case in 0..args.cases {
        let mut rng = stream_rng(args.seed, case);
        checks.extend(run_case(args.n, case, &mut rng).with_context(|| format!("case {case}"))?);
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    let report = SuiteReport {
        n: args.n,
        cases: args.cases,
        passed: checks.len() - failed,
        failed,
        checks,
    };
    let summary = format!("{} of {} oracle checks passed", report.passed, report.passed + failed);
    let echo = Echo {
        n: args.n,
        cases: args.cases,
        seed: args.seed,
    };
    emit("oracle-verify", Some(args.seed), echo, report, &args.output, &summary)?;
    if failed > 0 {
        return Err(Failure::Invariant(format!("{failed} oracle checks failed")));
    }
    Ok(())
}
