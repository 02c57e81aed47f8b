use std::fs;
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::time::Duration;

use anyhow::{anyhow, Context};
use compcap::capacity::{capacity_report, CapacityReport, Quantity};
use compcap::channel::{ChannelSpecFile, GeneralizedDephasingChannel};
use compcap::distill::{DistillConfig, DistillProtocol, DistillReport, SyndromeBits, TrialOutcome};
use compcap::gf2::BitString;
use compcap::locc::{run_party, PartyRun, PartyStatus, Role};
use compcap::par::Execution;
use compcap::prg::{self, AdvantageReport, PrgConfig, MIN_BATTERY_SAMPLES};
use serde::Serialize;

use crate::{CapacityArgs, DistillArgs, Failure, LoccArgs, OutputArgs, ProtocolArgs, SeparationArgs};

/// Peer silence after which a LOCC party gives up.
const LOCC_READ_TIMEOUT: Duration = Duration::from_secs(30);

/// Common wrapper for every report the tool writes.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: Option<u64>,
    pub config: C,
    pub report: R,
}

pub fn emit<C: Serialize, R: Serialize>(
    command: &str,
    seed: Option<u64>,
    config: C,
    report: R,
    output: &OutputArgs,
    summary: &str,
) -> Result<(), Failure> {
    let env = Envelope {
        tool: "compcap",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed,
        config,
        report,
    };
    let json = serde_json::to_string_pretty(&env).context("serializing report")? + "\n";
    match &output.out {
        Some(path) => {
            fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
            println!("{summary}");
            println!("report written to {}", path.display());
        }
        None => print!("{json}"),
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<(), Failure> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--delta must lie in (0, 1), got {delta}")))
    }
}

/// One hex-packed element per line; blank lines and `#` comments are skipped.
pub fn read_support(path: &Path, n: usize) -> anyhow::Result<Vec<BitString>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading support file {}", path.display()))?;
    let mut support = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let x = BitString::from_hex(n, line)
            .with_context(|| format!("{} line {}: support element {line:?} for n = {n}", path.display(), i + 1))?;
        support.push(x);
    }
    if support.is_empty() {
        return Err(anyhow!("support file {} is empty", path.display()));
    }
    Ok(support)
}

#[derive(Debug, Serialize)]
struct ProtocolEcho<'a> {
    n: usize,
    support_file: String,
    support: Vec<String>,
    m: SyndromeBits,
    delta: f64,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    addr: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    role: Option<Role>,
}

fn protocol_config(args: &ProtocolArgs, trials: u64) -> Result<(DistillConfig, Vec<String>), Failure> {
    if args.n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    check_delta(args.delta)?;
    if let SyndromeBits::Fixed(m) = args.m {
        if m > args.n {
            return Err(Failure::Usage(format!("--m {m} exceeds --n {}", args.n)));
        }
    }
    let support = read_support(&args.support_file, args.n)?;
    let hex = support.iter().map(BitString::to_hex).collect();
    let cfg = DistillConfig::new(args.n, support, args.m, args.delta, trials, args.seed)
        .map_err(|e| Failure::Data(anyhow!(e).context("invalid protocol configuration")))?;
    Ok((cfg, hex))
}

#[derive(Debug, Serialize)]
struct CapacityEcho<'a> {
    spec_file: String,
    spec: &'a ChannelSpecFile,
    delta: f64,
}

pub fn capacity(args: &CapacityArgs) -> Result<(), Failure> {
    check_delta(args.delta)?;
    let text = fs::read_to_string(&args.spec).with_context(|| format!("reading {}", args.spec.display()))?;
    let spec = ChannelSpecFile::from_json(&text).with_context(|| format!("parsing {}", args.spec.display()))?;
    let dist = spec
        .to_distribution()
        .with_context(|| format!("validating {}", args.spec.display()))?;
    let report = capacity_report(&GeneralizedDephasingChannel::new(dist), args.delta).context("computing capacity")?;
    let summary = capacity_summary(&report);
    let echo = CapacityEcho {
        spec_file: args.spec.display().to_string(),
        spec: &spec,
        delta: args.delta,
    };
    emit("capacity", None, echo, report, &args.output, &summary)
}

fn fmt_q(q: Option<Quantity>) -> String {
    q.map_or_else(|| "n/a".into(), |q| format!("{:.6} bits", q.bits))
}

fn capacity_summary(r: &CapacityReport) -> String {
    format!(
        "n = {}, regime {:?}: unbounded capacity {:.6} bits{}, computational bounds [{}, {}]",
        r.n,
        r.regime,
        r.divergence_to_uniform.bits,
        if r.entropy_is_bound { " (lower bound)" } else { "" },
        fmt_q(r.computational_lower),
        fmt_q(r.computational_upper),
    )
}

#[derive(Debug, Serialize)]
struct DistillOutput {
    #[serde(flatten)]
    report: DistillReport,
    /// Present for single-trial runs, for comparison with a two-party run.
    #[serde(skip_serializing_if = "Option::is_none")]
    single_trial: Option<TrialOutcome>,
}

pub fn distill(args: &DistillArgs) -> Result<(), Failure> {
    let (cfg, hex) = protocol_config(&args.protocol, args.trials)?;
    let protocol = DistillProtocol::new(cfg).map_err(|e| Failure::Data(e.into()))?;
    let exec = if args.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let report = protocol.run_monte_carlo(exec).map_err(|e| Failure::Data(e.into()))?;
    let single_trial = if args.trials == 1 {
        Some(
            protocol
                .run_trial_seeded(protocol.trial_seed(0))
                .map_err(|e| Failure::Data(e.into()))?,
        )
    } else {
        None
    };
    let summary = format!(
        "n = {}, m = {}{}: {} of {} trials failed (rate {:.3e}, pairwise bound {:.3e}), mean {:.4} ebits per copy",
        protocol.n(),
        protocol.m(),
        if report.m_selection.clamped { " (clamped)" } else { "" },
        report.failures,
        report.trials,
        report.empirical_failure_rate,
        report.pairwise_bound,
        report.mean_ebits,
    );
    let broken = report.syndrome_relation_violations > 0 || !report.complexity_audit.within_caps;
    let echo = ProtocolEcho {
        n: args.protocol.n,
        support_file: args.protocol.support_file.display().to_string(),
        support: hex,
        m: args.protocol.m,
        delta: args.protocol.delta,
        seed: args.protocol.seed,
        trials: Some(args.trials),
        addr: None,
        role: None,
    };
    emit(
        "distill",
        Some(args.protocol.seed),
        echo,
        DistillOutput { report, single_trial },
        &args.output,
        &summary,
    )?;
    if broken {
        return Err(Failure::Invariant("syndrome relation or complexity caps violated".into()));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SeparationEcho<'a> {
    seed_len: usize,
    out_len: usize,
    owf: &'a str,
    samples: usize,
    seed: u64,
    delta: f64,
}

#[derive(Debug, Serialize)]
struct EntropyAccounting {
    seed_len: usize,
    out_len: usize,
    /// `seed_len log 2`: no deterministic stretch can exceed it.
    entropy_ceiling: Quantity,
    exact_entropy: Option<Quantity>,
    image_size: Option<usize>,
    /// `out_len log 2 - H`, exact when the image was enumerated, otherwise a lower bound.
    divergence_to_uniform: Quantity,
    enumerated: bool,
}

#[derive(Debug, Serialize)]
struct SeparationReport {
    prg: PrgConfig,
    capacity: CapacityReport,
    entropy_accounting: EntropyAccounting,
    battery: AdvantageReport,
}

pub fn separation(args: &SeparationArgs) -> Result<(), Failure> {
    check_delta(args.delta)?;
    if args.seed_len > args.out_len {
        return Err(Failure::Usage(format!(
            "--seed-len {} exceeds --out-len {}",
            args.seed_len, args.out_len
        )));
    }
    if args.samples < MIN_BATTERY_SAMPLES {
        return Err(Failure::Usage(format!("--samples must be at least {MIN_BATTERY_SAMPLES}")));
    }
    let cfg = PrgConfig::from_id(&args.owf, args.seed_len, args.out_len).map_err(|e| Failure::Usage(e.to_string()))?;
    let dist = prg::induced_distribution(&cfg);
    let capacity = capacity_report(&GeneralizedDephasingChannel::new(dist.clone()), args.delta).context("computing capacity")?;
    let image_size = dist.is_enumerable().then(|| dist.weighted_support().map(|s| s.len())).transpose().context("enumerating image")?;
    let accounting = EntropyAccounting {
        seed_len: args.seed_len,
        out_len: args.out_len,
        entropy_ceiling: Quantity::from_nats(cfg.entropy_bound_nats()),
        exact_entropy: (!capacity.entropy_is_bound).then_some(capacity.entropy_p),
        image_size,
        divergence_to_uniform: capacity.divergence_to_uniform,
        enumerated: !capacity.entropy_is_bound,
    };
    let reference = prg::uniform_reference(args.out_len).map_err(|e| Failure::Usage(e.to_string()))?;
    let battery = prg::distinguisher_battery(&dist, &reference, args.samples, args.seed).context("running battery")?;
    let flagged = battery.tests.iter().filter(|t| !t.skipped && !t.pass).count();
    let summary = format!(
        "{} seed {} -> {} bits: entropy {} {:.4} bits, unbounded capacity {} {:.4} bits, computational upper {} (assumption-conditional); battery: {} of {} tests above threshold",
        args.owf,
        args.seed_len,
        args.out_len,
        if capacity.entropy_is_bound { "<=" } else { "=" },
        capacity.entropy_p.bits,
        if capacity.entropy_is_bound { ">=" } else { "=" },
        capacity.divergence_to_uniform.bits,
        fmt_q(capacity.computational_upper),
        flagged,
        battery.tests.len(),
    );
    let echo = SeparationEcho {
        seed_len: args.seed_len,
        out_len: args.out_len,
        owf: &args.owf,
        samples: args.samples,
        seed: args.seed,
        delta: args.delta,
    };
    let report = SeparationReport {
        prg: cfg,
        capacity,
        entropy_accounting: accounting,
        battery,
    };
    emit("separation", Some(args.seed), echo, report, &args.output, &summary)
}

#[derive(Debug, Serialize)]
struct LoccOutput {
    #[serde(flatten)]
    run: PartyRun,
    scramble_seed: Option<u64>,
}

pub fn locc(args: &LoccArgs, role: Role) -> Result<(), Failure> {
    let (cfg, hex) = protocol_config(&args.protocol, 1)?;
    let protocol = DistillProtocol::new(cfg.clone()).map_err(|e| Failure::Data(e.into()))?;
    let seed = protocol.trial_seed(0);
    let mut stream = match role {
        Role::Bob => {
            let listener = TcpListener::bind(&args.addr).with_context(|| format!("cannot bind {}", args.addr))?;
            let local = listener.local_addr().context("reading bound address")?;
            eprintln!("listening on {local}");
            let (stream, peer) = listener.accept().context("accepting connection")?;
            eprintln!("accepted {peer}");
            stream
        }
        Role::Alice => TcpStream::connect(&args.addr).with_context(|| format!("cannot connect to {}", args.addr))?,
    };
    stream.set_read_timeout(Some(LOCC_READ_TIMEOUT)).context("configuring socket")?;
    stream.set_nodelay(true).context("configuring socket")?;
    let run = run_party(role, &mut stream, &cfg, seed);
    let status = run.status.clone();
    let summary = match (&status, &run.view.success) {
        (PartyStatus::Completed, Some(true)) => format!("{role}: completed, {} ebits", run.view.ebits_out),
        (PartyStatus::Completed, _) => format!("{role}: completed, identification failed"),
        (PartyStatus::Aborted { reason }, _) => format!("{role}: aborted: {reason}"),
    };
    let echo = ProtocolEcho {
        n: args.protocol.n,
        support_file: args.protocol.support_file.display().to_string(),
        support: hex,
        m: args.protocol.m,
        delta: args.protocol.delta,
        seed: args.protocol.seed,
        trials: None,
        addr: Some(&args.addr),
        role: Some(role),
    };
    let output = LoccOutput {
        run,
        scramble_seed: (role == Role::Alice).then_some(seed),
    };
    emit("locc", Some(args.protocol.seed), echo, output, &args.output, &summary)?;
    match status {
        PartyStatus::Completed => Ok(()),
        PartyStatus::Aborted { reason } => Err(Failure::Data(anyhow!("protocol aborted: {reason}"))),
    }
}
