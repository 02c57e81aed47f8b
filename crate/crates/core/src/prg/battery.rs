//! A fixed battery of efficient statistical tests comparing two
//! distributions over `{0,1}^n` by their samples.
//!
//! Every test estimates one or more event probabilities on both sample
//! sets. The reported advantage is `|p_a - p_b|` for the most significant
//! event, and the threshold is `z * sigma` with the pooled two-proportion
//! standard error. `z` is the two-sided 3-sigma level, Bonferroni-corrected
//! over the battery and over the events inside each test.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::PrgError;
use crate::channel::DistributionSpec;
use crate::gf2::{BitString, Gf2Matrix};
use crate::par::{self, Execution};
use crate::stream_rng;

pub const MIN_BATTERY_SAMPLES: usize = 1000;

const BATTERY: [&str; 5] = [
    "monobit_frequency",
    "per_position_bias",
    "serial_pair_correlation",
    "byte_histogram_chi2",
    "gf2_block_rank",
];

/// Minimum number of stacked blocks for the rank test.
const MIN_RANK_BLOCKS: usize = 20;
/// Minimum expected count per histogram cell.
const MIN_CELL_EXPECTATION: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryTest {
    pub name: String,
    pub advantage: f64,
    pub threshold: f64,
    /// `true` when the advantage stays within the sampling-noise threshold.
    pub pass: bool,
    pub skipped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Extra test statistic (the chi-square value for the histogram test).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdvantageReport {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub sigma_level: f64,
    pub tests: Vec<BatteryTest>,
}

impl AdvantageReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs the battery on `samples` draws from each distribution. Draws for
/// `dist_a` use stream 0 of `seed`, draws for `dist_b` stream 1.
pub fn distinguisher_battery(
    dist_a: &DistributionSpec,
    dist_b: &DistributionSpec,
    samples: usize,
    seed: u64,
) -> Result<AdvantageReport, PrgError> {
    if dist_a.n() != dist_b.n() {
        return Err(PrgError::LengthMismatch {
            expected: dist_a.n(),
            got: dist_b.n(),
        });
    }
    if samples < MIN_BATTERY_SAMPLES {
        return Err(PrgError::TooFewSamples {
            min: MIN_BATTERY_SAMPLES,
            got: samples,
        });
    }
    let draw = |dist: &DistributionSpec, stream: u64| -> Vec<BitString> {
        let mut rng = stream_rng(seed, stream);
        (0..samples).map(|_| dist.sample(&mut rng)).collect()
    };
    let a = draw(dist_a, 0);
    let b = draw(dist_b, 1);
    let n = dist_a.n();
    let tests = par::map_collect(BATTERY.len() as u64, Execution::default(), |i| {
        run_test(i as usize, n, &a, &b)
    });
    Ok(AdvantageReport {
        n,
        samples,
        seed,
        sigma_level: 3.0,
        tests,
    })
}

/// Two-sided critical value after splitting the 3-sigma tail over `comparisons`.
fn critical_z(comparisons: usize) -> f64 {
    let normal = Normal::standard();
    let alpha = 2.0 * normal.cdf(-3.0) / (BATTERY.len() * comparisons.max(1)) as f64;
    normal.inverse_cdf(1.0 - alpha / 2.0)
}

/// Event counts `(hits_a, trials_a, hits_b, trials_b)`.
#[derive(Clone, Copy)]
struct Event {
    hits_a: u64,
    trials_a: u64,
    hits_b: u64,
    trials_b: u64,
}

impl Event {
    fn diff(&self) -> f64 {
        (self.hits_a as f64 / self.trials_a as f64 - self.hits_b as f64 / self.trials_b as f64).abs()
    }

    fn pooled_sigma(&self) -> f64 {
        let p = (self.hits_a + self.hits_b) as f64 / (self.trials_a + self.trials_b) as f64;
        (p * (1.0 - p) * (1.0 / self.trials_a as f64 + 1.0 / self.trials_b as f64)).sqrt()
    }
}

fn finish(name: &str, events: &[Event], statistic: Option<f64>) -> BatteryTest {
    let z = critical_z(events.len());
    // most significant event; ties broken by raw difference
    let score = |e: &Event| {
        let s = e.pooled_sigma();
        if s > 0.0 {
            e.diff() / s
        } else if e.diff() > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    };
    let worst = events
        .iter()
        .max_by(|x, y| score(x).total_cmp(&score(y)).then(x.diff().total_cmp(&y.diff())))
        .expect("at least one event");
    let advantage = worst.diff();
    let threshold = z * worst.pooled_sigma();
    BatteryTest {
        name: name.to_string(),
        advantage,
        threshold,
        pass: advantage <= threshold,
        skipped: false,
        note: None,
        statistic,
    }
}

fn skipped(name: &str, note: String) -> BatteryTest {
    BatteryTest {
        name: name.to_string(),
        advantage: 0.0,
        threshold: 0.0,
        pass: true,
        skipped: true,
        note: Some(note),
        statistic: None,
    }
}

fn run_test(index: usize, n: usize, a: &[BitString], b: &[BitString]) -> BatteryTest {
    let name = BATTERY[index];
    match index {
        0 => {
            let ones = |s: &[BitString]| s.iter().map(|x| x.weight() as u64).sum::<u64>();
            let trials = |s: &[BitString]| (s.len() * n) as u64;
            finish(
                name,
                &[Event {
                    hits_a: ones(a),
                    trials_a: trials(a),
                    hits_b: ones(b),
                    trials_b: trials(b),
                }],
                None,
            )
        }
        1 => {
            let events: Vec<Event> = (0..n)
                .map(|j| Event {
                    hits_a: a.iter().filter(|x| x.get(j)).count() as u64,
                    trials_a: a.len() as u64,
                    hits_b: b.iter().filter(|x| x.get(j)).count() as u64,
                    trials_b: b.len() as u64,
                })
                .collect();
            finish(name, &events, None)
        }
        2 => {
            if n < 2 {
                return skipped(name, "needs at least 2 bits per sample".into());
            }
            let agree = |s: &[BitString]| {
                s.iter()
                    .map(|x| (0..n - 1).filter(|&j| x.get(j) == x.get(j + 1)).count() as u64)
                    .sum::<u64>()
            };
            let trials = |s: &[BitString]| (s.len() * (n - 1)) as u64;
            finish(
                name,
                &[Event {
                    hits_a: agree(a),
                    trials_a: trials(a),
                    hits_b: agree(b),
                    trials_b: trials(b),
                }],
                None,
            )
        }
        3 => byte_histogram(name, n, a, b),
        4 => block_rank(name, n, a, b),
        _ => unreachable!("battery has {} tests", BATTERY.len()),
    }
}

fn byte_histogram(name: &str, n: usize, a: &[BitString], b: &[BitString]) -> BatteryTest {
    let full_bytes = n / 8;
    if full_bytes == 0 {
        return skipped(name, "needs at least 8 bits per sample".into());
    }
    let cells = |s: &[BitString]| {
        let mut h = [0u64; 256];
        for x in s {
            for &byte in &x.to_bytes()[..full_bytes] {
                h[byte as usize] += 1;
            }
        }
        h
    };
    let (ha, hb) = (cells(a), cells(b));
    let (ta, tb) = ((a.len() * full_bytes) as u64, (b.len() * full_bytes) as u64);
    if (ta.min(tb) as f64) / 256.0 < MIN_CELL_EXPECTATION {
        return skipped(
            name,
            format!("needs at least {} bytes per side", (256.0 * MIN_CELL_EXPECTATION) as u64),
        );
    }
    // two-sample chi-square homogeneity statistic
    let (fa, fb) = (ta as f64, tb as f64);
    let chi2: f64 = (0..256)
        .filter(|&v| ha[v] + hb[v] > 0)
        .map(|v| {
            let (ca, cb) = (ha[v] as f64, hb[v] as f64);
            let k1 = (fb / fa).sqrt();
            (k1 * ca - cb / k1).powi(2) / (ca + cb)
        })
        .sum();
    let events: Vec<Event> = (0..256)
        .map(|v| Event {
            hits_a: ha[v],
            trials_a: ta,
            hits_b: hb[v],
            trials_b: tb,
        })
        .collect();
    finish(name, &events, Some(chi2))
}

fn block_rank(name: &str, n: usize, a: &[BitString], b: &[BitString]) -> BatteryTest {
    let blocks = a.len().min(b.len()) / n;
    if blocks < MIN_RANK_BLOCKS {
        return skipped(
            name,
            format!("needs {} samples for {MIN_RANK_BLOCKS} blocks of {n}", MIN_RANK_BLOCKS * n),
        );
    }
    let full_rank = |s: &[BitString]| {
        s.chunks_exact(n)
            .filter(|rows| {
                Gf2Matrix::from_rows(rows.to_vec())
                    .map(|m| m.rank() == n)
                    .unwrap_or(false)
            })
            .count() as u64
    };
    finish(
        name,
        &[Event {
            hits_a: full_rank(a),
            trials_a: (a.len() / n) as u64,
            hits_b: full_rank(b),
            trials_b: (b.len() / n) as u64,
        }],
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prg::{induced_distribution, PrgConfig};

    #[test]
    fn identical_distributions_pass_everything() {
        let d = DistributionSpec::uniform(8).unwrap();
        let report = distinguisher_battery(&d, &d, 10_000, 17).unwrap();
        assert_eq!(report.tests.len(), 5);
        for t in &report.tests {
            assert!(!t.skipped, "{}", t.name);
            assert!(t.pass, "{} advantage {} threshold {}", t.name, t.advantage, t.threshold);
        }
    }

    #[test]
    fn point_mass_is_caught_by_monobit() {
        let point = DistributionSpec::point_mass(BitString::zeros(8));
        let uniform = DistributionSpec::uniform(8).unwrap();
        let report = distinguisher_battery(&point, &uniform, 10_000, 3).unwrap();
        let mono = &report.tests[0];
        assert_eq!(mono.name, "monobit_frequency");
        assert!(mono.advantage > mono.threshold);
        assert!(!mono.pass);
    }

    #[test]
    fn toy_prg_report_shape() {
        let cfg = PrgConfig::from_id("toyexp", 16, 32).unwrap();
        let prg = induced_distribution(&cfg);
        // comparing against uniform over 32 bits by sampling only
        let uniform_cfg = PrgConfig::from_id("identity", 32, 32).unwrap();
        let uniform = crate::channel::DistributionSpec::prg_induced(uniform_cfg, None);
        let report = distinguisher_battery(&prg, &uniform, 10_000, 5).unwrap();
        assert_eq!(report.tests.len(), 5);
        for t in &report.tests {
            assert!(t.advantage.is_finite() && t.threshold.is_finite());
        }
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(json["samples"], 10_000);
        assert_eq!(json["seed"], 5);
    }

    #[test]
    fn validity_requirements() {
        let d = DistributionSpec::uniform(4).unwrap();
        assert!(matches!(
            distinguisher_battery(&d, &d, 999, 1),
            Err(PrgError::TooFewSamples { .. })
        ));
        let e = DistributionSpec::uniform(5).unwrap();
        assert!(distinguisher_battery(&d, &e, 1000, 1).is_err());
        let report = distinguisher_battery(&d, &d, 1000, 1).unwrap();
        let hist = &report.tests[3];
        assert!(hist.skipped && hist.pass);
    }

    #[test]
    fn critical_value_grows_with_comparisons() {
        let z1 = critical_z(1);
        assert!(z1 > 3.0 && z1 < 4.0, "{z1}");
        assert!(critical_z(256) > z1);
    }
}
