//! Sampling experiments: central-limit fluctuations, large-deviation tails
//! and Horton ratios of uniformly random trees.
//!
//! Trials are cut into fixed chunks of [`CHUNK_TRIALS`]; chunk `i` draws
//! from the stream `(seed, i)`. Chunks run in parallel and are merged in
//! chunk order, so a report depends on its configuration only, never on the
//! thread count.

use std::path::PathBuf;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exact::{Arithmetic, LogDpTable, TailSide, LOG_SPACE_CAP};
use crate::phi::clt_constants;
use crate::rate::rate;
use crate::tree::{grow_into, TreeSeed, NIL};

/// Trials per independent random stream.
pub const CHUNK_TRIALS: u64 = 4096;
/// Largest leaf count accepted by the samplers.
pub const SAMPLE_LEAF_CAP: usize = 1 << 24;
/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;
/// `P(|Z| ≤ 1)` and `P(|Z| ≤ 2)` for a standard normal.
pub const NORMAL_WITHIN_1: f64 = 0.682_689_492_137_085_9;
pub const NORMAL_WITHIN_2: f64 = 0.954_499_736_103_641_6;
/// Tail thresholds closer than this relative distance to the mean are rejected.
pub const MEAN_EXCLUSION: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Order: `S_{r+1,n}` is observed (CLT, tails); highest ratio order (Horton).
    pub r: usize,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    /// Tail thresholds for the large-deviation experiment.
    #[serde(default)]
    pub y_grid: Vec<f64>,
    /// Where the caller intends to write the report; not used here.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(r: usize, n: usize, trials: u64, seed: u64) -> Self {
        ExperimentConfig {
            r,
            n,
            trials,
            seed,
            y_grid: Vec::new(),
            output: None,
        }
    }

    pub fn with_y_grid(mut self, ys: Vec<f64>) -> Self {
        self.y_grid = ys;
        self
    }
}

/// A pass/fail flag derived from recorded numbers only.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn within(name: impl Into<String>, measured: f64, target: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            target,
            tolerance,
            pass: (measured - target).abs() <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CltSummary {
    pub samples: u64,
    /// Mean of `S_{r+1,n}/n`.
    pub mean_fraction: f64,
    /// 99% half-width of `mean_fraction`; `None` with one sample.
    pub mean_half_width: Option<f64>,
    /// `E[S/n]` from the exact law, when `n` is within the DP cap. It sits
    /// `O(1/n)` above the limit `4^{−r}`, which at large trial counts is
    /// wider than the confidence interval.
    pub mean_exact: Option<f64>,
    /// Mean and unbiased variance of `Z = √n (S/n − 4^{−r})`.
    pub mean_z: f64,
    pub variance_z: Option<f64>,
    /// Normal-approximation standard error of `variance_z`.
    pub variance_z_stderr: Option<f64>,
    pub variance_theory: f64,
    /// `n Var(S/n)` from the exact law, when `n` is within the DP cap.
    pub variance_exact: Option<f64>,
    pub within_1_sigma: f64,
    pub within_2_sigma: f64,
    pub normal_within_1_sigma: f64,
    pub normal_within_2_sigma: f64,
    pub variance_defined: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailCell {
    pub y: f64,
    pub side: TailSide,
    pub hits: u64,
    pub trials: u64,
    pub frequency: f64,
    /// 99% normal-approximation half-width of `frequency`.
    pub half_width: f64,
    /// `log(hits/trials)`, or the bound `log(3/trials)` when censored.
    pub log_frequency: f64,
    pub censored: bool,
    /// `−(1/n) log P̂`; a lower bound on the empirical rate when censored.
    pub empirical_rate: f64,
    pub theory_rate: f64,
    pub exact_log_tail: Option<f64>,
    pub exact_rate: Option<f64>,
    /// `(hits − T p)/√(T p (1 − p))` against the exact tail `p`.
    pub exact_z_score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HortonRow {
    /// Ratio `S_{order+1}/S_order`.
    pub order: usize,
    pub mean_ratio: f64,
    pub deviation: f64,
    pub samples: u64,
    /// Trees with `S_order = 0`, left out of the mean.
    pub excluded: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportBody {
    Clt(CltSummary),
    LargeDeviation { cells: Vec<TailCell> },
    Horton { rows: Vec<HortonRow> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub body: ReportBody,
    pub checks: Vec<Check>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Reusable buffers that sample a tree and read off its branch counts.
struct ProfileSampler {
    children: Vec<[u32; 2]>,
    parent: Vec<u32>,
    order: Vec<u8>,
    counts: Vec<u64>,
}

impl ProfileSampler {
    fn new(n: usize) -> Self {
        ProfileSampler {
            children: Vec::with_capacity(2 * n),
            parent: Vec::with_capacity(2 * n),
            order: Vec::with_capacity(2 * n),
            counts: Vec::with_capacity(32),
        }
    }

    /// Branch counts `S_1, S_2, …` of a fresh uniform `n`-leaf tree.
    ///
    /// Orders are settled bottom-up from the leaves: a zero entry marks an
    /// internal node still waiting for its second child. A child starts a
    /// branch exactly when its parent's order exceeds its own.
    fn sample<R: Rng>(&mut self, n: usize, rng: &mut R) -> &[u64] {
        let root = grow_into(n, rng, &mut self.children, &mut self.parent);
        self.order.clear();
        self.order.resize(self.children.len(), 0);
        self.counts.clear();
        self.counts.push(0);
        // Rémy growth puts leaves at even indices and internal nodes at odd ones
        for leaf in (0..self.children.len()).step_by(2) {
            self.order[leaf] = 1;
            let mut v = self.parent[leaf];
            while v != NIL {
                let [l, r] = self.children[v as usize];
                let (a, b) = (self.order[l as usize], self.order[r as usize]);
                if a == 0 || b == 0 {
                    break;
                }
                let o = if a == b { a + 1 } else { a.max(b) };
                self.order[v as usize] = o;
                if self.counts.len() < o as usize {
                    self.counts.resize(o as usize, 0);
                }
                for c in [a, b] {
                    if c < o {
                        self.counts[c as usize - 1] += 1;
                    }
                }
                v = self.parent[v as usize];
            }
        }
        self.counts[self.order[root as usize] as usize - 1] += 1;
        &self.counts
    }
}

/// `S_r` from a count slice, zero beyond the root order.
fn count(counts: &[u64], r: usize) -> u64 {
    counts.get(r - 1).copied().unwrap_or(0)
}

fn check_common(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.trials == 0 {
        return domain("trials must be >= 1");
    }
    if cfg.r == 0 {
        return domain("order r must be >= 1");
    }
    if cfg.n > SAMPLE_LEAF_CAP {
        return Err(Error::Resource {
            what: "sampled leaf count",
            requested: cfg.n as u64,
            cap: SAMPLE_LEAF_CAP as u64,
        });
    }
    Ok(())
}

/// Runs `per_tree` on every sampled tree of each chunk and collects one
/// accumulator per chunk, in chunk order.
fn run_chunks<A, F>(cfg: &ExperimentConfig, init: impl Fn() -> A + Sync, per_tree: F) -> Vec<A>
where
    A: Send,
    F: Fn(&mut A, &[u64]) + Sync,
{
    let chunks = cfg.trials.div_ceil(CHUNK_TRIALS);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = TreeSeed::new(cfg.seed, c).rng();
            let mut sampler = ProfileSampler::new(cfg.n);
            let mut acc = init();
            let len = CHUNK_TRIALS.min(cfg.trials - c * CHUNK_TRIALS);
            for _ in 0..len {
                per_tree(&mut acc, sampler.sample(cfg.n, &mut rng));
            }
            acc
        })
        .collect()
}

#[derive(Default)]
struct CltAcc {
    // powers of S − c for a fixed integer centre c
    sums: [i128; 4],
    within: [u64; 2],
}

/// Samples `Z = √n (S_{r+1,n}/n − 4^{−r})`.
pub fn run_clt_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    check_common(cfg)?;
    let r = cfg.r;
    if r >= 62 || cfg.n < 1usize << (r + 2) {
        return domain(format!(
            "CLT experiment needs n >= 2^(r+2), got n = {}",
            cfg.n
        ));
    }
    let n = cfg.n as f64;
    let (mu, var) = clt_constants(r);
    let centre = (n * mu).round() as i128;
    let sigma_s = (var * n).sqrt();
    let accs = run_chunks(cfg, CltAcc::default, |acc, counts| {
        let s = count(counts, r + 1) as i128;
        let d = s - centre;
        let mut p = 1i128;
        for slot in acc.sums.iter_mut() {
            p *= d;
            *slot += p;
        }
        let dev = (s as f64 - n * mu).abs();
        acc.within[0] += u64::from(dev <= sigma_s);
        acc.within[1] += u64::from(dev <= 2.0 * sigma_s);
    });
    let mut total = CltAcc::default();
    for a in accs {
        for (t, s) in total.sums.iter_mut().zip(a.sums) {
            *t += s;
        }
        total.within[0] += a.within[0];
        total.within[1] += a.within[1];
    }

    let t = cfg.trials as f64;
    let m1 = total.sums[0] as f64 / t;
    let mean_s = centre as f64 + m1;
    let mean_fraction = mean_s / n;
    let mean_z = n.sqrt() * (mean_fraction - mu);
    let variance_defined = cfg.trials >= 2;
    let (mut variance_z, mut variance_z_stderr, mut mean_half_width) = (None, None, None);
    if variance_defined {
        // central moments of S from the shifted power sums
        let m2 = total.sums[1] as f64 / t;
        let m3 = total.sums[2] as f64 / t;
        let m4 = total.sums[3] as f64 / t;
        let c2 = m2 - m1 * m1;
        let c4 = m4 - 4.0 * m3 * m1 + 6.0 * m2 * m1 * m1 - 3.0 * m1.powi(4);
        let unbiased = c2 * t / (t - 1.0);
        variance_z = Some(unbiased / n);
        variance_z_stderr = Some(((c4 - c2 * c2).max(0.0) / t).sqrt() / n);
        mean_half_width = Some(Z_99 * (unbiased / t).sqrt() / n);
    }
    let exact = if cfg.n <= LOG_SPACE_CAP {
        Some(LogDpTable::new().pmf(r + 1, cfg.n)?.moments())
    } else {
        None
    };
    let mean_exact = exact.as_ref().map(|m| m.mean / n);
    let variance_exact = exact.as_ref().map(|m| m.variance / n);

    let mut checks = Vec::new();
    if let Some(v) = variance_z {
        checks.push(Check::within("variance_vs_theory", v, var, 0.05 * var));
        if let (Some(e), Some(se)) = (variance_exact, variance_z_stderr) {
            checks.push(Check::within("variance_vs_exact", v, e, 3.0 * se));
        }
    }
    if let Some(h) = mean_half_width {
        match mean_exact {
            Some(m) => checks.push(Check::within("mean_ci_covers_exact", mean_fraction, m, h)),
            None => checks.push(Check::within("mean_ci_covers_limit", mean_fraction, mu, h)),
        }
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        body: ReportBody::Clt(CltSummary {
            samples: cfg.trials,
            mean_fraction,
            mean_half_width,
            mean_exact,
            mean_z,
            variance_z,
            variance_z_stderr,
            variance_theory: var,
            variance_exact,
            within_1_sigma: total.within[0] as f64 / t,
            within_2_sigma: total.within[1] as f64 / t,
            normal_within_1_sigma: NORMAL_WITHIN_1,
            normal_within_2_sigma: NORMAL_WITHIN_2,
            variance_defined,
        }),
        checks,
    })
}

/// Empirical tails `P̂(S_{r+1,n}/n > y)` above the mean and `P̂(· < y)`
/// below it, against the rate function and, when available, the exact tail.
pub fn run_ld_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    check_common(cfg)?;
    let r = cfg.r;
    let (mu, _) = clt_constants(r);
    let top = 0.5f64.powi(r as i32);
    if cfg.y_grid.is_empty() {
        return domain("large-deviation experiment needs a non-empty y grid");
    }
    for &y in &cfg.y_grid {
        if !(y > 0.0 && y < top) {
            return domain(format!("tail threshold {y} outside (0, {top})"));
        }
        if (y / mu - 1.0).abs() < MEAN_EXCLUSION {
            return domain(format!("tail threshold {y} too close to the mean {mu}"));
        }
    }
    let n = cfg.n as f64;
    let sides: Vec<TailSide> = cfg
        .y_grid
        .iter()
        .map(|&y| {
            if y > mu {
                TailSide::Above
            } else {
                TailSide::Below
            }
        })
        .collect();
    let grid = &cfg.y_grid;
    let accs = run_chunks(
        cfg,
        || vec![0u64; grid.len()],
        |hits, counts| {
            let frac = count(counts, r + 1) as f64 / n;
            for ((h, &y), side) in hits.iter_mut().zip(grid).zip(&sides) {
                let hit = match side {
                    TailSide::Above => frac > y,
                    TailSide::Below => frac < y,
                };
                *h += u64::from(hit);
            }
        },
    );
    let mut hits = vec![0u64; grid.len()];
    for a in accs {
        for (t, h) in hits.iter_mut().zip(a) {
            *t += h;
        }
    }

    let exact = if cfg.n <= LOG_SPACE_CAP {
        let mut table = LogDpTable::new();
        Some(table.pmf(r + 1, cfg.n)?)
    } else {
        None
    };
    debug_assert!(exact
        .as_ref()
        .is_none_or(|d| d.mode() == Arithmetic::LogSpace));
    let t = cfg.trials as f64;
    let mut cells = Vec::with_capacity(grid.len());
    let mut checks = Vec::new();
    for ((&y, &side), &h) in grid.iter().zip(&sides).zip(&hits) {
        let frequency = h as f64 / t;
        let censored = h == 0;
        let log_frequency = if censored {
            (3.0 / t).ln()
        } else {
            frequency.ln()
        };
        let exact_log_tail = exact.as_ref().map(|d| d.log_tail(y, side));
        let exact_z_score = exact_log_tail.map(|lp| {
            let p = lp.exp();
            let sd = (t * p * (1.0 - p)).sqrt();
            if sd > 0.0 {
                (h as f64 - t * p) / sd
            } else if h == 0 {
                0.0
            } else {
                f64::INFINITY
            }
        });
        if let Some(z) = exact_z_score {
            checks.push(Check::within(format!("tail_vs_exact_y={y}"), z, 0.0, 3.0));
        }
        cells.push(TailCell {
            y,
            side,
            hits: h,
            trials: cfg.trials,
            frequency,
            half_width: Z_99 * (frequency * (1.0 - frequency) / t).sqrt(),
            log_frequency,
            censored,
            empirical_rate: -log_frequency / n,
            theory_rate: rate(r, y)?.rate,
            exact_log_tail,
            exact_rate: exact_log_tail.map(|lp| -lp / n),
            exact_z_score,
        });
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        body: ReportBody::LargeDeviation { cells },
        checks,
    })
}

#[derive(Default)]
struct HortonAcc {
    sums: Vec<f64>,
    samples: Vec<u64>,
    excluded: Vec<u64>,
}

/// Means of `S_{k+1,n}/S_{k,n}` for `k = 1..=r`.
pub fn run_horton_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    check_common(cfg)?;
    let r = cfg.r;
    if r >= 61 || cfg.n < 1usize << (r + 3) {
        return domain(format!(
            "Horton check needs n >= 2^(r+3), got n = {}",
            cfg.n
        ));
    }
    let init = || HortonAcc {
        sums: vec![0.0; r],
        samples: vec![0; r],
        excluded: vec![0; r],
    };
    let accs = run_chunks(cfg, init, |acc, counts| {
        for k in 1..=r {
            let below = count(counts, k);
            if below == 0 {
                acc.excluded[k - 1] += 1;
            } else {
                acc.sums[k - 1] += count(counts, k + 1) as f64 / below as f64;
                acc.samples[k - 1] += 1;
            }
        }
    });
    let mut total = init();
    for a in accs {
        for k in 0..r {
            total.sums[k] += a.sums[k];
            total.samples[k] += a.samples[k];
            total.excluded[k] += a.excluded[k];
        }
    }
    let rows: Vec<HortonRow> = (0..r)
        .map(|k| {
            let mean_ratio = if total.samples[k] == 0 {
                f64::NAN
            } else {
                total.sums[k] / total.samples[k] as f64
            };
            HortonRow {
                order: k + 1,
                mean_ratio,
                deviation: mean_ratio - 0.25,
                samples: total.samples[k],
                excluded: total.excluded[k],
            }
        })
        .collect();
    let checks = rows
        .iter()
        .map(|row| {
            Check::within(
                format!("ratio_order_{}", row.order),
                row.mean_ratio,
                0.25,
                0.01,
            )
        })
        .collect();
    Ok(ExperimentReport {
        config: cfg.clone(),
        body: ReportBody::Horton { rows },
        checks,
    })
}
