//! Self-check suites behind `strahler verify`.
//!
//! Each record carries the measured quantity, the target, the tolerance and
//! the verdict, so a failing run documents itself.

use std::f64::consts::LN_2;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{exact_pmf, log_sum_exp};
use crate::exact::{
    mgf_convergence_series, oracle_pmf, prune_kernel, Arithmetic, KernelWeights, LogDpTable,
    TailSide, ORACLE_CAP,
};
use crate::montecarlo::{run_clt_experiment, run_ld_experiment, ExperimentConfig, ReportBody};
use crate::phi::{
    clt_constants, ddphi_iter, dphi_iter, phi, phi_iter, psi_iter, saddle_beta0, saddle_g,
};
use crate::rate::{
    legendre_roundtrip, rate, rate_asym_left, rate_asym_right, rate_closed_form_r1,
    rate_clt_parabola,
};
use crate::tree::{branch_counts, catalan, enumerate_trees, prune};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Tree,
    Exact,
    Phi,
    Rate,
    Mc,
    All,
}

impl Suite {
    fn parts(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![
                Suite::Tree,
                Suite::Exact,
                Suite::Phi,
                Suite::Rate,
                Suite::Mc,
            ],
            s => vec![s],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyRecord {
    pub suite: Suite,
    pub criterion: u32,
    pub name: String,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifySummary {
    pub suite: Suite,
    pub seed: u64,
    /// Monte Carlo trial counts reduced (tails by 100, CLT by 10).
    pub quick: bool,
    pub passed: bool,
    pub records: Vec<VerifyRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub quick: bool,
}

struct Recorder {
    suite: Suite,
    records: Vec<VerifyRecord>,
}

impl Recorder {
    fn within(
        &mut self,
        criterion: u32,
        name: impl Into<String>,
        measured: f64,
        target: f64,
        tol: f64,
    ) {
        let pass = (measured - target).abs() <= tol;
        self.push(criterion, name, measured, target, tol, pass);
    }

    fn holds(&mut self, criterion: u32, name: impl Into<String>, measured: f64, pass: bool) {
        self.push(criterion, name, measured, f64::NAN, 0.0, pass);
    }

    fn push(
        &mut self,
        criterion: u32,
        name: impl Into<String>,
        measured: f64,
        target: f64,
        tolerance: f64,
        pass: bool,
    ) {
        self.records.push(VerifyRecord {
            suite: self.suite,
            criterion,
            name: name.into(),
            measured,
            target,
            tolerance,
            pass,
        });
    }
}

pub fn run_suite(suite: Suite, opts: VerifyOptions) -> Result<VerifySummary> {
    let mut records = Vec::new();
    for part in suite.parts() {
        let mut rec = Recorder {
            suite: part,
            records: Vec::new(),
        };
        match part {
            Suite::Tree => tree_suite(&mut rec)?,
            Suite::Exact => exact_suite(&mut rec)?,
            Suite::Phi => phi_suite(&mut rec),
            Suite::Rate => rate_suite(&mut rec)?,
            Suite::Mc => mc_suite(&mut rec, opts)?,
            Suite::All => unreachable!("expanded above"),
        }
        records.extend(rec.records);
    }
    Ok(VerifySummary {
        suite,
        seed: opts.seed,
        quick: opts.quick,
        passed: records.iter().all(|r| r.pass),
        records,
    })
}

fn tree_suite(rec: &mut Recorder) -> Result<()> {
    for n in 1..=ORACLE_CAP {
        let mut count = 0u64;
        let mut shift_failures = 0u64;
        for t in enumerate_trees(n)? {
            count += 1;
            let p = branch_counts(&t);
            let ok = match prune(&t) {
                None => p.counts() == [1],
                Some(q) => {
                    let pq = branch_counts(&q);
                    q.leaf_count() as u64 == p.get(2) && pq.counts() == &p.counts()[1..]
                }
            };
            shift_failures += u64::from(!ok);
        }
        let want = catalan(n as u64);
        rec.holds(
            1,
            format!("catalan_n={n}"),
            count as f64,
            want == count.into(),
        );
        rec.within(
            4,
            format!("prune_shift_failures_n={n}"),
            shift_failures as f64,
            0.0,
            0.0,
        );
    }
    Ok(())
}

fn exact_suite(rec: &mut Recorder) -> Result<()> {
    let mut mismatches = 0u64;
    for n in 1..=ORACLE_CAP {
        for r in 1..=4 {
            let dp = exact_pmf(r, n, Arithmetic::Rational)?.nonzero_rational();
            let oracle = oracle_pmf(r, n)?.nonzero_rational();
            mismatches += u64::from(dp != oracle);
        }
    }
    rec.within(2, "oracle_mismatches", mismatches as f64, 0.0, 0.0);

    let mut unnormalized = 0u64;
    for n in 2..=64 {
        let k = prune_kernel(n, Arithmetic::Rational)?;
        if let KernelWeights::Rational(w) = k.weights() {
            let total = w.iter().fold(BigRational::zero(), |a, b| a + b);
            unnormalized += u64::from(!total.is_one());
        }
    }
    rec.within(
        3,
        "rational_kernel_sums_not_one",
        unnormalized as f64,
        0.0,
        0.0,
    );
    let mut worst: f64 = 0.0;
    for n in 2..=8192 {
        let k = prune_kernel(n, Arithmetic::LogSpace)?;
        if let KernelWeights::Log(w) = k.weights() {
            worst = worst.max(log_sum_exp(w.iter().copied()).exp_m1().abs());
        }
    }
    rec.within(3, "log_kernel_max_abs_sum_error", worst, 0.0, 1e-12);

    let ns = [64, 256, 1024, 4096];
    for r in 1..=2 {
        for xi in [-2.0, -1.0, 1.0, 2.0] {
            let rows = mgf_convergence_series(r, &ns, &[xi])?;
            let errs: Vec<f64> = rows.iter().map(|row| row.abs_err).collect();
            let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
            rec.holds(
                5,
                format!("mgf_error_decreasing_r={r}_xi={xi}"),
                errs[3],
                decreasing,
            );
            rec.within(
                5,
                format!("mgf_error_n=4096_r={r}_xi={xi}"),
                errs[3],
                0.0,
                0.01,
            );
        }
    }
    Ok(())
}

fn phi_suite(rec: &mut Recorder) {
    for r in 1..=6 {
        let (mu, var) = clt_constants(r);
        rec.within(6, format!("dphi_at_0_r={r}"), dphi_iter(r, 0.0), mu, 1e-12);
        rec.within(
            6,
            format!("ddphi_at_0_r={r}"),
            ddphi_iter(r, 0.0),
            var,
            1e-12,
        );
    }
    rec.within(6, "dphi_at_0_r=1_quarter", dphi_iter(1, 0.0), 0.25, 1e-12);
    rec.within(
        6,
        "ddphi_at_0_r=1_sixteenth",
        ddphi_iter(1, 0.0),
        1.0 / 16.0,
        1e-12,
    );
    let mut worst: f64 = 0.0;
    for i in 0..=200 {
        let xi = -10.0 + 0.1 * i as f64;
        let g = saddle_g(saddle_beta0(xi), xi).expect("β₀ lies in (0, 1/2)");
        worst = worst.max((g - phi(xi)).abs());
    }
    rec.within(13, "saddle_max_abs_error", worst, 0.0, 1e-12);
}

fn rate_suite(rec: &mut Recorder) -> Result<()> {
    let mut worst: f64 = 0.0;
    let mut worst_sym: f64 = 0.0;
    for i in 0..999 {
        let y = 0.01 + 0.48 * i as f64 / 998.0;
        let numeric = rate(1, y)?.rate;
        worst = worst.max((numeric - rate_closed_form_r1(y)?).abs());
        worst_sym = worst_sym.max((numeric - rate(1, 0.5 - y)?.rate).abs());
    }
    rec.within(7, "r1_closed_form_max_abs_error", worst, 0.0, 1e-10);
    rec.within(7, "r1_symmetry_max_abs_error", worst_sym, 0.0, 1e-10);

    for r in 1..=4 {
        let left = -psi_iter(r, 0.0)?.ln();
        let right = (2.0 - 2f64.powi(1 - r as i32)) * LN_2;
        rec.within(
            8,
            format!("rate_at_0_r={r}"),
            rate(r, 0.0)?.rate,
            left,
            1e-12,
        );
        rec.within(
            8,
            format!("rate_at_top_r={r}"),
            rate(r, 0.5f64.powi(r as i32))?.rate,
            right,
            1e-12,
        );
    }
    // the printed six-digit values, not the constants they round
    #[allow(clippy::approx_constant)]
    rec.within(8, "rate_1_0_numeric", rate(1, 0.0)?.rate, 0.693_147, 5e-7);
    rec.within(
        8,
        "rate_2_quarter_numeric",
        rate(2, 0.25)?.rate,
        1.039_721,
        5e-7,
    );

    let (e1, e2) = (1e-3, 5e-4);
    for r in 1..=4 {
        let top = 0.5f64.powi(r as i32);
        let left = |e: f64| -> Result<f64> { Ok(rate(r, e)?.rate - rate_asym_left(r, e)?) };
        let right = |e: f64| -> Result<f64> { Ok(rate(r, top - e)?.rate - rate_asym_right(r, e)?) };
        rec.within(
            9,
            format!("left_expansion_ratio_r={r}"),
            left(e1)? / left(e2)?,
            4.0,
            1.0,
        );
        rec.within(
            9,
            format!("right_expansion_ratio_r={r}"),
            right(e1)? / right(e2)?,
            4.0,
            1.0,
        );
    }
    // the cubic term vanishes for r = 1 by symmetry, so the ratio there is 16
    for r in 2..=4 {
        let (mu, _) = clt_constants(r);
        let para = |e: f64| -> Result<f64> { Ok(rate(r, mu + e)?.rate - rate_clt_parabola(r, e)) };
        rec.within(
            9,
            format!("parabola_ratio_r={r}"),
            para(e1)? / para(e2)?,
            8.0,
            2.0,
        );
    }

    for r in 1..=3 {
        for xi in [-3.0, -1.0, 0.0, 1.0, 3.0] {
            let err = (legendre_roundtrip(r, xi)? - phi_iter(r, xi)).abs();
            rec.within(10, format!("legendre_r={r}_xi={xi}"), err, 0.0, 1e-8);
        }
    }

    let ns = [64usize, 256, 1024, 4096];
    let cases = [
        (1, 0.30, TailSide::Above, 0.02),
        (1, 0.20, TailSide::Below, 0.02),
        (2, 0.125, TailSide::Above, 0.03),
    ];
    let mut table = LogDpTable::new();
    for (r, y, side, gap_tol) in cases {
        let target = rate(r, y)?.rate;
        let mut values = Vec::new();
        for &n in &ns {
            let lp = table.pmf(r + 1, n)?.log_tail(y, side);
            values.push(-lp / n as f64);
        }
        let decreasing = values.windows(2).all(|w| w[1] < w[0]);
        let last = values[values.len() - 1];
        rec.holds(
            11,
            format!("tail_rate_decreasing_r={r}_y={y}"),
            last,
            decreasing && last > target,
        );
        rec.within(
            11,
            format!("tail_rate_gap_r={r}_y={y}"),
            last - target,
            0.0,
            gap_tol,
        );
    }
    Ok(())
}

fn mc_suite(rec: &mut Recorder, opts: VerifyOptions) -> Result<()> {
    let (ld_scale, clt_scale) = if opts.quick { (100, 10) } else { (1, 1) };
    let ld =
        ExperimentConfig::new(1, 256, 10_000_000 / ld_scale, opts.seed).with_y_grid(vec![0.30]);
    let report = run_ld_experiment(&ld)?;
    let ReportBody::LargeDeviation { cells } = &report.body else {
        return Err(Error::Domain("unexpected report kind".into()));
    };
    let z = cells[0].exact_z_score.unwrap_or(f64::INFINITY);
    rec.within(12, "tail_z_score_vs_exact", z, 0.0, 3.0);

    let clt = ExperimentConfig::new(1, 4096, 100_000 / clt_scale, opts.seed);
    let report = run_clt_experiment(&clt)?;
    let ReportBody::Clt(s) = &report.body else {
        return Err(Error::Domain("unexpected report kind".into()));
    };
    let v = s.variance_z.unwrap_or(f64::NAN);
    rec.within(12, "clt_variance_vs_1/16", v, 1.0 / 16.0, 0.05 / 16.0);
    Ok(())
}
