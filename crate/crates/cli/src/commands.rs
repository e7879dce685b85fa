use std::collections::BTreeMap;

use anyhow::{bail, Result};
use serde_json::json;

use strahler::exact::{Arithmetic, LogDpTable};
use strahler::montecarlo::{ReportBody, TailCell};
use strahler::phi::PhiEvaluator;
use strahler::rate::{rate_curve, GridSpec};
use strahler::verify::{run_suite, Suite, VerifyOptions};
use strahler::{
    branch_counts, catalan, enumerate_trees, exact_pmf, phi_iter, rate, rate_asym_left,
    rate_asym_right, rate_closed_form_r1, rate_clt_parabola, run_clt_experiment, run_horton_check,
    run_ld_experiment, sample_tree, xi_asym_left, xi_asym_right, xi_star, ExperimentConfig,
    StrahlerProfile, TreeSeed,
};

use crate::output::{Cell, Table};
use crate::{Command, SuiteArg, XiGrid};

fn profile_text(p: &StrahlerProfile) -> String {
    let parts: Vec<String> = p.counts().iter().map(u64::to_string).collect();
    parts.join(";")
}

fn list_text(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| crate::output::fmt_g17(*x)).collect();
    parts.join(",")
}

impl XiGrid {
    fn values(&self) -> Result<Vec<f64>> {
        if !self.xi.is_empty() {
            return Ok(self.xi.clone());
        }
        if self.xi_points < 2
            || self.xi_min.partial_cmp(&self.xi_max) != Some(std::cmp::Ordering::Less)
        {
            bail!("xi range needs xi_min < xi_max and at least 2 points");
        }
        let step = (self.xi_max - self.xi_min) / (self.xi_points - 1) as f64;
        Ok((0..self.xi_points)
            .map(|i| {
                if i + 1 == self.xi_points {
                    self.xi_max
                } else {
                    self.xi_min + step * i as f64
                }
            })
            .collect())
    }
}

/// Runs one subcommand; the flag is false when a verification failed.
pub fn run(cmd: &Command, seed: u64) -> Result<(Table, bool)> {
    let table = match cmd {
        Command::Enumerate { n, stats } => enumerate(*n, *stats, seed)?,
        Command::Pmf { r, n, mode } => pmf(*r, *n, (*mode).into(), seed)?,
        Command::Mgf { r, n, grid } => mgf(*r, *n, &grid.values()?, seed)?,
        Command::Phi { r, grid } => phi(*r, &grid.values()?, seed)?,
        Command::Rate { r, grid, points } => rate_table(*r, grid, *points, seed)?,
        Command::Asym { r, eta } => asym(*r, eta, seed)?,
        Command::Sample { n, count, trees } => sample(*n, *count, *trees, seed)?,
        Command::Clt { r, n, trials } => clt(ExperimentConfig::new(*r, *n, *trials, seed))?,
        Command::Ld { r, n, trials, y } => {
            ld(ExperimentConfig::new(*r, *n, *trials, seed).with_y_grid(y.clone()))?
        }
        Command::Horton { r, n, trials } => horton(ExperimentConfig::new(*r, *n, *trials, seed))?,
        Command::Verify { suite, quick } => return verify(*suite, *quick, seed),
    };
    Ok((table, true))
}

fn enumerate(n: usize, stats: bool, seed: u64) -> Result<Table> {
    let trees = enumerate_trees(n)?;
    if !stats {
        let mut t = Table::new(
            "enumerate",
            &["index", "tree", "leaves", "max_order", "profile"],
        )
        .config("n", n)
        .config("stats", false)
        .config("seed", seed);
        for (i, tree) in trees.enumerate() {
            let p = branch_counts(&tree);
            t.push(vec![
                i.into(),
                tree.to_string().into(),
                n.into(),
                p.max_order().into(),
                profile_text(&p).into(),
            ]);
        }
        return Ok(t);
    }
    let mut tally: BTreeMap<(usize, u64), u64> = BTreeMap::new();
    let mut top = 0;
    let profiles: Vec<StrahlerProfile> = trees.map(|tree| branch_counts(&tree)).collect();
    for p in &profiles {
        top = top.max(p.max_order());
    }
    for p in &profiles {
        for r in 1..=top {
            *tally.entry((r, p.get(r))).or_default() += 1;
        }
    }
    let total = catalan(n as u64).to_string().parse::<f64>()?;
    let mut t = Table::new("enumerate", &["r", "n", "k", "count", "prob"])
        .config("n", n)
        .config("stats", true)
        .config("seed", seed);
    t.summary("trees", json!(profiles.len()));
    for ((r, k), c) in tally {
        t.push(vec![
            r.into(),
            n.into(),
            k.into(),
            c.into(),
            (c as f64 / total).into(),
        ]);
    }
    Ok(t)
}

fn pmf(r: usize, n: usize, mode: Arithmetic, seed: u64) -> Result<Table> {
    let law = exact_pmf(r, n, mode)?;
    let mode_name = match mode {
        Arithmetic::Rational => "rational",
        Arithmetic::LogSpace => "log-space",
    };
    let mut t = Table::new("pmf", &["r", "n", "k", "prob_log", "prob", "prob_exact"])
        .config("r", r)
        .config("n", n)
        .config("mode", mode_name)
        .config("seed", seed);
    for k in law.support() {
        let exact = law
            .rational_prob(k)
            .map_or(Cell::Empty, |q| q.to_string().into());
        t.push(vec![
            r.into(),
            n.into(),
            k.into(),
            law.log_prob(k).into(),
            law.prob(k).into(),
            exact,
        ]);
    }
    Ok(t)
}

fn mgf(r: usize, n: usize, xis: &[f64], seed: u64) -> Result<Table> {
    let law = LogDpTable::new().pmf(r, n)?;
    let mut xs = xis.to_vec();
    xs.sort_by(f64::total_cmp);
    let mut t = Table::new(
        "mgf",
        &[
            "r",
            "n",
            "xi",
            "log_mgf",
            "log_mgf_over_n",
            "phi_limit",
            "abs_err",
        ],
    )
    .config("r", r)
    .config("n", n)
    .config("xi", list_text(&xs))
    .config("seed", seed);
    for xi in xs {
        let lm = law.log_mgf(xi);
        let scaled = lm / n as f64;
        let limit = phi_iter(r - 1, xi);
        t.push(vec![
            r.into(),
            n.into(),
            xi.into(),
            lm.into(),
            scaled.into(),
            limit.into(),
            (scaled - limit).abs().into(),
        ]);
    }
    Ok(t)
}

fn phi(r: usize, xis: &[f64], seed: u64) -> Result<Table> {
    let ev = PhiEvaluator::new(r);
    let mut t = Table::new(
        "phi",
        &["r", "xi", "phi", "dphi", "ddphi", "log_dphi", "log_ddphi"],
    )
    .config("r", r)
    .config("xi", list_text(xis))
    .config("seed", seed);
    for &xi in xis {
        let v = ev.eval(xi);
        let (dphi, ddphi, log_ddphi) = if r == 0 {
            (1.0, 0.0, f64::NEG_INFINITY)
        } else {
            (v.dphi(), v.ddphi(), v.log_ddphi)
        };
        t.push(vec![
            r.into(),
            xi.into(),
            v.phi().into(),
            dphi.into(),
            ddphi.into(),
            v.log_dphi.into(),
            log_ddphi.into(),
        ]);
    }
    Ok(t)
}

const RATE_COLUMNS: [&str; 10] = [
    "r",
    "y",
    "xi_star",
    "rate",
    "rate_closed_r1",
    "clt_parabola",
    "asym_left",
    "asym_right",
    "iterations",
    "residual",
];

fn rate_table(r: usize, grid: &[f64], points: usize, seed: u64) -> Result<Table> {
    let mut t = Table::new("rate", &RATE_COLUMNS).config("r", r);
    if grid.is_empty() {
        t = t.config("points", points).config("seed", seed);
        for row in rate_curve(r, GridSpec { points })? {
            let res = row.result;
            t.push(vec![
                r.into(),
                res.y.into(),
                res.xi_star.into(),
                res.rate.into(),
                row.rate_closed_r1.into(),
                row.clt_parabola.into(),
                row.asym_left.into(),
                row.asym_right.into(),
                res.iterations.into(),
                res.residual.into(),
            ]);
        }
        return Ok(t);
    }
    t = t.config("grid", list_text(grid)).config("seed", seed);
    let mu = 0.25f64.powi(r as i32);
    let top = 0.5f64.powi(r as i32);
    for &y in grid {
        let res = rate(r, y)?;
        let closed = if r == 1 {
            rate_closed_form_r1(y).ok()
        } else {
            None
        };
        let left = if y > 0.0 {
            Some(rate_asym_left(r, y)?)
        } else {
            None
        };
        let right = if y < top {
            Some(rate_asym_right(r, top - y)?)
        } else {
            None
        };
        t.push(vec![
            r.into(),
            y.into(),
            res.xi_star.into(),
            res.rate.into(),
            closed.into(),
            rate_clt_parabola(r, y - mu).into(),
            left.into(),
            right.into(),
            res.iterations.into(),
            res.residual.into(),
        ]);
    }
    Ok(t)
}

fn asym(r: usize, eta: &[f64], seed: u64) -> Result<Table> {
    let top = 0.5f64.powi(r as i32);
    let mu = 0.25f64.powi(r as i32);
    let etas: Vec<f64> = if eta.is_empty() {
        (2..=24).map(|j| top * 0.5f64.powi(j)).collect()
    } else {
        eta.to_vec()
    };
    let mut t = Table::new(
        "asym",
        &[
            "r",
            "eta",
            "rate_left",
            "asym_left",
            "err_left",
            "xi_left",
            "xi_asym_left",
            "rate_right",
            "asym_right",
            "err_right",
            "xi_right",
            "xi_asym_right",
            "rate_clt",
            "clt_parabola",
            "err_clt",
        ],
    )
    .config("r", r)
    .config("eta", list_text(&etas))
    .config("seed", seed);
    for e in etas {
        if !(e > 0.0 && e < top) {
            bail!("eta = {e} outside (0, {top})");
        }
        let rl = rate(r, e)?.rate;
        let al = rate_asym_left(r, e)?;
        let rr = rate(r, top - e)?.rate;
        let ar = rate_asym_right(r, e)?;
        let (rc, pc) = if mu + e <= top {
            (Some(rate(r, mu + e)?.rate), Some(rate_clt_parabola(r, e)))
        } else {
            (None, None)
        };
        t.push(vec![
            r.into(),
            e.into(),
            rl.into(),
            al.into(),
            (rl - al).into(),
            xi_star(r, e)?.xi.into(),
            xi_asym_left(r, e)?.into(),
            rr.into(),
            ar.into(),
            (rr - ar).into(),
            xi_star(r, top - e)?.xi.into(),
            xi_asym_right(r, e)?.into(),
            rc.into(),
            pc.into(),
            rc.zip(pc).map(|(a, b)| a - b).into(),
        ]);
    }
    Ok(t)
}

fn sample(n: usize, count: u64, trees: bool, seed: u64) -> Result<Table> {
    if n == 0 || n > strahler::montecarlo::SAMPLE_LEAF_CAP {
        bail!(
            "sample needs 1 <= n <= {}",
            strahler::montecarlo::SAMPLE_LEAF_CAP
        );
    }
    let mut cols = vec!["index", "seed", "stream", "leaves", "max_order", "profile"];
    if trees {
        cols.push("tree");
    }
    let mut t = Table::new("sample", &cols)
        .config("n", n)
        .config("count", count)
        .config("trees", trees)
        .config("seed", seed);
    for i in 0..count {
        let tree = sample_tree(n, TreeSeed::new(seed, i));
        let p = branch_counts(&tree);
        let mut row: Vec<Cell> = vec![
            i.into(),
            seed.into(),
            i.into(),
            n.into(),
            p.max_order().into(),
            profile_text(&p).into(),
        ];
        if trees {
            row.push(tree.to_string().into());
        }
        t.push(row);
    }
    Ok(t)
}

fn experiment_table(command: &'static str, cfg: &ExperimentConfig, cols: &[&'static str]) -> Table {
    let mut t = Table::new(command, cols)
        .config("r", cfg.r)
        .config("n", cfg.n)
        .config("trials", cfg.trials)
        .config("seed", cfg.seed);
    if !cfg.y_grid.is_empty() {
        t = t.config("y", list_text(&cfg.y_grid));
    }
    t
}

fn clt(cfg: ExperimentConfig) -> Result<Table> {
    let report = run_clt_experiment(&cfg)?;
    let ReportBody::Clt(s) = &report.body else {
        bail!("unexpected report kind")
    };
    let mut t = experiment_table(
        "clt",
        &cfg,
        &[
            "r",
            "n",
            "samples",
            "mean_fraction",
            "mean_half_width",
            "mean_exact",
            "mean_z",
            "variance_z",
            "variance_z_stderr",
            "variance_theory",
            "variance_exact",
            "within_1_sigma",
            "normal_within_1_sigma",
            "within_2_sigma",
            "normal_within_2_sigma",
            "variance_defined",
        ],
    );
    t.summary("checks", json!(report.checks));
    t.summary("passed", json!(report.passed()));
    t.push(vec![
        cfg.r.into(),
        cfg.n.into(),
        s.samples.into(),
        s.mean_fraction.into(),
        s.mean_half_width.into(),
        s.mean_exact.into(),
        s.mean_z.into(),
        s.variance_z.into(),
        s.variance_z_stderr.into(),
        s.variance_theory.into(),
        s.variance_exact.into(),
        s.within_1_sigma.into(),
        s.normal_within_1_sigma.into(),
        s.within_2_sigma.into(),
        s.normal_within_2_sigma.into(),
        s.variance_defined.into(),
    ]);
    Ok(t)
}

fn ld(cfg: ExperimentConfig) -> Result<Table> {
    let report = run_ld_experiment(&cfg)?;
    let ReportBody::LargeDeviation { cells } = &report.body else {
        bail!("unexpected report kind")
    };
    let mut t = experiment_table(
        "ld",
        &cfg,
        &[
            "r",
            "n",
            "y",
            "side",
            "hits",
            "trials",
            "frequency",
            "half_width",
            "log_frequency",
            "censored",
            "empirical_rate",
            "theory_rate",
            "exact_log_tail",
            "exact_rate",
            "exact_z_score",
        ],
    );
    t.summary("passed", json!(report.passed()));
    for c in cells {
        let TailCell {
            y,
            side,
            hits,
            trials,
            ..
        } = c;
        let side = match side {
            strahler::TailSide::Above => "above",
            strahler::TailSide::Below => "below",
        };
        t.push(vec![
            cfg.r.into(),
            cfg.n.into(),
            (*y).into(),
            side.into(),
            (*hits).into(),
            (*trials).into(),
            c.frequency.into(),
            c.half_width.into(),
            c.log_frequency.into(),
            c.censored.into(),
            c.empirical_rate.into(),
            c.theory_rate.into(),
            c.exact_log_tail.into(),
            c.exact_rate.into(),
            c.exact_z_score.into(),
        ]);
    }
    Ok(t)
}

fn horton(cfg: ExperimentConfig) -> Result<Table> {
    let report = run_horton_check(&cfg)?;
    let ReportBody::Horton { rows } = &report.body else {
        bail!("unexpected report kind")
    };
    let mut t = experiment_table(
        "horton",
        &cfg,
        &[
            "order",
            "mean_ratio",
            "deviation",
            "samples",
            "excluded",
            "pass",
        ],
    );
    t.summary("passed", json!(report.passed()));
    for (row, check) in rows.iter().zip(&report.checks) {
        t.push(vec![
            row.order.into(),
            row.mean_ratio.into(),
            row.deviation.into(),
            row.samples.into(),
            row.excluded.into(),
            check.pass.into(),
        ]);
    }
    Ok(t)
}

fn verify(suite: SuiteArg, quick: bool, seed: u64) -> Result<(Table, bool)> {
    let suite = match suite {
        SuiteArg::Tree => Suite::Tree,
        SuiteArg::Exact => Suite::Exact,
        SuiteArg::Phi => Suite::Phi,
        SuiteArg::Rate => Suite::Rate,
        SuiteArg::Mc => Suite::Mc,
        SuiteArg::All => Suite::All,
    };
    let summary = run_suite(suite, VerifyOptions { seed, quick })?;
    let suite_name = serde_json::to_value(summary.suite)?;
    let mut t = Table::new(
        "verify",
        &[
            "suite",
            "criterion",
            "name",
            "measured",
            "target",
            "tolerance",
            "pass",
        ],
    )
    .config("suite", suite_name.as_str().unwrap_or_default())
    .config("quick", quick)
    .config("seed", seed);
    t.summary("passed", json!(summary.passed));
    for rec in &summary.records {
        let part = serde_json::to_value(rec.suite)?;
        t.push(vec![
            part.as_str().unwrap_or_default().into(),
            rec.criterion.into(),
            rec.name.clone().into(),
            rec.measured.into(),
            if rec.target.is_nan() {
                Cell::Empty
            } else {
                rec.target.into()
            },
            rec.tolerance.into(),
            rec.pass.into(),
        ]);
    }
    Ok((t, summary.passed))
}
