//! Exact laws of the branch counts `S_{r,n}` under the uniform measure on
//! `n`-leaf trees.
//!
//! Pruning maps a uniform `n`-leaf tree with `S_{2,n} = m` to a uniform
//! `m`-leaf tree and shifts every order down by one. Hence the law of
//! `S_{r+1,n}` is the `w(n, ·)`-mixture of the laws of `S_{r,m}`, and the
//! recursion starts from the point mass `S_{1,n} = n`.
//!
//! Two arithmetic modes are offered: exact rationals (small `n`) and
//! natural-log binary64 (large `n`, where linear-space tails underflow).

mod dp;
mod kernel;

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::phi::phi_iter;
use crate::tree::{branch_counts, catalan, enumerate_trees};

pub use dp::LogDpTable;
pub use kernel::{prune_kernel, Arithmetic, KernelWeights, PruneKernel};

/// Largest `n` handled in rational mode.
pub const RATIONAL_CAP: usize = 64;
/// Largest `n` handled in log-space mode.
pub const LOG_SPACE_CAP: usize = 8192;
/// Largest `n` handled by the enumeration oracle.
pub const ORACLE_CAP: usize = 12;

/// Probability masses of one law over a contiguous integer support.
#[derive(Clone, Debug, PartialEq)]
pub enum Masses {
    Rational(Vec<BigRational>),
    /// Natural logarithms; `-inf` for zero mass.
    Log(Vec<f64>),
}

/// Law of `S_{r,n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchCountDistribution {
    order: usize,
    leaf_count: usize,
    start: u64,
    masses: Masses,
}

/// Which tail of `S_{r,n}/n` to sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailSide {
    /// `P(S/n > y)`
    Above,
    /// `P(S/n < y)`
    Below,
}

/// First two moments of a law; `exact` is filled in rational mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub exact: Option<(BigRational, BigRational)>,
}

impl BranchCountDistribution {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn mode(&self) -> Arithmetic {
        match self.masses {
            Masses::Rational(_) => Arithmetic::Rational,
            Masses::Log(_) => Arithmetic::LogSpace,
        }
    }

    pub fn masses(&self) -> &Masses {
        &self.masses
    }

    pub fn support(&self) -> RangeInclusive<u64> {
        self.start..=self.start + self.len() as u64 - 1
    }

    fn len(&self) -> usize {
        match &self.masses {
            Masses::Rational(v) => v.len(),
            Masses::Log(v) => v.len(),
        }
    }

    /// `log P(S = k)`, `-inf` off the support.
    pub fn log_prob(&self, k: u64) -> f64 {
        if !self.support().contains(&k) {
            return f64::NEG_INFINITY;
        }
        let i = (k - self.start) as usize;
        match &self.masses {
            Masses::Rational(v) => rational_ln(&v[i]),
            Masses::Log(v) => v[i],
        }
    }

    pub fn prob(&self, k: u64) -> f64 {
        self.log_prob(k).exp()
    }

    /// Exact `P(S = k)` in rational mode.
    pub fn rational_prob(&self, k: u64) -> Option<BigRational> {
        match &self.masses {
            Masses::Rational(v) => Some(if self.support().contains(&k) {
                v[(k - self.start) as usize].clone()
            } else {
                BigRational::zero()
            }),
            Masses::Log(_) => None,
        }
    }

    /// `(k, log P(S = k))` over the support.
    pub fn log_masses(&self) -> Vec<(u64, f64)> {
        self.support().map(|k| (k, self.log_prob(k))).collect()
    }

    /// Nonzero exact masses keyed by `k` (rational mode).
    pub fn nonzero_rational(&self) -> Option<BTreeMap<u64, BigRational>> {
        match &self.masses {
            Masses::Rational(v) => Some(
                v.iter()
                    .enumerate()
                    .filter(|(_, p)| !p.is_zero())
                    .map(|(i, p)| (self.start + i as u64, p.clone()))
                    .collect(),
            ),
            Masses::Log(_) => None,
        }
    }

    /// `log Σ_k P(S = k)`; zero up to rounding.
    pub fn log_total(&self) -> f64 {
        log_sum_exp(self.support().map(|k| self.log_prob(k)))
    }

    pub fn moments(&self) -> Moments {
        match &self.masses {
            Masses::Rational(v) => {
                let mut mean = BigRational::zero();
                let mut second = BigRational::zero();
                for (i, p) in v.iter().enumerate() {
                    let k = BigRational::from_integer(BigInt::from(self.start + i as u64));
                    mean += p * &k;
                    second += p * &k * &k;
                }
                let var = &second - &mean * &mean;
                Moments {
                    mean: rational_f64(&mean),
                    variance: rational_f64(&var),
                    exact: Some((mean, var)),
                }
            }
            Masses::Log(v) => {
                let probs: Vec<(f64, f64)> = v
                    .iter()
                    .enumerate()
                    .map(|(i, lp)| ((self.start + i as u64) as f64, lp.exp()))
                    .collect();
                let mean: f64 = probs.iter().map(|(k, p)| k * p).sum();
                let variance = probs.iter().map(|(k, p)| (k - mean) * (k - mean) * p).sum();
                Moments {
                    mean,
                    variance,
                    exact: None,
                }
            }
        }
    }

    /// `log E[exp(ξ S)]`.
    pub fn log_mgf(&self, xi: f64) -> f64 {
        log_sum_exp(self.support().map(|k| self.log_prob(k) + xi * k as f64))
    }

    /// `log P(S/n > y)` or `log P(S/n < y)`; `-inf` when the event is empty.
    pub fn log_tail(&self, y: f64, side: TailSide) -> f64 {
        let n = self.leaf_count as f64;
        log_sum_exp(
            self.support()
                .filter(|&k| {
                    let frac = k as f64 / n;
                    match side {
                        TailSide::Above => frac > y,
                        TailSide::Below => frac < y,
                    }
                })
                .map(|k| self.log_prob(k)),
        )
    }

    /// Exact tail probability (rational mode).
    pub fn rational_tail(&self, y: f64, side: TailSide) -> Option<BigRational> {
        let n = self.leaf_count as f64;
        let map = self.nonzero_rational()?;
        Some(
            map.into_iter()
                .filter(|&(k, _)| match side {
                    TailSide::Above => k as f64 / n > y,
                    TailSide::Below => (k as f64 / n) < y,
                })
                .fold(BigRational::zero(), |acc, (_, p)| acc + p),
        )
    }
}

fn check_args(r: usize, n: usize, mode: Arithmetic) -> Result<()> {
    if r == 0 {
        return domain("order r must be >= 1");
    }
    if n == 0 {
        return domain("leaf count n must be >= 1");
    }
    let cap = match mode {
        Arithmetic::Rational => RATIONAL_CAP,
        Arithmetic::LogSpace => LOG_SPACE_CAP,
    };
    if n > cap {
        return Err(Error::Resource {
            what: match mode {
                Arithmetic::Rational => "rational-mode leaf count",
                Arithmetic::LogSpace => "log-space leaf count",
            },
            requested: n as u64,
            cap: cap as u64,
        });
    }
    Ok(())
}

/// Law of `S_{r,n}` via the pruning recursion.
pub fn exact_pmf(r: usize, n: usize, mode: Arithmetic) -> Result<BranchCountDistribution> {
    match mode {
        Arithmetic::LogSpace => LogDpTable::new().pmf(r, n),
        Arithmetic::Rational => {
            check_args(r, n, mode)?;
            let law = dp::rational_law(r, n);
            Ok(BranchCountDistribution {
                order: r,
                leaf_count: n,
                start: law.start,
                masses: Masses::Rational(law.mass),
            })
        }
    }
}

impl LogDpTable {
    /// Law of `S_{r,n}` in log space, reusing previously built levels.
    pub fn pmf(&mut self, r: usize, n: usize) -> Result<BranchCountDistribution> {
        check_args(r, n, Arithmetic::LogSpace)?;
        let law = self.law(r, n);
        Ok(BranchCountDistribution {
            order: r,
            leaf_count: n,
            start: law.start,
            masses: Masses::Log(law.mass),
        })
    }
}

pub fn exact_mean_var(r: usize, n: usize, mode: Arithmetic) -> Result<Moments> {
    Ok(exact_pmf(r, n, mode)?.moments())
}

pub fn exact_log_mgf(r: usize, n: usize, xi: f64, mode: Arithmetic) -> Result<f64> {
    Ok(exact_pmf(r, n, mode)?.log_mgf(xi))
}

/// `log P(S_{r,n}/n > y)` (or `< y`), strict inequalities; `-inf` if empty.
pub fn exact_log_tail(r: usize, n: usize, y: f64, side: TailSide, mode: Arithmetic) -> Result<f64> {
    if !(y > 0.0 && y < 1.0) {
        return domain(format!("tail threshold y = {y} outside (0, 1)"));
    }
    Ok(exact_pmf(r, n, mode)?.log_tail(y, side))
}

/// Law of `S_{r,n}` by brute-force enumeration of all `n`-leaf trees.
pub fn oracle_pmf(r: usize, n: usize) -> Result<BranchCountDistribution> {
    if r == 0 || n == 0 {
        return domain("oracle needs r >= 1 and n >= 1");
    }
    if n > ORACLE_CAP {
        return Err(Error::Resource {
            what: "oracle leaf count",
            requested: n as u64,
            cap: ORACLE_CAP as u64,
        });
    }
    let mut tally: BTreeMap<u64, u64> = BTreeMap::new();
    for tree in enumerate_trees(n)? {
        *tally.entry(branch_counts(&tree).get(r)).or_default() += 1;
    }
    let total = BigInt::from(catalan(n as u64));
    let (&lo, _) = tally.first_key_value().expect("at least one tree");
    let (&hi, _) = tally.last_key_value().expect("at least one tree");
    let masses = (lo..=hi)
        .map(|k| {
            BigRational::new(
                BigInt::from(tally.get(&k).copied().unwrap_or(0)),
                total.clone(),
            )
        })
        .collect();
    Ok(BranchCountDistribution {
        order: r,
        leaf_count: n,
        start: lo,
        masses: Masses::Rational(masses),
    })
}

/// One row of the `(1/n) log E[exp(ξ S_{r+1,n})] → φ^r(ξ)` series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    /// Composition depth of `φ^r`; the branch order is `r + 1`.
    pub r: usize,
    pub n: usize,
    pub xi: f64,
    pub log_mgf_over_n: f64,
    pub phi_r: f64,
    pub abs_err: f64,
}

/// Scaled exact log-MGFs of `S_{r+1,n}` against their limit `φ^r(ξ)`, for
/// every `(n, ξ)` pair, `n` outer and ascending as given.
pub fn mgf_convergence_series(r: usize, ns: &[usize], xis: &[f64]) -> Result<Vec<ConvergenceRow>> {
    if r == 0 {
        return domain("convergence series needs r >= 1");
    }
    let mut table = LogDpTable::new();
    let mut rows = Vec::with_capacity(ns.len() * xis.len());
    for &n in ns {
        let law = table.pmf(r + 1, n)?;
        for &xi in xis {
            let log_mgf_over_n = law.log_mgf(xi) / n as f64;
            let phi_r = phi_iter(r, xi);
            rows.push(ConvergenceRow {
                r,
                n,
                xi,
                log_mgf_over_n,
                phi_r,
                abs_err: (log_mgf_over_n - phi_r).abs(),
            });
        }
    }
    Ok(rows)
}

/// Max-shifted `log Σ exp(x_i)`; `-inf` for an empty or all-`-inf` input.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let peak = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return peak;
    }
    peak + v.iter().map(|x| (x - peak).exp()).sum::<f64>().ln()
}

fn biguint_ln(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("finite").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("finite");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a non-negative rational without overflow; `-inf` for zero.
pub(crate) fn rational_ln(q: &BigRational) -> f64 {
    if q.is_zero() {
        return f64::NEG_INFINITY;
    }
    debug_assert!(q.is_positive());
    let num = q.numer().magnitude();
    let den = q.denom().magnitude();
    biguint_ln(num) - biguint_ln(den)
}

pub(crate) fn rational_f64(q: &BigRational) -> f64 {
    match q.to_f64() {
        Some(v) if v.is_finite() => v,
        _ => {
            let sign = if q.is_negative() { -1.0 } else { 1.0 };
            sign * rational_ln(&q.abs()).exp()
        }
    }
}
