//! The limiting cumulant function `φ(ξ) = ξ/4 + log cosh(ξ/4)`, its
//! compositions `φ^r`, their derivatives, and the `Ψ` map.
//!
//! Every derivative of `φ^r` is evaluated in log space through the identity
//! `log Ψ^k(e^ξ) = φ^k(ξ)`, so nothing overflows for large `|ξ|`.

use std::f64::consts::LN_2;

use crate::error::{domain, Result};

const LN_4: f64 = 2.0 * LN_2;

/// `φ(ξ) = log((e^{ξ/2} + 1)/2)`, in the overflow-safe form
/// `max(ξ/2, 0) − log 2 + log1p(e^{−|ξ/2|})`.
pub fn phi(xi: f64) -> f64 {
    let h = 0.5 * xi;
    h.max(0.0) - LN_2 + (-h.abs()).exp().ln_1p()
}

/// `Ψ(X) = (√X + 1)/2`.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
pub fn psi(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return domain(format!("psi needs X >= 0, got {x}"));
    }
    Ok(0.5 * (x.sqrt() + 1.0))
}

/// `Ψ^k(X)`, with `Ψ^0` the identity.
pub fn psi_iter(k: usize, x: f64) -> Result<f64> {
    let mut v = x;
    psi(x)?;
    for _ in 0..k {
        v = psi(v)?;
    }
    Ok(v)
}

/// `φ^r(ξ)`; `r = 0` is the identity.
pub fn phi_iter(r: usize, xi: f64) -> f64 {
    (0..r).fold(xi, |v, _| phi(v))
}

/// `[φ^0(ξ), φ^1(ξ), …, φ^r(ξ)]`.
pub fn phi_iterates(r: usize, xi: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(r + 1);
    out.push(xi);
    for k in 0..r {
        out.push(phi(out[k]));
    }
    out
}

/// `log (φ^r)'(ξ) = ξ/2 − r log 4 − (φ^r + Σ_{k=1..r} φ^k)/2`.
fn log_dphi_from(iterates: &[f64]) -> f64 {
    let r = iterates.len() - 1;
    let sum: f64 = iterates[1..].iter().sum();
    0.5 * iterates[0] - r as f64 * LN_4 - 0.5 * (iterates[r] + sum)
}

/// `log (φ^r)''(ξ)` from the Ψ-form sum over `l = 0..r−1`.
fn log_ddphi_from(iterates: &[f64], log_dphi: f64) -> f64 {
    let r = iterates.len() - 1;
    let mut prefix = 0.0; // Σ_{k=1..l} φ^k
    let mut terms = Vec::with_capacity(r);
    for l in 0..r {
        if l > 0 {
            prefix += iterates[l];
        }
        terms.push(-((l + 1) as f64) * LN_4 - iterates[l + 1] - 0.5 * (iterates[l] + prefix));
    }
    log_dphi + 0.5 * iterates[0] + crate::exact::log_sum_exp(terms)
}

/// `log (φ^r)'(ξ)`.
pub fn log_dphi_iter(r: usize, xi: f64) -> f64 {
    log_dphi_from(&phi_iterates(r, xi))
}

/// `(φ^r)'(ξ)`, strictly positive, increasing from 0 to `2^{−r}`.
pub fn dphi_iter(r: usize, xi: f64) -> f64 {
    log_dphi_iter(r, xi).exp()
}

/// `log (φ^r)''(ξ)`.
pub fn log_ddphi_iter(r: usize, xi: f64) -> f64 {
    let it = phi_iterates(r, xi);
    let ld = log_dphi_from(&it);
    log_ddphi_from(&it, ld)
}

/// `(φ^r)''(ξ)`, strictly positive for `r ≥ 1`.
pub fn ddphi_iter(r: usize, xi: f64) -> f64 {
    log_ddphi_iter(r, xi).exp()
}

/// Values of `φ^r` and its first two derivatives at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiValues {
    /// `φ^0(ξ) … φ^r(ξ)`
    pub iterates: Vec<f64>,
    pub log_dphi: f64,
    pub log_ddphi: f64,
}

impl PhiValues {
    pub fn phi(&self) -> f64 {
        *self.iterates.last().expect("non-empty")
    }

    pub fn dphi(&self) -> f64 {
        self.log_dphi.exp()
    }

    pub fn ddphi(&self) -> f64 {
        self.log_ddphi.exp()
    }
}

/// Evaluator of `φ^r` for a fixed composition depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhiEvaluator {
    r: usize,
}

impl PhiEvaluator {
    pub fn new(r: usize) -> Self {
        PhiEvaluator { r }
    }

    pub fn order(&self) -> usize {
        self.r
    }

    pub fn eval(&self, xi: f64) -> PhiValues {
        let iterates = phi_iterates(self.r, xi);
        let log_dphi = log_dphi_from(&iterates);
        let log_ddphi = log_ddphi_from(&iterates, log_dphi);
        PhiValues {
            iterates,
            log_dphi,
            log_ddphi,
        }
    }
}

/// Limiting mean `4^{−r}` and variance `(4^r − 1)/(3·16^r)` of `S_{r+1,n}/n`
/// (variance of the `√n`-scaled fluctuation).
pub fn clt_constants(r: usize) -> (f64, f64) {
    let four_r = 4f64.powi(r as i32);
    (1.0 / four_r, (four_r - 1.0) / (3.0 * four_r * four_r))
}

/// `g(β; ξ) = ξβ − (1−2β)log(1−2β) − 2β log β − β log 4 − log 2` on `0 < β < 1/2`.
pub fn saddle_g(beta: f64, xi: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 0.5) {
        return domain(format!("saddle function needs 0 < beta < 1/2, got {beta}"));
    }
    let c = 1.0 - 2.0 * beta;
    Ok(xi * beta - c * c.ln() - 2.0 * beta * beta.ln() - beta * LN_4 - LN_2)
}

/// `∂g/∂β = ξ + 2 log(1−2β) − 2 log β − log 4`.
pub fn saddle_dg(beta: f64, xi: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 0.5) {
        return domain(format!("saddle function needs 0 < beta < 1/2, got {beta}"));
    }
    Ok(xi + 2.0 * (1.0 - 2.0 * beta).ln() - 2.0 * beta.ln() - LN_4)
}

/// Maximizer `β₀(ξ) = e^{ξ/4}/(4 cosh(ξ/4)) = 1/(2(1 + e^{−ξ/2}))`.
pub fn saddle_beta0(xi: f64) -> f64 {
    0.5 / (1.0 + (-0.5 * xi).exp())
}
