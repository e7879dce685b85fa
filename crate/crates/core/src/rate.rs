//! The large-deviation rate function `I_r(y)`, the Legendre transform of
//! `φ^r`, and its closed-form approximations.
//!
//! `I_r(y) = y ξ* − φ^r(ξ*)` where `(φ^r)'(ξ*) = y`, for `0 < y < 2^{−r}`.
//! The minimum `I_r(4^{−r}) = 0` sits at the limiting mean; the endpoint
//! values are the finite limits `−log Ψ^r(0)` and `(2 − 2^{1−r}) log 2`.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::newton::{solve_increasing, Root};
use crate::phi::{clt_constants, phi_iter, psi_iter, PhiEvaluator};

/// Bound on `|(φ^r)'(ξ*) − y|`, in units of `2^{−r}`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;

/// Initial half-width of the bisection bracket around the Newton guess.
const BRACKET_HALF_WIDTH: f64 = 8.0;

/// One evaluation of the rate function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateFunctionResult {
    pub r: usize,
    pub y: f64,
    /// `±inf` at the endpoints.
    pub xi_star: f64,
    pub rate: f64,
    pub iterations: usize,
    /// `|(φ^r)'(ξ*) − y|`; zero at the endpoints.
    pub residual: f64,
}

/// Constants of the endpoint expansions for one order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpansionConstants {
    pub r: usize,
    /// `Q_r = 4^r [Ψ^r(0) Π_{k=1..r} Ψ^k(0)]^{1/2}`
    pub q_r: f64,
    /// `ρ_r = 2 − 2^{1−r}`
    pub rho_r: f64,
    /// `I_r(0) = −log Ψ^r(0)`
    pub endpoint_left_value: f64,
    /// `I_r(2^{−r}) = ρ_r log 2`
    pub endpoint_right_value: f64,
}

impl ExpansionConstants {
    pub fn new(r: usize) -> Self {
        let psis: Vec<f64> = (1..=r)
            .map(|k| psi_iter(k, 0.0).expect("0 is in the domain"))
            .collect();
        let top = psis.last().copied().unwrap_or(0.0);
        let log_prod: f64 = psis.iter().map(|p| p.ln()).sum();
        let q_r = (r as f64 * 4f64.ln() + 0.5 * (top.ln() + log_prod)).exp();
        let rho_r = rho(r);
        ExpansionConstants {
            r,
            q_r,
            rho_r,
            endpoint_left_value: -top.ln(),
            endpoint_right_value: rho_r * LN_2,
        }
    }

    /// `2^{r − 1 + 2^{1−r}}`, the scale inside the right-end logarithm.
    pub fn right_scale(&self) -> f64 {
        2f64.powf(self.r as f64 - 1.0 + 2f64.powi(1 - self.r as i32))
    }
}

/// `ρ_k = 2 − 2^{1−k}`; `ρ_1 = 1`, `ρ_{k+1} = ρ_k/2 + 1`.
pub fn rho(k: usize) -> f64 {
    2.0 - 2f64.powi(1 - k as i32)
}

fn check_order(r: usize) -> Result<()> {
    if r == 0 {
        return domain("order r must be >= 1");
    }
    Ok(())
}

fn right_end(r: usize) -> f64 {
    0.5f64.powi(r as i32)
}

/// Solution of `(φ^r)'(ξ) = y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct XiStar {
    pub xi: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// `ξ_r*(y)` for `0 < y < 2^{−r}` by safeguarded Newton–Raphson.
///
/// The iteration runs on `log (φ^r)'(ξ) − log y`, whose slope
/// `(φ^r)''/(φ^r)'` stays bounded away from zero at both ends of the domain.
pub fn xi_star(r: usize, y: f64) -> Result<XiStar> {
    check_order(r)?;
    let top = right_end(r);
    if !(y > 0.0 && y < top) {
        return domain(format!("xi_star(r={r}) needs 0 < y < {top}, got {y}"));
    }
    let (mu, _) = clt_constants(r);
    let guess = if (y / mu - 1.0).abs() < 0.5 {
        xi_clt_line(r, y - mu)
    } else if y < mu {
        xi_asym_left(r, y)?
    } else {
        xi_asym_right(r, top - y)?
    };
    let ev = PhiEvaluator::new(r);
    let log_y = y.ln();
    let f = |xi: f64| {
        let v = ev.eval(xi);
        (v.log_dphi - log_y, (v.log_ddphi - v.log_dphi).exp())
    };
    // On the left log (φ^r)' ≈ ξ/2, so its resolution scales with |ξ|; on the
    // right it sits near log 2^{−r} and is good to a few ulps.
    let tol = |xi: f64| 8.0 * f64::EPSILON * (1.0 + (-xi).max(0.0));
    let Root { x, iterations, .. } = solve_increasing(f, guess, BRACKET_HALF_WIDTH, tol)?;
    let residual = (ev.eval(x).dphi() - y).abs();
    if residual > RESIDUAL_TOLERANCE * top {
        return Err(Error::Solver {
            iterations,
            last_x: x,
            residual,
        });
    }
    Ok(XiStar {
        xi: x,
        iterations,
        residual,
    })
}

/// `I_r(y)` on the closed interval `[0, 2^{−r}]`.
pub fn rate(r: usize, y: f64) -> Result<RateFunctionResult> {
    check_order(r)?;
    let top = right_end(r);
    if !(0.0..=top).contains(&y) {
        return domain(format!("rate(r={r}) needs 0 <= y <= {top}, got {y}"));
    }
    let endpoint = |xi_star, rate| RateFunctionResult {
        r,
        y,
        xi_star,
        rate,
        iterations: 0,
        residual: 0.0,
    };
    if y == 0.0 {
        return Ok(endpoint(
            f64::NEG_INFINITY,
            ExpansionConstants::new(r).endpoint_left_value,
        ));
    }
    if y == top {
        return Ok(endpoint(f64::INFINITY, rho(r) * LN_2));
    }
    let s = xi_star(r, y)?;
    // tiny negative values are rounding around the minimum
    let value = (y * s.xi - phi_iter(r, s.xi)).max(0.0);
    Ok(RateFunctionResult {
        r,
        y,
        xi_star: s.xi,
        rate: value,
        iterations: s.iterations,
        residual: s.residual,
    })
}

/// Closed form for `r = 1`: with `x = 4y − 1`,
/// `I_1(y) = x atanh(x) + ½ log(1 − x²)`.
///
/// Evaluated through `1 + x = 4y` and `1 − x = 2 − 4y` so that neither end
/// loses precision to cancellation.
pub fn rate_closed_form_r1(y: f64) -> Result<f64> {
    if !(y > 0.0 && y < 0.5) {
        return domain(format!("closed form needs 0 < y < 1/2, got {y}"));
    }
    let x = 4.0 * y - 1.0;
    let (lp, lm) = ((4.0 * y).ln(), (2.0 - 4.0 * y).ln());
    Ok(0.5 * x * (lp - lm) + 0.5 * (lp + lm))
}

#[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0) {
        return domain(format!("expansion needs eta > 0, got {eta}"));
    }
    Ok(())
}

/// `ξ_r*(η) ≈ 2 log(Q_r η)` near `y = 0`.
pub fn xi_asym_left(r: usize, eta: f64) -> Result<f64> {
    check_order(r)?;
    check_eta(eta)?;
    Ok(2.0 * (ExpansionConstants::new(r).q_r * eta).ln())
}

/// `ξ_r*(2^{−r} − η) ≈ −2^r log(2^{r−1+2^{1−r}} η)` near `y = 2^{−r}`.
pub fn xi_asym_right(r: usize, eta: f64) -> Result<f64> {
    check_order(r)?;
    check_eta(eta)?;
    let c = ExpansionConstants::new(r);
    Ok(-2f64.powi(r as i32) * (c.right_scale() * eta).ln())
}

/// `I_r(η) ≈ 2η log(Q_r η) − log Ψ^r(0) − 2η`.
pub fn rate_asym_left(r: usize, eta: f64) -> Result<f64> {
    check_order(r)?;
    check_eta(eta)?;
    let c = ExpansionConstants::new(r);
    Ok(2.0 * eta * (c.q_r * eta).ln() + c.endpoint_left_value - 2.0 * eta)
}

/// `I_r(2^{−r} − η) ≈ 2^r η log(2^{r−1+2^{1−r}} η) + (2 − 2^{1−r}) log 2 − 2^r η`.
pub fn rate_asym_right(r: usize, eta: f64) -> Result<f64> {
    check_order(r)?;
    check_eta(eta)?;
    let c = ExpansionConstants::new(r);
    let two_r = 2f64.powi(r as i32);
    Ok(two_r * eta * (c.right_scale() * eta).ln() + c.endpoint_right_value - two_r * eta)
}

/// `I_r(4^{−r} + η) ≈ η² / (2 (φ^r)''(0)) = 3·16^r/(2(4^r − 1)) η²`.
pub fn rate_clt_parabola(r: usize, eta: f64) -> f64 {
    let (_, var) = clt_constants(r);
    eta * eta / (2.0 * var)
}

/// `ξ_r*(4^{−r} + η) ≈ 3·16^r/(4^r − 1) η`.
pub fn xi_clt_line(r: usize, eta: f64) -> f64 {
    let (_, var) = clt_constants(r);
    eta / var
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// `sup_y (ξ y − I_r(y))`, which recovers `φ^r(ξ)` by Legendre duality.
///
/// A 1024-point grid over `[0, 2^{−r}]` locates the maximizer; golden-section
/// search then narrows the bracket to width `1e-10`.
pub fn legendre_roundtrip(r: usize, xi: f64) -> Result<f64> {
    check_order(r)?;
    if !xi.is_finite() {
        return domain(format!("legendre_roundtrip needs finite xi, got {xi}"));
    }
    let top = right_end(r);
    let objective = |y: f64| -> Result<f64> { Ok(xi * y - rate(r, y)?.rate) };
    const GRID: usize = 1024;
    let ys: Vec<f64> = (0..GRID)
        .map(|i| top * i as f64 / (GRID - 1) as f64)
        .collect();
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &y) in ys.iter().enumerate() {
        let v = objective(y)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    let mut a = ys[best.0.saturating_sub(1)];
    let mut b = ys[(best.0 + 1).min(GRID - 1)];
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (objective(c)?, objective(d)?);
    while b - a > 1e-10 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = objective(d)?;
        }
    }
    let mid = objective(0.5 * (a + b))?;
    Ok(best.1.max(fc).max(fd).max(mid))
}

/// Grid over `[0, 2^{−r}]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    /// Number of points, endpoints included (at least 2).
    pub points: usize,
}

impl GridSpec {
    pub fn values(&self, r: usize) -> Vec<f64> {
        let top = right_end(r);
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    top
                } else {
                    top * i as f64 / last
                }
            })
            .collect()
    }
}

/// One row of the figure data: the rate function and every approximation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateCurveRow {
    pub result: RateFunctionResult,
    /// `r = 1` interior points only.
    pub rate_closed_r1: Option<f64>,
    pub clt_parabola: f64,
    pub xi_clt_line: f64,
    /// Left-end forms at `η = y` (absent at `y = 0`).
    pub asym_left: Option<f64>,
    pub xi_asym_left: Option<f64>,
    /// Right-end forms at `η = 2^{−r} − y` (absent at the right end).
    pub asym_right: Option<f64>,
    pub xi_asym_right: Option<f64>,
}

pub fn rate_curve(r: usize, grid: GridSpec) -> Result<Vec<RateCurveRow>> {
    check_order(r)?;
    if grid.points < 2 {
        return domain("rate curve needs at least 2 grid points");
    }
    let (mu, _) = clt_constants(r);
    let top = right_end(r);
    grid.values(r)
        .into_iter()
        .map(|y| {
            let result = rate(r, y)?;
            let left = (y > 0.0).then_some(y);
            let right = (y < top).then_some(top - y);
            Ok(RateCurveRow {
                result,
                rate_closed_r1: if r == 1 {
                    rate_closed_form_r1(y).ok()
                } else {
                    None
                },
                clt_parabola: rate_clt_parabola(r, y - mu),
                xi_clt_line: xi_clt_line(r, y - mu),
                asym_left: left.map(|e| rate_asym_left(r, e)).transpose()?,
                xi_asym_left: left.map(|e| xi_asym_left(r, e)).transpose()?,
                asym_right: right.map(|e| rate_asym_right(r, e)).transpose()?,
                xi_asym_right: right.map(|e| xi_asym_right(r, e)).transpose()?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xi_star_values() {
        assert!(xi_star(1, 0.25).unwrap().xi.abs() < 1e-12);
        assert!(xi_star(2, 1.0 / 16.0).unwrap().xi.abs() < 1e-12);
        let want = 4.0 * 0.5f64.atanh();
        assert!((xi_star(1, 0.375).unwrap().xi - want).abs() < 1e-12);
        assert!((want - 2.197_225).abs() < 1e-6);
    }

    #[test]
    fn xi_star_domain() {
        assert!(xi_star(1, 0.0).is_err());
        assert!(xi_star(1, 0.5).is_err());
        assert!(xi_star(2, 0.3).is_err());
        assert!(xi_star(0, 0.1).is_err());
        assert!(xi_star(1, f64::NAN).is_err());
    }

    #[test]
    fn rate_values() {
        assert_eq!(rate(1, 0.25).unwrap().rate, 0.0);
        assert!((rate(1, 0.0).unwrap().rate - LN_2).abs() < 1e-15);
        assert!((rate(2, 0.25).unwrap().rate - 1.5 * LN_2).abs() < 1e-15);
        assert!((1.5 * LN_2 - 1.039_721).abs() < 1e-6);
        let r = rate(1, 0.375).unwrap();
        assert!((r.rate - 0.130_812).abs() < 1e-6);
        assert!((r.rate - rate_closed_form_r1(0.375).unwrap()).abs() < 1e-14);
        assert!(rate(1, 0.51).is_err());
        assert!(rate(1, -0.01).is_err());
        assert_eq!(rate(3, 0.0).unwrap().xi_star, f64::NEG_INFINITY);
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(rate_closed_form_r1(0.25).unwrap(), 0.0);
        assert!((rate_closed_form_r1(0.3).unwrap() - 0.020_136).abs() < 1e-6);
        assert!((rate_closed_form_r1(1e-12).unwrap() - LN_2).abs() < 1e-9);
        assert!(rate_closed_form_r1(0.0).is_err());
        assert!(rate_closed_form_r1(0.5).is_err());
    }

    #[test]
    fn expansion_constants() {
        let c1 = ExpansionConstants::new(1);
        assert!((c1.q_r - 2.0).abs() < 1e-15);
        assert_eq!(c1.rho_r, 1.0);
        assert!((c1.right_scale() - 2.0).abs() < 1e-15);
        let c2 = ExpansionConstants::new(2);
        let psi2 = (0.5f64.sqrt() + 1.0) / 2.0;
        assert!((c2.endpoint_left_value + psi2.ln()).abs() < 1e-15);
        assert!((c2.endpoint_left_value - 0.158_347).abs() < 1e-6);
        for k in 1..8 {
            assert!((rho(k + 1) - (rho(k) / 2.0 + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn expansions_r1() {
        let eta = 1e-3;
        let left = xi_asym_left(1, eta).unwrap();
        assert!((left - 2.0 * (2e-3f64).ln()).abs() < 1e-12);
        let right = xi_asym_right(1, eta).unwrap();
        assert!((right + 2.0 * (2e-3f64).ln()).abs() < 1e-12);
        assert!((rate_asym_left(1, 1e-300).unwrap() - LN_2).abs() < 1e-12);
        assert!((rate_asym_right(2, 1e-300).unwrap() - 1.5 * LN_2).abs() < 1e-12);
        assert!(xi_asym_left(1, 0.0).is_err());
        assert!(rate_asym_right(1, -1.0).is_err());
    }

    #[test]
    fn clt_forms() {
        assert!((rate_clt_parabola(1, 0.01) - 8.0 * 1e-4).abs() < 1e-18);
        assert!((xi_clt_line(1, 0.01) - 0.16).abs() < 1e-15);
        assert_eq!(rate_clt_parabola(3, 0.0), 0.0);
        assert_eq!(xi_clt_line(3, 0.0), 0.0);
    }

    #[test]
    fn roundtrip_small() {
        assert!(legendre_roundtrip(2, 0.0).unwrap().abs() < 1e-12);
        assert!((legendre_roundtrip(1, 2.0).unwrap() - phi_iter(1, 2.0)).abs() < 1e-8);
    }

    #[test]
    fn curve_shape() {
        let rows = rate_curve(2, GridSpec { points: 5 }).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0].result.y, 0.0);
        assert!(rows[0].asym_left.is_none() && rows[4].asym_right.is_none());
        assert_eq!(rows[4].result.y, 0.25);
        assert!(rows.iter().all(|r| r.rate_closed_r1.is_none()));
        assert!((rows[0].result.rate - rows[4].result.rate).abs() > 0.1);
        assert!(rate_curve(1, GridSpec { points: 1 }).is_err());
    }
}
