//! Newton–Raphson safeguarded by bisection for increasing scalar functions.

use crate::error::{Error, Result};

/// Iteration cap; exceeding it on a monotone function indicates a bug.
pub const MAX_ITERATIONS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub x: f64,
    /// `h(x)` at the returned point.
    pub value: f64,
    pub iterations: usize,
}

/// Finds the root of a strictly increasing `h` given `f(x) = (h(x), h'(x))`.
///
/// A bracket `[guess − w, guess + w]` is widened geometrically until it
/// straddles the root. Each Newton step that leaves the bracket is replaced
/// by a bisection. Iteration stops once `|h| ≤ tol(x)` or the step falls
/// below the resolution of `x`.
pub fn solve_increasing<F, T>(f: F, guess: f64, half_width: f64, tol: T) -> Result<Root>
where
    F: Fn(f64) -> (f64, f64),
    T: Fn(f64) -> f64,
{
    let fail = |iterations, last_x: f64, residual: f64| Error::Solver {
        iterations,
        last_x,
        residual,
    };
    let mut width = half_width;
    let mut lo = guess - width;
    let mut iterations = 0;
    while f(lo).0 > 0.0 {
        width *= 2.0;
        lo = guess - width;
        iterations += 1;
        if iterations > MAX_ITERATIONS || !lo.is_finite() {
            return Err(fail(iterations, lo, f(lo).0));
        }
    }
    width = half_width;
    let mut hi = guess + width;
    while f(hi).0 < 0.0 {
        width *= 2.0;
        hi = guess + width;
        iterations += 1;
        if iterations > MAX_ITERATIONS || !hi.is_finite() {
            return Err(fail(iterations, hi, f(hi).0));
        }
    }

    let mut x = guess.clamp(lo, hi);
    for it in 1..=MAX_ITERATIONS {
        let (h, dh) = f(x);
        if h == 0.0 || h.abs() <= tol(x) {
            return Ok(Root {
                x,
                value: h,
                iterations: it,
            });
        }
        if h > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - h / dh;
        let next = if dh > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            let (h, _) = f(next);
            return Ok(Root {
                x: next,
                value: h,
                iterations: it,
            });
        }
        x = next;
    }
    Err(fail(MAX_ITERATIONS, x, f(x).0))
}
