//! Bisection on monotone scalar functions over `[0, ∞)`.

use crate::error::{Error, Result};

/// Upper bracket search doubles from 1 at most this many times.
pub const MAX_DOUBLINGS: usize = 60;
const MAX_HALVINGS: usize = 400;

/// Smallest `x ≥ 0` (up to `eps`) with `f(x) ≤ target` for a non-increasing
/// `f`. Returns `0` when `f(0) ≤ target`; otherwise the upper end of the
/// final bracket, so `f(x) ≤ target` always holds at the returned point.
pub fn bisect_decreasing(mut f: impl FnMut(f64) -> f64, target: f64, eps: f64) -> Result<f64> {
    if f(0.0) <= target {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while f(hi) > target {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::Numerical(format!("no upper bracket below {hi:e} for target {target:e}")));
        }
    }
    for _ in 0..MAX_HALVINGS {
        if hi - lo <= eps {
            break;
        }
        let mid = 0.5 * (lo + hi);
        // Float floor: the bracket cannot shrink further.
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Same as [`bisect_decreasing`] for a non-decreasing `g` and the condition
/// `g(x) ≥ target`.
pub fn bisect_increasing(mut g: impl FnMut(f64) -> f64, target: f64, eps: f64) -> Result<f64> {
    bisect_decreasing(|x| -g(x), -target, eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_root_of_decreasing_function() {
        let x = bisect_decreasing(|x| 10.0 / (1.0 + x), 2.0, 1e-10).unwrap();
        assert!((x - 4.0).abs() < 1e-9);
        assert!(10.0 / (1.0 + x) <= 2.0);
    }

    #[test]
    fn zero_when_already_satisfied() {
        assert_eq!(bisect_decreasing(|x| 1.0 - x, 5.0, 1e-8).unwrap(), 0.0);
        assert_eq!(bisect_increasing(|x| x, -1.0, 1e-8).unwrap(), 0.0);
    }

    #[test]
    fn large_roots_terminate() {
        let x = bisect_decreasing(|x| 1e12 - x, 0.0, 1e-8).unwrap();
        assert!((x - 1e12).abs() <= 1e-3);
        assert!(bisect_decreasing(|_| 1.0, 0.0, 1e-8).is_err());
    }

    #[test]
    fn increasing_variant() {
        let x = bisect_increasing(|x| x.sqrt(), 3.0, 1e-12).unwrap();
        assert!((x - 9.0).abs() < 1e-9);
        assert!(x.sqrt() >= 3.0);
    }
}
