use serde::{Deserialize, Serialize};

use super::bessel::{bessel_j_prime, spherical_j_prime};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BesselFamily {
    Cylindrical,
    Spherical,
}

const SCAN_STEP: f64 = 0.05;
const SCAN_LIMIT: f64 = 2000.0;

/// The `index`-th positive zero of J_n' (cylindrical) or j_n' (spherical),
/// i.e. the Neumann eigenvalues `k` of the unit disc / ball.
///
/// Zeros are bracketed by a sign scan from just above the origin and then
/// bisected to full double precision.
pub fn derivative_zero(family: BesselFamily, order: usize, index: usize) -> Result<f64> {
    if index == 0 {
        return Err(Error::InvalidInput("zero index is 1-based".into()));
    }
    let f = |x: f64| match family {
        BesselFamily::Cylindrical => bessel_j_prime(order, x),
        BesselFamily::Spherical => spherical_j_prime(order, x),
    };
    let mut lo = 1e-3;
    let mut flo = f(lo);
    let mut found = 0;
    while lo < SCAN_LIMIT {
        let hi = lo + SCAN_STEP;
        let fhi = f(hi);
        if flo == 0.0 || flo.signum() != fhi.signum() {
            found += 1;
            if found == index {
                return Ok(bisect(&f, lo, hi));
            }
        }
        lo = hi;
        flo = fhi;
    }
    Err(Error::Bracketing(format!(
        "zero #{index} of order-{order} {family:?} derivative not found below {SCAN_LIMIT}"
    )))
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
