use crate::error::{Error, Result};

use super::PairTerms;

/// Lennard-Jones 12-6 pair terms at squared distance `r2`.
pub fn lj_pair(r2: f64, sigma: f64, epsilon: f64) -> Result<PairTerms> {
    if !(r2 > 0.0) {
        return Err(Error::System("Lennard-Jones pair at zero separation".into()));
    }
    Ok(lj_terms(r2, sigma * sigma, 4.0 * epsilon))
}

/// Unchecked kernel; `sigma2 = sigma^2`, `eps4 = 4 epsilon`.
#[inline(always)]
pub(crate) fn lj_terms(r2: f64, sigma2: f64, eps4: f64) -> PairTerms {
    let s2 = sigma2 / r2;
    let s6 = s2 * s2 * s2;
    let s12 = s6 * s6;
    // r u' = -4e (12 s12 - 6 s6), r^2 u'' = 4e (156 s12 - 42 s6)
    let r_du = -eps4 * (12.0 * s12 - 6.0 * s6);
    PairTerms {
        energy: eps4 * (s12 - s6),
        force_over_r2: -r_du / r2,
        r_du,
        r2_d2u: eps4 * (156.0 * s12 - 42.0 * s6),
    }
}

/// `u(r)` only, for cutoff shifts and tail bookkeeping.
pub fn lj_energy(r: f64, sigma: f64, epsilon: f64) -> f64 {
    let s6 = (sigma / r).powi(6);
    4.0 * epsilon * (s6 * s6 - s6)
}
