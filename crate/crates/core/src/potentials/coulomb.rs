use std::f64::consts::PI;

use crate::error::{Error, Result};

use super::PairTerms;

/// Bare Coulomb energy `q1 q2 / r` and its radial derivative.
pub fn coulomb_pair(r: f64, q1: f64, q2: f64) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::System("Coulomb pair at zero separation".into()));
    }
    let u = q1 * q2 / r;
    Ok((u, -u / r))
}

#[inline(always)]
pub(crate) fn coulomb_terms(r2: f64, qq: f64) -> PairTerms {
    let r = r2.sqrt();
    let u = qq / r;
    PairTerms {
        energy: u,
        force_over_r2: u / r2,
        r_du: -u,
        r2_d2u: 2.0 * u,
    }
}

/// Site-site reaction field with a conducting-continuum dielectric
/// `epsilon_rf` beyond the cutoff.
///
/// Pair energy: `q_i q_j [1/r + k r^2 - c]` with
/// `k = (eps_rf - 1) / ((2 eps_rf + 1) r_c^3)` and `c = 1/r_c + k r_c^2`,
/// so that the pair energy vanishes at the cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReactionField {
    pub epsilon_rf: f64,
    pub cutoff: f64,
    k: f64,
    c: f64,
}

impl ReactionField {
    pub fn new(epsilon_rf: f64, cutoff: f64) -> Result<Self> {
        if !(epsilon_rf >= 1.0) {
            return Err(Error::System(format!("reaction-field permittivity must be >= 1, got {epsilon_rf}")));
        }
        if !(cutoff > 0.0) {
            return Err(Error::System("cutoff must be positive".into()));
        }
        let k = Self::dielectric_factor(epsilon_rf) / cutoff.powi(3);
        Ok(ReactionField {
            epsilon_rf,
            cutoff,
            k,
            c: 1.0 / cutoff + k * cutoff * cutoff,
        })
    }

    /// `(eps - 1) / (2 eps + 1)`; tends to 1/2 for a conducting boundary.
    pub fn dielectric_factor(epsilon_rf: f64) -> f64 {
        if epsilon_rf.is_infinite() {
            0.5
        } else {
            (epsilon_rf - 1.0) / (2.0 * epsilon_rf + 1.0)
        }
    }

    /// Returns `(coulomb part, reaction-field part)` of the pair; derivative
    /// terms cover both.
    #[inline(always)]
    pub(crate) fn terms(&self, r2: f64, qq: f64) -> (PairTerms, f64) {
        let r = r2.sqrt();
        let direct = qq / r;
        let field = qq * (self.k * r2 - self.c);
        let r_du = qq * (-1.0 / r + 2.0 * self.k * r2);
        let t = PairTerms {
            energy: direct + field,
            force_over_r2: -r_du / r2,
            r_du,
            r2_d2u: qq * (2.0 / r + 2.0 * self.k * r2),
        };
        (t, field)
    }

    pub fn pair(&self, r: f64, q1: f64, q2: f64) -> Result<PairTerms> {
        if !(r > 0.0) {
            return Err(Error::System("reaction-field pair at zero separation".into()));
        }
        Ok(self.terms(r * r, q1 * q2).0)
    }
}

/// erfc-screened real-space Ewald pair (no volume-derivative terms).
#[inline(always)]
pub(crate) fn ewald_real_terms(r2: f64, qq: f64, alpha: f64) -> PairTerms {
    let r = r2.sqrt();
    let ar = alpha * r;
    let erfc = libm::erfc(ar);
    let u = qq * erfc / r;
    let r_du = -u - qq * 2.0 * alpha / PI.sqrt() * (-ar * ar).exp();
    PairTerms {
        energy: u,
        force_over_r2: -r_du / r2,
        r_du,
        r2_d2u: 0.0,
    }
}
