//! Site-site Lennard-Jones tail corrections assuming a uniform structure
//! (`g = 1`) beyond the cutoff.
//!
//! Volume derivatives follow uniform scaling of the whole configuration, the
//! cutoff sphere included, so they equal the tail integrals of the pair
//! volume derivatives `r u'/(3V)` and `(r^2 u'' - 2 r u')/(9 V^2)`. This keeps
//! explicit + tail parts consistent with the virial pressure.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{SiteKind, SystemComposition};

use super::lj::lj_energy;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LongRangeCorrection {
    pub energy: f64,
    pub du_dv: f64,
    pub d2u_dv2: f64,
}

/// Sum over ordered species pairs and LJ site pairs, with Lorentz-Berthelot
/// combined parameters, of `N_A N_B f(sigma, epsilon)`.
fn site_pair_sum(composition: &SystemComposition, f: impl Fn(f64, f64) -> f64) -> f64 {
    let mut total = 0.0;
    for (a, sa) in composition.species.iter().enumerate() {
        for (b, sb) in composition.species.iter().enumerate() {
            let weight = (composition.counts[a] * composition.counts[b]) as f64;
            if weight == 0.0 {
                continue;
            }
            for x in &sa.sites {
                for y in &sb.sites {
                    if let (
                        SiteKind::LennardJones { sigma: s1, epsilon: e1 },
                        SiteKind::LennardJones { sigma: s2, epsilon: e2 },
                    ) = (x.kind, y.kind)
                    {
                        let eps = (e1 * e2).sqrt();
                        if eps > 0.0 {
                            total += weight * f(0.5 * (s1 + s2), eps);
                        }
                    }
                }
            }
        }
    }
    total
}

/// Tail correction for the composition's own box length.
pub fn lj_lrc(composition: &SystemComposition, cutoff: f64) -> Result<LongRangeCorrection> {
    lj_lrc_at(composition, composition.box_length, cutoff)
}

pub fn lj_lrc_at(composition: &SystemComposition, box_length: f64, cutoff: f64) -> Result<LongRangeCorrection> {
    if !(cutoff > 0.0) {
        return Err(Error::System(format!("cutoff must be positive, got {cutoff}")));
    }
    let v = box_length.powi(3);
    let rc = cutoff;

    // int_rc^inf u r^2 dr
    let energy_integral = site_pair_sum(composition, |s, e| {
        let s3 = (s / rc).powi(3);
        4.0 * e * s.powi(3) * (s3 * s3 * s3 / 9.0 - s3 / 3.0)
    });
    // r_c^3 u(r_c), the boundary term of the co-scaled cutoff
    let boundary = site_pair_sum(composition, |s, e| rc.powi(3) * lj_energy(rc, s, e));
    // int_rc^inf (r^4 u'' - 2 r^3 u') dr
    let curvature_integral = site_pair_sum(composition, |s, e| {
        let s3 = (s / rc).powi(3);
        4.0 * e * s.powi(3) * (20.0 * s3 * s3 * s3 - 18.0 * s3)
    });

    Ok(LongRangeCorrection {
        energy: 2.0 * PI * energy_integral / v,
        du_dv: -2.0 * PI * energy_integral / (v * v) - 2.0 * PI * boundary / (3.0 * v * v),
        d2u_dv2: 2.0 * PI * curvature_integral / (9.0 * v * v * v),
    })
}

/// Tail contribution to the virial pressure, `-(2 pi / 3 V^2) sum N_A N_B int r^3 u' dr`.
pub fn lj_pressure_tail(composition: &SystemComposition, cutoff: f64) -> f64 {
    let v = composition.volume();
    let rc = cutoff;
    let virial_integral = site_pair_sum(composition, |s, e| {
        let s3 = (s / rc).powi(3);
        4.0 * e * s.powi(3) * (-4.0 / 3.0 * s3 * s3 * s3 + 2.0 * s3)
    });
    -2.0 * PI * virial_integral / (3.0 * v * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MoleculeSpecies, Site};
    use crate::Vec3;

    fn single_site(eps: f64, n: usize, l: f64) -> SystemComposition {
        let s = MoleculeSpecies::build("A", vec![Site::lj(Vec3::zeros(), 1.0, eps, 1.0)]).unwrap();
        SystemComposition::new(vec![s], vec![n], l, 1.0).unwrap()
    }

    /// Composite Simpson on [a, b] with `n` (even) panels.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn no_dispersion_no_correction() {
        let c = single_site(0.0, 100, 5.0);
        assert_eq!(lj_lrc(&c, 2.5).unwrap(), LongRangeCorrection::default());
    }

    #[test]
    fn energy_matches_quadrature_of_tail() {
        let c = single_site(1.0, 100, 5.0);
        let rc = 2.5;
        // Substitute r = rc / t to map [rc, inf) onto (0, 1].
        let integral = simpson(
            |t| {
                if t == 0.0 {
                    0.0
                } else {
                    let r = rc / t;
                    lj_energy(r, 1.0, 1.0) * r * r * rc / (t * t)
                }
            },
            0.0,
            1.0,
            20_000,
        );
        let expected = (100.0 * 100.0 / 125.0) * 2.0 * PI * integral;
        let lrc = lj_lrc(&c, rc).unwrap();
        assert!((lrc.energy - expected).abs() < 1e-10 * expected.abs(), "{} vs {expected}", lrc.energy);
    }

    #[test]
    fn volume_derivatives_match_finite_differences_of_scaled_tail() {
        let c = single_site(1.0, 100, 5.0);
        let (l0, rc0) = (5.0, 2.5);
        let v0: f64 = l0 * l0 * l0;
        let tail = |v: f64| {
            let lam = (v / v0).cbrt();
            lj_lrc_at(&c, l0 * lam, rc0 * lam).unwrap().energy
        };
        let lrc = lj_lrc(&c, rc0).unwrap();
        let h1 = 1e-5 * v0;
        let d1 = (tail(v0 + h1) - tail(v0 - h1)) / (2.0 * h1);
        let h = 1e-4 * v0;
        let d2 = (tail(v0 + h) - 2.0 * tail(v0) + tail(v0 - h)) / (h * h);
        assert!((lrc.du_dv - d1).abs() < 1e-8 * d1.abs(), "{} vs {d1}", lrc.du_dv);
        assert!((lrc.d2u_dv2 - d2).abs() < 1e-5 * d2.abs(), "{} vs {d2}", lrc.d2u_dv2);
    }

    #[test]
    fn pressure_tail_is_minus_du_dv() {
        let c = single_site(1.3, 256, 7.0);
        let lrc = lj_lrc(&c, 3.0).unwrap();
        let p = lj_pressure_tail(&c, 3.0);
        assert!((p + lrc.du_dv).abs() < 1e-13 * p.abs());
    }

    #[test]
    fn rejects_bad_cutoff() {
        assert!(lj_lrc(&single_site(1.0, 10, 5.0), 0.0).is_err());
    }
}
