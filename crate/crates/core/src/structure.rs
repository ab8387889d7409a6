//! Radial distribution functions between site types and solvation numbers.
//!
//! A site type is a (species, site) pair; LJ and dummy sites are sampling
//! centers. Intramolecular pairs are never binned. Normalization counts
//! `N(N-1)/2` pairs for identical site types, `N(N-1)` for two different
//! sites of the same species and `N_a N_b` across species, with partner
//! density `(N-1)/V` or `N_b/V` so that integrated `g` reproduces direct
//! neighbor counts exactly.

use std::f64::consts::PI;

use crate::codec::{Persist, Reader, Writer};
use crate::error::{Error, Result};
use crate::model::{SystemComposition, SystemState};
use crate::Vec3;

pub const DEFAULT_BIN_WIDTH: f64 = 0.02;

#[derive(Clone, Debug, PartialEq)]
struct Center {
    species: usize,
    /// `None` for the molecular center of mass.
    site: Option<usize>,
    label: String,
}

/// Pair-distance counts for every unordered pair of center types.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    bin_width: f64,
    bins: usize,
    box_length: f64,
    centers: Vec<Center>,
    /// Center type indices per species.
    by_species: Vec<Vec<usize>>,
    counts: Vec<Vec<u64>>,
    snapshots: u64,
}

/// Finalized `g(r)` of one center-type pair.
#[derive(Clone, Debug, PartialEq)]
pub struct RdfTable {
    pub label_a: String,
    pub label_b: String,
    pub bin_width: f64,
    pub r_mid: Vec<f64>,
    pub g: Vec<f64>,
    /// Number density of `b` partners seen from an `a` center.
    pub partner_density: f64,
    /// Mean number of `b` centers within the upper edge of each bin.
    pub cumulative: Vec<f64>,
}

fn pair_index(a: usize, b: usize, n: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * n - a * (a + 1) / 2 + b
}

impl Histogram {
    /// Site-site histogram over all LJ and dummy sites.
    pub fn sites(composition: &SystemComposition, bin_width: f64, r_max: Option<f64>) -> Result<Self> {
        let mut centers = Vec::new();
        for (s, sp) in composition.species.iter().enumerate() {
            for (k, site) in sp.sites.iter().enumerate() {
                if site.is_rdf_center() {
                    centers.push(Center {
                        species: s,
                        site: Some(k),
                        label: sp.site_label(k),
                    });
                }
            }
        }
        Self::with_centers(composition, centers, bin_width, r_max)
    }

    /// Center-of-mass histogram, one center type per species.
    pub fn molecular(composition: &SystemComposition, bin_width: f64, r_max: Option<f64>) -> Result<Self> {
        let centers = composition
            .species
            .iter()
            .enumerate()
            .map(|(s, sp)| Center {
                species: s,
                site: None,
                label: sp.name.clone(),
            })
            .collect();
        Self::with_centers(composition, centers, bin_width, r_max)
    }

    fn with_centers(
        composition: &SystemComposition,
        centers: Vec<Center>,
        bin_width: f64,
        r_max: Option<f64>,
    ) -> Result<Self> {
        let l = composition.box_length;
        let r_max = r_max.unwrap_or(0.5 * l);
        if !(bin_width > 0.0) || !(r_max > 0.0) || r_max > 0.5 * l * (1.0 + 1e-12) {
            return Err(Error::System(format!(
                "RDF needs 0 < bin width and 0 < r_max <= L/2, got bin width {bin_width}, r_max {r_max}"
            )));
        }
        let bins = (r_max / bin_width * (1.0 + 1e-12)).floor() as usize;
        if bins == 0 {
            return Err(Error::System(format!("RDF bin width {bin_width} exceeds r_max {r_max}")));
        }
        let mut by_species = vec![Vec::new(); composition.species.len()];
        for (t, c) in centers.iter().enumerate() {
            by_species[c.species].push(t);
        }
        let nt = centers.len();
        Ok(Histogram {
            bin_width,
            bins,
            box_length: l,
            counts: vec![vec![0; bins]; nt * (nt + 1) / 2],
            centers,
            by_species,
            snapshots: 0,
        })
    }

    pub fn r_max(&self) -> f64 {
        self.bins as f64 * self.bin_width
    }

    pub fn snapshots(&self) -> u64 {
        self.snapshots
    }

    /// Bins every intermolecular minimum-image center distance below `r_max`.
    pub fn accumulate(&mut self, composition: &SystemComposition, species_of: &[usize], state: &SystemState) {
        let nt = self.centers.len();
        let mut points: Vec<Vec<(usize, Vec3)>> = Vec::with_capacity(state.len());
        for (m, &s) in species_of.iter().enumerate() {
            let rot = state.orientations[m];
            points.push(
                self.by_species[s]
                    .iter()
                    .map(|&t| {
                        let p = match self.centers[t].site {
                            Some(k) => state.positions[m] + rot * composition.species[s].sites[k].position,
                            None => state.positions[m],
                        };
                        (t, p)
                    })
                    .collect(),
            );
        }
        let l = self.box_length;
        let r_max2 = self.r_max() * self.r_max();
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                for &(ta, pa) in &points[i] {
                    for &(tb, pb) in &points[j] {
                        let mut d = pb - pa;
                        d.iter_mut().for_each(|c| *c -= l * (*c / l).round());
                        let r2 = d.norm_squared();
                        if r2 < r_max2 {
                            let bin = ((r2.sqrt() / self.bin_width) as usize).min(self.bins - 1);
                            self.counts[pair_index(ta, tb, nt)][bin] += 1;
                        }
                    }
                }
            }
        }
        self.snapshots += 1;
    }

    fn counts_of(&self, a: usize, b: usize) -> &[u64] {
        &self.counts[pair_index(a, b, self.centers.len())]
    }

    /// `(pair normalization, partner density of b around a)`.
    fn normalization(&self, composition: &SystemComposition, a: usize, b: usize) -> (f64, f64) {
        let (ca, cb) = (&self.centers[a], &self.centers[b]);
        let na = composition.counts[ca.species] as f64;
        let nb = composition.counts[cb.species] as f64;
        let v = composition.volume();
        if ca.species != cb.species {
            (na * nb, nb / v)
        } else if a == b {
            (na * (na - 1.0) / 2.0, (na - 1.0) / v)
        } else {
            (na * (na - 1.0), (na - 1.0) / v)
        }
    }

    /// `g(r)` for centers `b` around centers `a`.
    pub fn table(&self, composition: &SystemComposition, a: usize, b: usize) -> Result<RdfTable> {
        if self.snapshots == 0 {
            return Err(Error::InsufficientSamples("RDF has no snapshots".into()));
        }
        let (pairs, rho) = self.normalization(composition, a, b);
        let v = composition.volume();
        let counts = self.counts_of(a, b);
        let dr = self.bin_width;
        let s = self.snapshots as f64;
        let mut g = Vec::with_capacity(self.bins);
        let mut cumulative = Vec::with_capacity(self.bins);
        let mut running = 0.0;
        for (k, &c) in counts.iter().enumerate() {
            let (lo, hi) = (k as f64 * dr, (k + 1) as f64 * dr);
            let shell = 4.0 / 3.0 * PI * (hi.powi(3) - lo.powi(3));
            let value = if pairs > 0.0 { c as f64 * v / (s * pairs * shell) } else { 0.0 };
            g.push(value);
            running += value * rho * shell;
            cumulative.push(running);
        }
        Ok(RdfTable {
            label_a: self.centers[a].label.clone(),
            label_b: self.centers[b].label.clone(),
            bin_width: dr,
            r_mid: (0..self.bins).map(|k| (k as f64 + 0.5) * dr).collect(),
            g,
            partner_density: rho,
            cumulative,
        })
    }

    /// All center-type pairs `a <= b` in index order.
    pub fn finalize(&self, composition: &SystemComposition) -> Result<Vec<RdfTable>> {
        let nt = self.centers.len();
        let mut out = Vec::new();
        for a in 0..nt {
            for b in a..nt {
                out.push(self.table(composition, a, b)?);
            }
        }
        Ok(out)
    }

    /// Index of the center type of `species` (and `site`, `None` for the
    /// molecular center).
    pub fn center_index(&self, species: usize, site: Option<usize>) -> Option<usize> {
        self.centers.iter().position(|c| c.species == species && c.site == site)
    }

    /// Approximate bytes held by the count arrays.
    pub fn footprint(&self) -> usize {
        self.counts.len() * self.bins * std::mem::size_of::<u64>()
    }
}

impl RdfTable {
    /// `4 pi rho_b int_0^r_min r^2 g dr`, exact over whole bins with the last
    /// partial bin weighted by its shell-volume fraction.
    pub fn solvation_number(&self, r_min: f64) -> f64 {
        let dr = self.bin_width;
        let mut n = 0.0;
        for (k, &g) in self.g.iter().enumerate() {
            let lo = k as f64 * dr;
            if lo >= r_min {
                break;
            }
            let hi = ((k + 1) as f64 * dr).min(r_min);
            n += g * self.partner_density * 4.0 / 3.0 * PI * (hi.powi(3) - lo.powi(3));
        }
        n
    }
}

/// First minimum after the first peak above 1 of the 3-point smoothed `g`.
pub fn first_minimum(table: &RdfTable) -> Option<f64> {
    let g = &table.g;
    let n = g.len();
    if n < 3 {
        return None;
    }
    let s: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 || k == n - 1 {
                g[k]
            } else {
                (g[k - 1] + g[k] + g[k + 1]) / 3.0
            }
        })
        .collect();
    let peak = (0..n - 1).find(|&k| s[k] > 1.0 && s[k + 1] < s[k])?;
    (peak + 1..n - 1).find(|&k| s[k + 1] >= s[k]).map(|k| table.r_mid[k])
}

impl Persist for Histogram {
    fn encode(&self, w: &mut Writer) {
        w.f64(self.bin_width);
        w.usize(self.bins);
        w.f64(self.box_length);
        w.usize(self.centers.len());
        for c in &self.centers {
            w.usize(c.species);
            w.bool(c.site.is_some());
            w.usize(c.site.unwrap_or(0));
            w.str(&c.label);
        }
        w.usize(self.by_species.len());
        w.usize(self.counts.len());
        for c in &self.counts {
            w.u64s(c);
        }
        w.u64(self.snapshots);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let bin_width = r.f64()?;
        let bins = r.usize()?;
        let box_length = r.f64()?;
        let nc = r.count(17)?;
        let mut centers = Vec::with_capacity(nc);
        for _ in 0..nc {
            let species = r.usize()?;
            let has_site = r.bool()?;
            let site = r.usize()?;
            centers.push(Center {
                species,
                site: has_site.then_some(site),
                label: r.str()?,
            });
        }
        let n_species = r.count(0)?;
        let mut by_species = vec![Vec::new(); n_species];
        for (t, c) in centers.iter().enumerate() {
            by_species
                .get_mut(c.species)
                .ok_or_else(|| Error::Restore("histogram center refers to unknown species".into()))?
                .push(t);
        }
        let np = r.count(8)?;
        if np != nc * (nc + 1) / 2 {
            return Err(Error::Restore("histogram pair count mismatch".into()));
        }
        let counts = (0..np)
            .map(|_| {
                let c = r.u64s()?;
                if c.len() != bins {
                    return Err(Error::Restore("histogram bin count mismatch".into()));
                }
                Ok(c)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Histogram {
            bin_width,
            bins,
            box_length,
            centers,
            by_species,
            counts,
            snapshots: r.u64()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MoleculeSpecies, Site};
    use crate::Quat;

    fn point_fluid(n: usize, l: f64) -> SystemComposition {
        let s = MoleculeSpecies::build("A", vec![Site::lj(Vec3::zeros(), 1.0, 1.0, 1.0)]).unwrap();
        SystemComposition::new(vec![s], vec![n], l, 1.0).unwrap()
    }

    fn state_at(l: f64, positions: Vec<Vec3>) -> SystemState {
        let mut s = SystemState::new(l, positions.len());
        s.positions = positions;
        s
    }

    #[test]
    fn two_molecules_fill_one_bin() {
        let c = point_fluid(2, 10.0);
        let mut h = Histogram::sites(&c, 0.1, None).unwrap();
        let st = state_at(10.0, vec![Vec3::new(1.0, 1.0, 1.0), Vec3::new(1.0, 1.0, 3.55)]);
        h.accumulate(&c, &[0, 0], &st);
        let counts = h.counts_of(0, 0);
        assert_eq!(counts.iter().sum::<u64>(), 1);
        assert_eq!(counts[25], 1);
    }

    #[test]
    fn single_molecule_has_no_counts() {
        let s = MoleculeSpecies::build(
            "D",
            vec![
                Site::lj(Vec3::new(-0.5, 0.0, 0.0), 1.0, 1.0, 1.0),
                Site::lj(Vec3::new(0.5, 0.0, 0.0), 1.0, 1.0, 1.0),
            ],
        )
        .unwrap();
        let c = SystemComposition::new(vec![s], vec![1], 6.0, 1.0).unwrap();
        let mut h = Histogram::sites(&c, 0.05, None).unwrap();
        let mut st = state_at(6.0, vec![Vec3::new(3.0, 3.0, 3.0)]);
        st.orientations = vec![Quat::identity()];
        h.accumulate(&c, &[0], &st);
        assert!(h.counts.iter().all(|c| c.iter().all(|&x| x == 0)));
    }

    #[test]
    fn fcc_nearest_neighbors() {
        // 4 x 4 x 4 cells of a = 1.5: 256 sites, 12 neighbors each at a / sqrt(2).
        let a = 1.5;
        let cells = 4;
        let l = a * cells as f64;
        let basis = [[0.0, 0.0, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]];
        let mut pos = Vec::new();
        for i in 0..cells {
            for j in 0..cells {
                for k in 0..cells {
                    for b in &basis {
                        pos.push(Vec3::new(i as f64 + b[0], j as f64 + b[1], k as f64 + b[2]) * a);
                    }
                }
            }
        }
        let n = pos.len();
        let c = point_fluid(n, l);
        let mut h = Histogram::sites(&c, 0.01, None).unwrap();
        h.accumulate(&c, &vec![0; n], &state_at(l, pos));
        let counts = h.counts_of(0, 0);
        let first = counts.iter().position(|&x| x > 0).unwrap();
        let nn = a / 2f64.sqrt();
        assert_eq!(first, (nn / 0.01) as usize);
        assert_eq!(counts[first], 6 * n as u64);
    }

    #[test]
    fn empty_bins_and_no_snapshots() {
        let c = point_fluid(2, 10.0);
        let mut h = Histogram::sites(&c, 0.1, None).unwrap();
        assert!(h.finalize(&c).is_err());
        let st = state_at(10.0, vec![Vec3::new(1.0, 1.0, 1.0), Vec3::new(1.0, 1.0, 3.55)]);
        h.accumulate(&c, &[0, 0], &st);
        let t = h.table(&c, 0, 0).unwrap();
        assert_eq!(t.g[3], 0.0);
        assert!(t.g[25] > 0.0);
    }

    fn synthetic(r_mid: Vec<f64>, g: Vec<f64>, dr: f64, rho: f64) -> RdfTable {
        RdfTable {
            label_a: "a".into(),
            label_b: "b".into(),
            bin_width: dr,
            cumulative: vec![0.0; g.len()],
            r_mid,
            g,
            partner_density: rho,
        }
    }

    #[test]
    fn first_minimum_of_constructed_curve() {
        let dr = 0.02;
        let r: Vec<f64> = (0..150).map(|k| (k as f64 + 0.5) * dr).collect();
        let g = r
            .iter()
            .map(|&x| {
                if x < 0.9 {
                    0.0
                } else {
                    1.0 + 1.5 * (-(x - 1.1f64).powi(2) / 0.01).exp() - 0.4 * (-(x - 1.6f64).powi(2) / 0.02).exp()
                }
            })
            .collect();
        let t = synthetic(r, g, dr, 0.8);
        let m = first_minimum(&t).unwrap();
        assert!((m - 1.6).abs() <= dr, "{m}");
    }

    #[test]
    fn flat_curve_has_no_minimum() {
        let t = synthetic(vec![0.1, 0.3, 0.5, 0.7], vec![1.0; 4], 0.2, 1.0);
        assert_eq!(first_minimum(&t), None);
    }

    #[test]
    fn solvation_of_uniform_and_empty_fluid() {
        let dr = 0.05;
        let r: Vec<f64> = (0..40).map(|k| (k as f64 + 0.5) * dr).collect();
        let t = synthetic(r.clone(), vec![1.0; 40], dr, 0.7);
        for r_min in [0.5, 1.0, 1.37] {
            let expected = 4.0 / 3.0 * PI * 0.7 * r_min * r_min * r_min;
            assert!((t.solvation_number(r_min) - expected).abs() < 1e-12);
        }
        assert_eq!(synthetic(r, vec![0.0; 40], dr, 0.7).solvation_number(1.0), 0.0);
    }

    #[test]
    fn checkpoint_round_trip() {
        let c = point_fluid(3, 8.0);
        let mut h = Histogram::molecular(&c, 0.1, Some(3.0)).unwrap();
        let st = state_at(8.0, vec![Vec3::new(1.0, 1.0, 1.0), Vec3::new(2.0, 1.0, 1.0), Vec3::new(7.5, 1.0, 1.0)]);
        h.accumulate(&c, &[0, 0, 0], &st);
        assert_eq!(Histogram::from_bytes(&h.to_bytes()).unwrap(), h);
    }
}
