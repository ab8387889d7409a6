//! Residence-time correlator for solvent molecules in the shell of solutes.
//!
//! Occupancy `Theta_kl` of solvent `l` in the shell of solute `k` is tested
//! center to center. An absence of at most `tolerance` samples between two
//! presences is bridged (Impey convention); the look-ahead this needs is
//! served by evaluating each sample `tolerance` samples late. For each solute
//! and origin `t0` with `n_k(t0) > 0` the correlator accumulates
//! `sum_l Theta_kl(t0..t) / n_k(t0)`, where `Theta_kl(t0..t)` is one while the
//! bridged occupancy stays unbroken from `t0` to `t`. The final
//! `tolerance` samples of a run are never evaluated.

use crate::codec::{Persist, Reader, Writer};
use crate::error::{Error, Result};
use crate::model::{SystemComposition, SystemState};

use super::correlation::{AcfSummary, LagSums, PlateauCheck, TransportResult};

/// Largest supported bridging tolerance in samples.
pub const MAX_TOLERANCE: u32 = 62;

/// Occupancy of all (solute, solvent) pairs, one bit per pair in row-major
/// order, packed into 64-bit words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OccupancyBitmap {
    pub words: Vec<u64>,
    pub len: usize,
}

impl OccupancyBitmap {
    pub fn new(len: usize) -> Self {
        OccupancyBitmap {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }
}

/// Residence-time correlator for one (solute species, solvent species) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidenceCorrelator {
    pub solute: usize,
    pub solvent: usize,
    pub radius: f64,
    tolerance: u32,
    n_solute: usize,
    n_solvent: usize,
    m: usize,
    sample_interval: f64,
    /// Raw occupancy of samples `t..t+held` per pair, bit 0 = sample `t`.
    window: Vec<u64>,
    held: u32,
    /// Last evaluated sample with raw occupancy, per pair.
    last_in: Vec<Option<u64>>,
    /// Start of the current unbroken bridged run, per pair.
    run_start: Vec<Option<u64>>,
    /// `n_k(t)` of the last `m` evaluated samples, per solute.
    shell_counts: Vec<u32>,
    evaluated: u64,
    received: u64,
    lags: LagSums,
    pub plateau: PlateauCheck,
}

/// Residence time with the shell definition that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidenceResult {
    pub solute: String,
    pub solvent: String,
    pub radius: f64,
    pub tolerance_time: f64,
    /// `None` when no solute ever had a populated shell.
    pub tau: Option<TransportResult>,
}

impl ResidenceCorrelator {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        composition: &SystemComposition,
        solute: usize,
        solvent: usize,
        radius: f64,
        tolerance: u32,
        m: usize,
        sample_interval: f64,
        expected: u64,
    ) -> Result<Self> {
        let n_species = composition.species.len();
        if solute >= n_species || solvent >= n_species {
            return Err(Error::System("residence species index out of range".into()));
        }
        Self::with_counts(
            solute,
            solvent,
            composition.counts[solute],
            composition.counts[solvent],
            radius,
            tolerance,
            m,
            sample_interval,
            expected,
        )
    }

    /// Correlator for bare occupancy streams of `n_solute x n_solvent` pairs.
    #[allow(clippy::too_many_arguments)]
    pub fn with_counts(
        solute: usize,
        solvent: usize,
        n_solute: usize,
        n_solvent: usize,
        radius: f64,
        tolerance: u32,
        m: usize,
        sample_interval: f64,
        expected: u64,
    ) -> Result<Self> {
        if tolerance > MAX_TOLERANCE {
            return Err(Error::System(format!(
                "residence tolerance of {tolerance} samples exceeds the supported {MAX_TOLERANCE}"
            )));
        }
        if m < 2 || !(sample_interval > 0.0) || !(radius > 0.0) {
            return Err(Error::System("residence correlator needs M >= 2 and positive radius and interval".into()));
        }
        let pairs = n_solute * n_solvent;
        Ok(ResidenceCorrelator {
            solute,
            solvent,
            radius,
            tolerance,
            n_solute,
            n_solvent,
            m,
            sample_interval,
            window: vec![0; pairs],
            held: 0,
            last_in: vec![None; pairs],
            run_start: vec![None; pairs],
            shell_counts: vec![0; n_solute * m],
            evaluated: 0,
            received: 0,
            lags: LagSums::new(m, expected),
            plateau: PlateauCheck::default(),
        })
    }

    pub fn pairs(&self) -> usize {
        self.n_solute * self.n_solvent
    }

    pub fn samples(&self) -> u64 {
        self.received
    }

    /// Center-to-center shell occupancy of the current state.
    pub fn occupancy(&self, composition: &SystemComposition, state: &SystemState) -> OccupancyBitmap {
        let species_of = composition.species_index();
        let solutes: Vec<usize> = (0..state.len()).filter(|&m| species_of[m] == self.solute).collect();
        let solvents: Vec<usize> = (0..state.len()).filter(|&m| species_of[m] == self.solvent).collect();
        let l = state.box_length;
        let r2max = self.radius * self.radius;
        let mut bits = OccupancyBitmap::new(self.pairs());
        for (k, &a) in solutes.iter().enumerate() {
            for (j, &b) in solvents.iter().enumerate() {
                if a == b {
                    continue;
                }
                let mut d = state.positions[b] - state.positions[a];
                d.iter_mut().for_each(|c| *c -= l * (*c / l).round());
                if d.norm_squared() < r2max {
                    bits.set(k * self.n_solvent + j);
                }
            }
        }
        bits
    }

    pub fn push(&mut self, bits: &OccupancyBitmap) {
        assert_eq!(bits.len, self.pairs(), "occupancy bitmap size mismatch");
        for p in 0..self.pairs() {
            if bits.get(p) {
                self.window[p] |= 1 << self.held;
            }
        }
        self.held += 1;
        self.received += 1;
        if self.held > self.tolerance {
            self.evaluate();
            self.window.iter_mut().for_each(|w| *w >>= 1);
            self.held -= 1;
        }
    }

    /// Evaluates sample `t = evaluated` with `tolerance` samples of look-ahead.
    fn evaluate(&mut self) {
        let t = self.evaluated;
        let tol = u64::from(self.tolerance);
        let m = self.m;
        let slot = (t % m as u64) as usize;
        let block = self.lags.block(t);
        let mut survivors = vec![0u32; m + 1];

        for k in 0..self.n_solute {
            survivors.iter_mut().for_each(|s| *s = 0);
            let mut n_k = 0u32;
            for j in 0..self.n_solvent {
                let p = k * self.n_solvent + j;
                let w = self.window[p];
                let inside = w & 1 == 1;
                let bridged = !inside
                    && self.last_in[p].is_some_and(|a| {
                        let reach = (a + tol + 1).saturating_sub(t);
                        reach >= 1 && (w >> 1) & ((1u64 << reach) - 1) != 0
                    });
                if inside {
                    self.last_in[p] = Some(t);
                }
                if inside || bridged {
                    let start = *self.run_start[p].get_or_insert(t);
                    let len = (t - start + 1).min(m as u64) as usize;
                    survivors[len] += 1;
                    n_k += 1;
                } else {
                    self.run_start[p] = None;
                }
            }
            self.shell_counts[k * m + slot] = n_k;

            // survivors[len] -> number of runs longer than each lag.
            let mut longer = 0u32;
            let reach = ((t + 1).min(m as u64)) as usize;
            let mut tail = vec![0u32; m];
            for lag in (0..m).rev() {
                longer += survivors[lag + 1];
                tail[lag] = longer;
            }
            for (lag, &count) in tail.iter().enumerate().take(reach) {
                let origin = (t - lag as u64) % m as u64;
                let n0 = self.shell_counts[k * m + origin as usize];
                if n0 > 0 {
                    self.lags.add(block, lag, f64::from(count) / f64::from(n0));
                }
            }
        }
        self.evaluated += 1;
    }

    pub fn summary(&self) -> AcfSummary {
        self.lags.summarize(self.sample_interval, &self.plateau)
    }

    /// Residence time `int_0^t_max C(t) dt`; `None` if no origin ever had an
    /// occupied shell.
    pub fn residence_time(&self) -> Option<TransportResult> {
        let origins = self.lags.lag0_count();
        if origins == 0 {
            return None;
        }
        let s = self.summary();
        Some(TransportResult {
            value: s.total,
            stderr: s.stderr,
            converged: s.converged,
            origins,
            t_max: (self.m - 1) as f64 * self.sample_interval,
        })
    }

    pub fn result(&self, composition: &SystemComposition) -> ResidenceResult {
        ResidenceResult {
            solute: composition.species[self.solute].name.clone(),
            solvent: composition.species[self.solvent].name.clone(),
            radius: self.radius,
            tolerance_time: f64::from(self.tolerance) * self.sample_interval,
            tau: self.residence_time(),
        }
    }

    pub fn footprint(&self) -> usize {
        self.lags.footprint() + self.shell_counts.len() * 4 + self.pairs() * (8 + 16 + 16)
    }
}

impl Persist for ResidenceCorrelator {
    fn encode(&self, w: &mut Writer) {
        w.usize(self.solute);
        w.usize(self.solvent);
        w.f64(self.radius);
        w.u32(self.tolerance);
        w.usize(self.n_solute);
        w.usize(self.n_solvent);
        w.usize(self.m);
        w.f64(self.sample_interval);
        w.u64s(&self.window);
        w.u32(self.held);
        let opt = |v: &Option<u64>| v.map_or(u64::MAX, |x| x);
        w.u64s(&self.last_in.iter().map(opt).collect::<Vec<_>>());
        w.u64s(&self.run_start.iter().map(opt).collect::<Vec<_>>());
        w.u64s(&self.shell_counts.iter().map(|&c| u64::from(c)).collect::<Vec<_>>());
        w.u64(self.evaluated);
        w.u64(self.received);
        self.lags.encode(w);
        w.f64(self.plateau.window);
        w.f64(self.plateau.tolerance);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let solute = r.usize()?;
        let solvent = r.usize()?;
        let radius = r.f64()?;
        let tolerance = r.u32()?;
        let n_solute = r.usize()?;
        let n_solvent = r.usize()?;
        let m = r.usize()?;
        let sample_interval = r.f64()?;
        let window = r.u64s()?;
        let held = r.u32()?;
        let opt = |x: u64| (x != u64::MAX).then_some(x);
        let last_in: Vec<Option<u64>> = r.u64s()?.into_iter().map(opt).collect();
        let run_start: Vec<Option<u64>> = r.u64s()?.into_iter().map(opt).collect();
        let shell_counts = r
            .u64s()?
            .into_iter()
            .map(|c| u32::try_from(c).map_err(|_| Error::Restore("shell count overflow".into())))
            .collect::<Result<Vec<_>>>()?;
        let evaluated = r.u64()?;
        let received = r.u64()?;
        let lags = LagSums::decode(r)?;
        let plateau = PlateauCheck {
            window: r.f64()?,
            tolerance: r.f64()?,
        };
        let pairs = n_solute
            .checked_mul(n_solvent)
            .ok_or_else(|| Error::Restore("residence pair count overflow".into()))?;
        if window.len() != pairs
            || last_in.len() != pairs
            || run_start.len() != pairs
            || shell_counts.len() != n_solute * m
            || tolerance > MAX_TOLERANCE
            || held > tolerance
            || m < 2
        {
            return Err(Error::Restore("residence correlator has inconsistent sizes".into()));
        }
        Ok(ResidenceCorrelator {
            solute,
            solvent,
            radius,
            tolerance,
            n_solute,
            n_solvent,
            m,
            sample_interval,
            window,
            held,
            last_in,
            run_start,
            shell_counts,
            evaluated,
            received,
            lags,
            plateau,
        })
    }
}
