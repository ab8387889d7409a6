use crate::codec::{Persist, Reader, Writer};
use crate::error::{Error, Result};
use crate::stats::{block_len, block_of, block_stderr, BLOCKS};

/// Minimum number of time origins before a transport coefficient is reported.
pub const MIN_ORIGINS: u64 = 100;

/// Flags a running integral whose relative change over the trailing
/// `window` fraction of lags exceeds `tolerance`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlateauCheck {
    pub window: f64,
    pub tolerance: f64,
}

impl Default for PlateauCheck {
    fn default() -> Self {
        PlateauCheck {
            window: 0.2,
            tolerance: 0.05,
        }
    }
}

impl PlateauCheck {
    pub fn converged(&self, integral: &[f64]) -> bool {
        let m = integral.len();
        if m < 2 {
            return false;
        }
        let span = ((self.window * m as f64).ceil() as usize).clamp(1, m - 1);
        let end = integral[m - 1];
        let start = integral[m - 1 - span];
        let scale = integral.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        (end - start).abs() <= self.tolerance * scale
    }
}

/// Per-lag sums and counts split into blocks by the time of the later sample.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct LagSums {
    m: usize,
    block_len: u64,
    sums: Vec<f64>,
    counts: Vec<u64>,
}

/// Normalized correlation function with its running trapezoidal integral.
#[derive(Clone, Debug, PartialEq)]
pub struct AcfSummary {
    pub lag_time: f64,
    pub acf: Vec<f64>,
    pub integral: Vec<f64>,
    pub total: f64,
    pub stderr: f64,
    pub converged: bool,
}

fn trapezoid_running(c: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(c.len());
    let mut acc = 0.0;
    for (k, &x) in c.iter().enumerate() {
        if k > 0 {
            acc += 0.5 * h * (c[k - 1] + x);
        }
        out.push(acc);
    }
    out
}

impl LagSums {
    pub(crate) fn new(m: usize, expected: u64) -> Self {
        LagSums {
            m,
            block_len: block_len(expected),
            sums: vec![0.0; BLOCKS * m],
            counts: vec![0; BLOCKS * m],
        }
    }

    pub(crate) fn block(&self, index: u64) -> usize {
        block_of(index, self.block_len)
    }

    #[inline]
    pub(crate) fn add(&mut self, block: usize, lag: usize, value: f64) {
        self.sums[block * self.m + lag] += value;
        self.counts[block * self.m + lag] += 1;
    }

    pub(crate) fn lag0_count(&self) -> u64 {
        (0..BLOCKS).map(|b| self.counts[b * self.m]).sum()
    }

    fn normalized(&self, blocks: impl Iterator<Item = usize> + Clone) -> Option<Vec<f64>> {
        (0..self.m)
            .map(|l| {
                let s: f64 = blocks.clone().map(|b| self.sums[b * self.m + l]).sum();
                let c: u64 = blocks.clone().map(|b| self.counts[b * self.m + l]).sum();
                (c > 0).then(|| s / c as f64)
            })
            .collect()
    }

    /// ACF with lags lacking data set to zero, plus block statistics of the
    /// full integral.
    pub(crate) fn summarize(&self, lag_time: f64, plateau: &PlateauCheck) -> AcfSummary {
        let acf: Vec<f64> = (0..self.m)
            .map(|l| {
                let s: f64 = (0..BLOCKS).map(|b| self.sums[b * self.m + l]).sum();
                let c: u64 = (0..BLOCKS).map(|b| self.counts[b * self.m + l]).sum();
                if c > 0 {
                    s / c as f64
                } else {
                    0.0
                }
            })
            .collect();
        let integral = trapezoid_running(&acf, lag_time);
        let per_block: Vec<f64> = (0..BLOCKS)
            .filter_map(|b| self.normalized(std::iter::once(b)))
            .map(|c| *trapezoid_running(&c, lag_time).last().unwrap_or(&0.0))
            .collect();
        AcfSummary {
            lag_time,
            total: *integral.last().unwrap_or(&0.0),
            stderr: block_stderr(&per_block),
            converged: plateau.converged(&integral),
            acf,
            integral,
        }
    }

    pub(crate) fn footprint(&self) -> usize {
        self.sums.len() * std::mem::size_of::<f64>() + self.counts.len() * std::mem::size_of::<u64>()
    }
}

impl Persist for LagSums {
    fn encode(&self, w: &mut Writer) {
        w.usize(self.m);
        w.u64(self.block_len);
        w.f64s(&self.sums);
        w.u64s(&self.counts);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let m = r.usize()?;
        let block_len = r.u64()?;
        let sums = r.f64s()?;
        let counts = r.u64s()?;
        if block_len == 0 || sums.len() != BLOCKS * m || counts.len() != BLOCKS * m {
            return Err(Error::Restore("correlation sums have inconsistent sizes".into()));
        }
        Ok(LagSums {
            m,
            block_len,
            sums,
            counts,
        })
    }
}

/// Ring buffer of the last `M` flux samples with multiple-origin
/// dot-product autocorrelation over lags `0..M`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationSet {
    pub name: String,
    dim: usize,
    m: usize,
    n_ext: u64,
    dt: f64,
    ring: Vec<f64>,
    head: usize,
    filled: usize,
    samples: u64,
    lags: LagSums,
    pub plateau: PlateauCheck,
}

/// Transport coefficient from a time integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransportResult {
    pub value: f64,
    pub stderr: f64,
    pub converged: bool,
    pub origins: u64,
    pub t_max: f64,
}

impl CorrelationSet {
    /// `m` lags of a `dim`-component flux sampled every `n_ext` steps of
    /// length `dt`; `expected` samples set the block length.
    pub fn new(name: impl Into<String>, dim: usize, m: usize, n_ext: u64, dt: f64, expected: u64) -> Result<Self> {
        if dim == 0 || m < 2 || n_ext == 0 || !(dt > 0.0) {
            return Err(Error::System(format!(
                "correlation set needs dim >= 1, M >= 2, n_ext >= 1, dt > 0 (got {dim}, {m}, {n_ext}, {dt})"
            )));
        }
        Ok(CorrelationSet {
            name: name.into(),
            dim,
            m,
            n_ext,
            dt,
            ring: vec![0.0; m * dim],
            head: 0,
            filled: 0,
            samples: 0,
            lags: LagSums::new(m, expected),
            plateau: PlateauCheck::default(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.samples == 0
    }

    pub fn n_ext(&self) -> u64 {
        self.n_ext
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    /// Time between stored samples, `n_ext * dt`.
    pub fn sample_interval(&self) -> f64 {
        self.n_ext as f64 * self.dt
    }

    /// Upper integration limit `(M - 1) n_ext dt`.
    pub fn t_max(&self) -> f64 {
        (self.m - 1) as f64 * self.sample_interval()
    }

    pub fn push(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.dim, "flux dimension mismatch for {}", self.name);
        let d = self.dim;
        self.ring[self.head * d..(self.head + 1) * d].copy_from_slice(x);
        let block = self.lags.block(self.samples);
        let available = (self.filled + 1).min(self.m);
        for lag in 0..available {
            let idx = (self.head + self.m - lag) % self.m;
            let past = &self.ring[idx * d..(idx + 1) * d];
            let dot: f64 = x.iter().zip(past).map(|(a, b)| a * b).sum();
            self.lags.add(block, lag, dot);
        }
        self.head = (self.head + 1) % self.m;
        self.filled = available;
        self.samples += 1;
    }

    pub fn summary(&self) -> AcfSummary {
        self.lags.summarize(self.sample_interval(), &self.plateau)
    }

    /// Bytes held by the buffers; depends on `M` and the flux dimension only.
    pub fn footprint(&self) -> usize {
        self.ring.len() * std::mem::size_of::<f64>() + self.lags.footprint()
    }

    /// `scale * int_0^t_max C(t) dt` with block uncertainty.
    pub fn transport(&self, scale: f64) -> Result<TransportResult> {
        let origins = self.lags.lag0_count();
        if origins < MIN_ORIGINS {
            return Err(Error::InsufficientSamples(format!(
                "{}: {origins} time origins, at least {MIN_ORIGINS} required",
                self.name
            )));
        }
        let s = self.summary();
        Ok(TransportResult {
            value: scale * s.total,
            stderr: scale.abs() * s.stderr,
            converged: s.converged,
            origins,
            t_max: self.t_max(),
        })
    }
}

/// `sigma = int <j_e(t) . j_e(0)> dt / (3 V T)`.
pub fn electric_conductivity(set: &CorrelationSet, volume: f64, temperature: f64) -> Result<TransportResult> {
    set.transport(1.0 / (3.0 * volume * temperature))
}

/// `lambda = int <J_q(t) . J_q(0)> dt / (3 V T^2)`.
pub fn thermal_conductivity(set: &CorrelationSet, volume: f64, temperature: f64) -> Result<TransportResult> {
    set.transport(1.0 / (3.0 * volume * temperature * temperature))
}

/// `D = int sum_k <v_k(t) . v_k(0)> dt / (3 N)` for a set holding the
/// concatenated velocities of `n_molecules` molecules.
pub fn self_diffusion(set: &CorrelationSet, n_molecules: usize) -> Result<TransportResult> {
    if set.dim() != 3 * n_molecules {
        return Err(Error::System(format!(
            "{}: flux dimension {} does not match {n_molecules} molecules",
            set.name,
            set.dim()
        )));
    }
    set.transport(1.0 / (3.0 * n_molecules as f64))
}

impl Persist for CorrelationSet {
    fn encode(&self, w: &mut Writer) {
        w.str(&self.name);
        w.usize(self.dim);
        w.usize(self.m);
        w.u64(self.n_ext);
        w.f64(self.dt);
        w.f64s(&self.ring);
        w.usize(self.head);
        w.usize(self.filled);
        w.u64(self.samples);
        self.lags.encode(w);
        w.f64(self.plateau.window);
        w.f64(self.plateau.tolerance);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let name = r.str()?;
        let dim = r.usize()?;
        let m = r.usize()?;
        let n_ext = r.u64()?;
        let dt = r.f64()?;
        let ring = r.f64s()?;
        let head = r.usize()?;
        let filled = r.usize()?;
        let samples = r.u64()?;
        let lags = LagSums::decode(r)?;
        let plateau = PlateauCheck {
            window: r.f64()?,
            tolerance: r.f64()?,
        };
        if m < 2 || dim.checked_mul(m) != Some(ring.len()) || head >= m || filled > m || lags.m != m {
            return Err(Error::Restore(format!("correlation set '{name}' has inconsistent sizes")));
        }
        Ok(CorrelationSet {
            name,
            dim,
            m,
            n_ext,
            dt,
            ring,
            head,
            filled,
            samples,
            lags,
            plateau,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_flux_gives_zero() {
        let mut c = CorrelationSet::new("je", 3, 10, 1, 0.01, 200).unwrap();
        for _ in 0..200 {
            c.push(&[0.0; 3]);
        }
        let r = electric_conductivity(&c, 10.0, 1.0).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn constant_flux_acf_is_flat() {
        let mut c = CorrelationSet::new("x", 1, 5, 2, 0.5, 100).unwrap();
        for _ in 0..100 {
            c.push(&[2.0]);
        }
        let s = c.summary();
        assert!(s.acf.iter().all(|&x| x == 4.0));
        assert_eq!(s.total, 4.0 * c.t_max());
        assert_eq!(c.t_max(), 4.0);
    }

    #[test]
    fn too_few_origins() {
        let mut c = CorrelationSet::new("x", 1, 5, 1, 1.0, 10).unwrap();
        c.push(&[1.0]);
        assert!(matches!(c.transport(1.0), Err(Error::InsufficientSamples(_))));
    }

    #[test]
    fn ballistic_integral_is_flagged() {
        let mut c = CorrelationSet::new("v", 3, 50, 1, 0.1, 500).unwrap();
        for _ in 0..500 {
            c.push(&[1.0, -1.0, 0.5]);
        }
        let d = self_diffusion(&c, 1).unwrap();
        assert!(!d.converged);
        let frozen = {
            let mut f = CorrelationSet::new("v", 3, 50, 1, 0.1, 500).unwrap();
            (0..500).for_each(|_| f.push(&[0.0; 3]));
            self_diffusion(&f, 1).unwrap()
        };
        assert_eq!(frozen.value, 0.0);
    }

    #[test]
    fn footprint_is_independent_of_run_length() {
        let mut c = CorrelationSet::new("x", 3, 64, 1, 1.0, 10).unwrap();
        let before = c.footprint();
        for i in 0..5000 {
            c.push(&[i as f64, 0.0, 1.0]);
        }
        assert_eq!(c.footprint(), before);
        let half = CorrelationSet::new("x", 3, 32, 2, 1.0, 10).unwrap();
        assert_eq!(2 * half.footprint(), before);
    }

    proptest! {
        #[test]
        fn lag_zero_is_mean_square(xs in proptest::collection::vec(-3.0f64..3.0, 6..60)) {
            let mut c = CorrelationSet::new("x", 2, 4, 1, 1.0, 30).unwrap();
            let mut sq = 0.0;
            for pair in xs.chunks_exact(2) {
                c.push(pair);
                sq += pair[0] * pair[0] + pair[1] * pair[1];
            }
            let n = (xs.len() / 2) as f64;
            let acf0 = c.summary().acf[0];
            prop_assert!((acf0 - sq / n).abs() <= 1e-12 * (1.0 + sq / n));
        }

        #[test]
        fn split_run_equals_uninterrupted(xs in proptest::collection::vec(-3.0f64..3.0, 2..80), cut in 0usize..80) {
            let mut a = CorrelationSet::new("x", 1, 7, 1, 0.1, 80).unwrap();
            for x in &xs {
                a.push(&[*x]);
            }
            let cut = cut.min(xs.len());
            let mut b = CorrelationSet::new("x", 1, 7, 1, 0.1, 80).unwrap();
            xs[..cut].iter().for_each(|x| b.push(&[*x]));
            let mut b = CorrelationSet::from_bytes(&b.to_bytes()).unwrap();
            xs[cut..].iter().for_each(|x| b.push(&[*x]));
            prop_assert_eq!(a, b);
        }
    }
}
