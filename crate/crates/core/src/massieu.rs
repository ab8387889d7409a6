//! Residual Massieu-potential derivatives `A^r_mn = beta^m rho^n d^(m+n)(beta A^r / N) / d beta^m d rho^n`
//! from canonical fluctuations of `U`, `U_V = dU/dV` and `U_VV = d^2U/dV^2`.
//!
//! Moments are accumulated about the first snapshot so that cumulants keep
//! their precision over long runs. The estimators are exact ensemble
//! identities; for example
//!
//! ```text
//! A11 = -beta V [<U_V> - beta cov(U_V, U)] / N
//! A12 =  beta [2V (<U_V> - beta cov(U_V, U))
//!        + V^2 (<U_VV> - beta cov(U_VV, U) - 2 beta var(U_V) + beta^2 k(U_V, U_V, U))] / N
//! ```
//!
//! where `k` is the third joint cumulant.

use crate::codec::{Persist, Reader, Writer};
use crate::error::{Error, Result};
use crate::stats::{block_len, block_of, block_stderr, Estimate, BLOCKS};

/// Derivative orders in report order.
pub const ORDERS: [(u32, u32); 8] = [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2)];

/// Below this many samples third-order derivatives carry a warning.
pub const THIRD_ORDER_MIN_SAMPLES: u64 = 10_000;

/// Shifted power sums of one block.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Moments {
    n: u64,
    u: f64,
    uu: f64,
    uuu: f64,
    v: f64,
    vu: f64,
    vuu: f64,
    vv: f64,
    vvu: f64,
    w: f64,
    wu: f64,
}

impl Moments {
    fn add(&mut self, u: f64, v: f64, w: f64) {
        self.n += 1;
        self.u += u;
        self.uu += u * u;
        self.uuu += u * u * u;
        self.v += v;
        self.vu += v * u;
        self.vuu += v * u * u;
        self.vv += v * v;
        self.vvu += v * v * u;
        self.w += w;
        self.wu += w * u;
    }

    fn merge(&mut self, o: &Moments) {
        self.n += o.n;
        self.u += o.u;
        self.uu += o.uu;
        self.uuu += o.uuu;
        self.v += o.v;
        self.vu += o.vu;
        self.vuu += o.vuu;
        self.vv += o.vv;
        self.vvu += o.vvu;
        self.w += o.w;
        self.wu += o.wu;
    }

    fn fields(&self) -> [f64; 10] {
        [
            self.u, self.uu, self.uuu, self.v, self.vu, self.vuu, self.vv, self.vvu, self.w, self.wu,
        ]
    }
}

/// Central quantities derived from one moment set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cumulants {
    pub mean_u: f64,
    pub mean_uv: f64,
    pub mean_uvv: f64,
    pub var_u: f64,
    pub k3_u: f64,
    pub cov_uv_u: f64,
    pub k_uv_u_u: f64,
    pub var_uv: f64,
    pub k_uv_uv_u: f64,
    pub cov_uvv_u: f64,
}

/// Running moments of `U`, `U_V`, `U_VV` for one state point.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeAccumulator {
    beta: f64,
    volume: f64,
    n_molecules: usize,
    shift: Option<[f64; 3]>,
    block_len: u64,
    blocks: [Moments; BLOCKS],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivativeEntry {
    pub m: u32,
    pub n: u32,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeReport {
    pub entries: Vec<DerivativeEntry>,
    /// `1 + A^r_01`
    pub compressibility: Estimate,
    /// `u^r / T = A^r_10`
    pub residual_energy: Estimate,
    /// `c_v^r = -A^r_20`
    pub residual_heat_capacity: Estimate,
    pub samples: u64,
    pub warnings: Vec<String>,
}

impl DerivativeReport {
    pub fn get(&self, m: u32, n: u32) -> Option<&DerivativeEntry> {
        self.entries.iter().find(|e| e.m == m && e.n == n)
    }
}

impl DerivativeAccumulator {
    /// `expected` sets the block length; more samples than expected extend
    /// the last block.
    pub fn new(temperature: f64, volume: f64, n_molecules: usize, expected: u64) -> Self {
        DerivativeAccumulator {
            beta: 1.0 / temperature,
            volume,
            n_molecules,
            shift: None,
            block_len: block_len(expected),
            blocks: [Moments::default(); BLOCKS],
        }
    }

    pub fn samples(&self) -> u64 {
        self.blocks.iter().map(|b| b.n).sum()
    }

    pub fn accumulate(&mut self, u: f64, u_v: f64, u_vv: f64) -> Result<()> {
        if !(u.is_finite() && u_v.is_finite() && u_vv.is_finite()) {
            return Err(Error::System(format!("non-finite Massieu snapshot U={u}, U_V={u_v}, U_VV={u_vv}")));
        }
        let s = *self.shift.get_or_insert([u, u_v, u_vv]);
        let b = block_of(self.samples(), self.block_len);
        self.blocks[b].add(u - s[0], u_v - s[1], u_vv - s[2]);
        Ok(())
    }

    fn total(&self) -> Moments {
        let mut m = Moments::default();
        self.blocks.iter().for_each(|b| m.merge(b));
        m
    }

    fn cumulants(&self, m: &Moments) -> Cumulants {
        let s = self.shift.unwrap_or([0.0; 3]);
        let n = m.n as f64;
        let (u, uu, uuu) = (m.u / n, m.uu / n, m.uuu / n);
        let (v, vu, vuu, vv, vvu) = (m.v / n, m.vu / n, m.vuu / n, m.vv / n, m.vvu / n);
        let (w, wu) = (m.w / n, m.wu / n);
        Cumulants {
            mean_u: s[0] + u,
            mean_uv: s[1] + v,
            mean_uvv: s[2] + w,
            var_u: uu - u * u,
            k3_u: uuu - 3.0 * uu * u + 2.0 * u * u * u,
            cov_uv_u: vu - v * u,
            k_uv_u_u: vuu - v * uu - 2.0 * u * vu + 2.0 * v * u * u,
            var_uv: vv - v * v,
            k_uv_uv_u: vvu - u * vv - 2.0 * v * vu + 2.0 * v * v * u,
            cov_uvv_u: wu - w * u,
        }
    }

    /// Derivatives in [`ORDERS`] order from one moment set.
    pub fn derivatives(&self, c: &Cumulants) -> [f64; 8] {
        let b = self.beta;
        let v = self.volume;
        let n = self.n_molecules as f64;
        let g = c.mean_uv - b * c.cov_uv_u;
        let out = [
            b * c.mean_u / n,
            -b * v * c.mean_uv / n,
            -b * b * c.var_u / n,
            -b * v * g / n,
            (2.0 * b * v * c.mean_uv + v * v * (b * c.mean_uvv - b * b * c.var_uv)) / n,
            b * b * b * c.k3_u / n,
            -b * b * v * (-2.0 * c.cov_uv_u + b * c.k_uv_u_u) / n,
            b * (2.0 * v * g
                + v * v * (c.mean_uvv - b * c.cov_uvv_u - 2.0 * b * c.var_uv + b * b * c.k_uv_uv_u))
                / n,
        ];
        // Normalize negative zero.
        out.map(|x| x + 0.0)
    }

    pub fn finalize(&self) -> Result<DerivativeReport> {
        let total = self.total();
        if total.n < 2 {
            return Err(Error::InsufficientSamples(format!(
                "Massieu derivatives need at least 2 samples, have {}",
                total.n
            )));
        }
        let values = self.derivatives(&self.cumulants(&total));
        let per_block: Vec<[f64; 8]> = self
            .blocks
            .iter()
            .filter(|b| b.n >= 2)
            .map(|b| self.derivatives(&self.cumulants(b)))
            .collect();
        let errors: Vec<f64> = (0..8)
            .map(|k| block_stderr(&per_block.iter().map(|d| d[k]).collect::<Vec<_>>()))
            .collect();

        let entries: Vec<DerivativeEntry> = ORDERS
            .iter()
            .zip(values.iter().zip(&errors))
            .map(|(&(m, n), (&value, &stderr))| DerivativeEntry { m, n, value, stderr })
            .collect();
        let mut warnings = Vec::new();
        if total.n < THIRD_ORDER_MIN_SAMPLES {
            warnings.push(format!(
                "third-order derivatives A30, A21, A12 from only {} samples (recommended >= {THIRD_ORDER_MIN_SAMPLES})",
                total.n
            ));
        }
        Ok(DerivativeReport {
            compressibility: Estimate {
                mean: 1.0 + values[1],
                stderr: errors[1],
            },
            residual_energy: Estimate {
                mean: values[0],
                stderr: errors[0],
            },
            residual_heat_capacity: Estimate {
                mean: -values[2],
                stderr: errors[2],
            },
            entries,
            samples: total.n,
            warnings,
        })
    }

    /// Cumulants of all samples, for diagnostics.
    pub fn sample_cumulants(&self) -> Option<Cumulants> {
        let t = self.total();
        (t.n > 0).then(|| self.cumulants(&t))
    }
}

impl Persist for DerivativeAccumulator {
    fn encode(&self, w: &mut Writer) {
        w.f64(self.beta);
        w.f64(self.volume);
        w.usize(self.n_molecules);
        w.bool(self.shift.is_some());
        if let Some(s) = self.shift {
            s.iter().for_each(|x| w.f64(*x));
        }
        w.u64(self.block_len);
        for b in &self.blocks {
            w.u64(b.n);
            b.fields().iter().for_each(|x| w.f64(*x));
        }
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let beta = r.f64()?;
        let volume = r.f64()?;
        let n_molecules = r.usize()?;
        let shift = if r.bool()? {
            Some([r.f64()?, r.f64()?, r.f64()?])
        } else {
            None
        };
        let block_len = r.u64()?;
        if block_len == 0 {
            return Err(Error::Restore("Massieu accumulator: zero block length".into()));
        }
        let mut blocks = [Moments::default(); BLOCKS];
        for b in &mut blocks {
            b.n = r.u64()?;
            let f: Vec<f64> = (0..10).map(|_| r.f64()).collect::<Result<_>>()?;
            [b.u, b.uu, b.uuu, b.v, b.vu, b.vuu, b.vv, b.vvu, b.w, b.wu] =
                f.try_into().expect("ten moment fields");
        }
        Ok(DerivativeAccumulator {
            beta,
            volume,
            n_molecules,
            shift,
            block_len,
            blocks,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn ideal_gas_gives_exact_zeros() {
        let mut acc = DerivativeAccumulator::new(1.3, 200.0, 50, 100);
        for _ in 0..100 {
            acc.accumulate(0.0, 0.0, 0.0).unwrap();
        }
        let rep = acc.finalize().unwrap();
        for e in &rep.entries {
            assert_eq!(e.value.to_bits(), 0.0f64.to_bits(), "A{}{}", e.m, e.n);
        }
        assert_eq!(rep.compressibility.mean, 1.0);
    }

    #[test]
    fn constant_snapshots_have_no_fluctuations() {
        let mut acc = DerivativeAccumulator::new(2.0, 100.0, 10, 20);
        for _ in 0..20 {
            acc.accumulate(-35.7, 0.123, -0.004).unwrap();
        }
        let c = acc.sample_cumulants().unwrap();
        for x in [c.var_u, c.k3_u, c.cov_uv_u, c.k_uv_u_u, c.var_uv, c.k_uv_uv_u, c.cov_uvv_u] {
            assert_eq!(x, 0.0);
        }
    }

    #[test]
    fn gaussian_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut acc = DerivativeAccumulator::new(1.0, 1.0, 1, 1_000_000);
        for _ in 0..1_000_000 {
            let x: f64 = StandardNormal.sample(&mut rng);
            acc.accumulate(x, 0.0, 0.0).unwrap();
        }
        let var = acc.sample_cumulants().unwrap().var_u;
        assert!((var - 1.0).abs() < 5e-3, "{var}");
    }

    #[test]
    fn too_few_samples() {
        let mut acc = DerivativeAccumulator::new(1.0, 1.0, 1, 10);
        acc.accumulate(1.0, 0.0, 0.0).unwrap();
        assert!(matches!(acc.finalize(), Err(Error::InsufficientSamples(_))));
        assert!(acc.accumulate(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn third_order_warning() {
        let mut acc = DerivativeAccumulator::new(1.0, 1.0, 1, 10);
        for i in 0..10 {
            acc.accumulate(i as f64, 0.0, 0.0).unwrap();
        }
        assert_eq!(acc.finalize().unwrap().warnings.len(), 1);
    }

    /// Two-level system: exact derivatives of `a(beta) = -ln(1 + exp(-beta e)) / N`
    /// in closed form, with `U_V = U_VV = 0`.
    #[test]
    fn two_level_system_matches_closed_form() {
        let (e, beta): (f64, f64) = (1.7, 0.8);
        let p = (-beta * e).exp() / (1.0 + (-beta * e).exp());
        let n_samples = 10_000u64;
        let excited = (p * n_samples as f64).round() as u64;
        let p = excited as f64 / n_samples as f64;
        let mut acc = DerivativeAccumulator::new(1.0 / beta, 1.0, 1, n_samples);
        for i in 0..n_samples {
            acc.accumulate(if i < excited { e } else { 0.0 }, 0.0, 0.0).unwrap();
        }
        let rep = acc.finalize().unwrap();
        let var = e * e * p * (1.0 - p);
        let k3 = e * e * e * p * (1.0 - p) * (1.0 - 2.0 * p);
        assert!((rep.get(1, 0).unwrap().value - beta * e * p).abs() < 1e-12);
        assert!((rep.get(2, 0).unwrap().value + beta * beta * var).abs() < 1e-12);
        assert!((rep.get(3, 0).unwrap().value - beta.powi(3) * k3).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn cumulants_are_shift_invariant(
            xs in proptest::collection::vec((-5.0f64..5.0, -1.0f64..1.0, -1.0f64..1.0), 3..40),
            c in -1e3f64..1e3,
        ) {
            let mut a = DerivativeAccumulator::new(1.0, 10.0, 4, xs.len() as u64);
            let mut b = a.clone();
            for &(u, v, w) in &xs {
                a.accumulate(u, v, w).unwrap();
                b.accumulate(u + c, v, w).unwrap();
            }
            let (ca, cb) = (a.sample_cumulants().unwrap(), b.sample_cumulants().unwrap());
            prop_assert!((ca.var_u - cb.var_u).abs() < 1e-9);
            prop_assert!((ca.k3_u - cb.k3_u).abs() < 1e-8);
            prop_assert!((ca.cov_uv_u - cb.cov_uv_u).abs() < 1e-9);
            prop_assert!((ca.mean_u + c - cb.mean_u).abs() < 1e-9 * (1.0 + c.abs()));
        }

        #[test]
        fn checkpoint_round_trip(xs in proptest::collection::vec(-10.0f64..10.0, 0..30)) {
            let mut a = DerivativeAccumulator::new(1.5, 30.0, 7, 30);
            for &x in &xs {
                a.accumulate(x, 0.5 * x, -x).unwrap();
            }
            prop_assert_eq!(DerivativeAccumulator::from_bytes(&a.to_bytes()).unwrap(), a);
        }
    }
}
