//! Block averaging shared by the samplers.

use crate::codec::{Persist, Reader, Writer};
use crate::error::{Error, Result};

/// Number of blocks used for every standard error.
pub const BLOCKS: usize = 10;

/// Mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Samples per block so that `expected` samples fill all blocks.
pub fn block_len(expected: u64) -> u64 {
    expected.div_ceil(BLOCKS as u64).max(1)
}

/// Block index of the `index`-th sample; overflow lands in the last block.
pub fn block_of(index: u64, block_len: u64) -> usize {
    ((index / block_len) as usize).min(BLOCKS - 1)
}

/// Standard error of the mean of block estimates; `NaN` with fewer than two.
pub fn block_stderr(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Running mean of a scalar with fixed block assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockAverage {
    block_len: u64,
    count: u64,
    sums: [f64; BLOCKS],
    counts: [u64; BLOCKS],
}

impl BlockAverage {
    pub fn new(expected: u64) -> Self {
        BlockAverage {
            block_len: block_len(expected),
            count: 0,
            sums: [0.0; BLOCKS],
            counts: [0; BLOCKS],
        }
    }

    pub fn push(&mut self, x: f64) {
        let b = block_of(self.count, self.block_len);
        self.sums[b] += x;
        self.counts[b] += 1;
        self.count += 1;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn estimate(&self) -> Option<Estimate> {
        if self.count == 0 {
            return None;
        }
        let mean = self.sums.iter().sum::<f64>() / self.count as f64;
        let blocks: Vec<f64> = self
            .sums
            .iter()
            .zip(&self.counts)
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| s / c as f64)
            .collect();
        Some(Estimate {
            mean,
            stderr: block_stderr(&blocks),
        })
    }
}

impl Persist for BlockAverage {
    fn encode(&self, w: &mut Writer) {
        w.u64(self.block_len);
        w.u64(self.count);
        w.f64s(&self.sums);
        w.u64s(&self.counts);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let block_len = r.u64()?;
        let count = r.u64()?;
        let sums: [f64; BLOCKS] = r
            .f64s()?
            .try_into()
            .map_err(|_| Error::Restore("block average: wrong block count".into()))?;
        let counts: [u64; BLOCKS] = r
            .u64s()?
            .try_into()
            .map_err(|_| Error::Restore("block average: wrong block count".into()))?;
        if block_len == 0 {
            return Err(Error::Restore("block average: zero block length".into()));
        }
        Ok(BlockAverage {
            block_len,
            count,
            sums,
            counts,
        })
    }
}
