//! Thread-parallel pair loop with per-thread force and torque lists.
//!
//! The flattened molecule-pair index space `0..N(N-1)/2` is split into `W`
//! contiguous chunks. Each worker writes only into its own [`ThreadBuffers`];
//! the buffers are summed afterwards in worker order, so the result depends on
//! `W` but never on thread scheduling. No atomics or locks are involved.
//!
//! A distributed (message-passing) layer would hand each rank a contiguous
//! block of the same pair index space and reduce the rank buffers in rank
//! order; that layer is not part of this crate.

use std::ops::Range;

use crate::model::{SystemComposition, SystemState};
use crate::potentials::PairTable;
use crate::Vec3;

/// Scalar accumulators of one pair loop.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairSums {
    pub lj: f64,
    pub elec: f64,
    pub reaction_field: f64,
    pub lj_shift: f64,
    /// `sum dU/dlambda` under scaling of molecular centers by `lambda`.
    pub d_lambda: f64,
    /// `sum d^2U/dlambda^2`.
    pub d2_lambda: f64,
    /// Molecular virial `sum (R_i - R_j) . F_ij`.
    pub virial: f64,
    pub overlap: bool,
}

impl PairSums {
    fn merge(&mut self, other: &PairSums) {
        self.lj += other.lj;
        self.elec += other.elec;
        self.reaction_field += other.reaction_field;
        self.lj_shift += other.lj_shift;
        self.d_lambda += other.d_lambda;
        self.d2_lambda += other.d2_lambda;
        self.virial += other.virial;
        self.overlap |= other.overlap;
    }
}

/// Force/torque lists and scalars owned by exactly one worker.
#[derive(Clone, Debug)]
pub struct ThreadBuffers {
    owner: usize,
    pub forces: Vec<Vec3>,
    pub torques: Vec<Vec3>,
    pub sums: PairSums,
    pub overlap: Option<(usize, usize)>,
}

impl ThreadBuffers {
    fn new(owner: usize, n: usize) -> Self {
        ThreadBuffers {
            owner,
            forces: vec![Vec3::zeros(); n],
            torques: vec![Vec3::zeros(); n],
            sums: PairSums::default(),
            overlap: None,
        }
    }
}

/// Reduced result of a pair loop.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub forces: Vec<Vec3>,
    pub torques: Vec<Vec3>,
    pub sums: PairSums,
    pub overlap: Option<(usize, usize)>,
}

pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Static contiguous partition of `0..pairs` into `workers` chunks; earlier
/// chunks take the remainder.
pub fn partition(pairs: usize, workers: usize) -> Vec<Range<usize>> {
    let workers = workers.max(1);
    let base = pairs / workers;
    let extra = pairs % workers;
    let mut start = 0;
    (0..workers)
        .map(|w| {
            let len = base + usize::from(w < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Row-major `(i, j)`, `i < j`, of flattened pair index `k`.
pub fn pair_from_index(k: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    let mut row_start = 0;
    loop {
        let row_len = n - 1 - i;
        if k < row_start + row_len {
            return (i, i + 1 + (k - row_start));
        }
        row_start += row_len;
        i += 1;
    }
}

struct LoopInput<'a> {
    table: &'a PairTable,
    species_of: &'a [usize],
    positions: &'a [Vec3],
    offsets: &'a [Vec3],
    site_range: Vec<Range<usize>>,
}

fn run_chunk(input: &LoopInput<'_>, range: Range<usize>, worker: usize, buf: &mut ThreadBuffers) {
    debug_assert_eq!(buf.owner, worker, "buffer written by a foreign worker");
    let n = input.positions.len();
    if range.is_empty() {
        return;
    }
    let (mut i, mut j) = pair_from_index(range.start, n);
    for _ in range {
        let (si, sj) = (input.species_of[i], input.species_of[j]);
        let oi = &input.offsets[input.site_range[i].clone()];
        let oj = &input.offsets[input.site_range[j].clone()];
        if let Some(p) = input
            .table
            .molecule_pair(si, sj, &input.positions[i], &input.positions[j], oi, oj, &mut buf.sums)
        {
            buf.forces[i] += p.force;
            buf.forces[j] -= p.force;
            buf.torques[i] += p.torque_i;
            buf.torques[j] += p.torque_j;
        }
        if buf.sums.overlap && buf.overlap.is_none() {
            buf.overlap = Some((i, j));
        }
        j += 1;
        if j == n {
            i += 1;
            j = i + 1;
        }
    }
}

fn site_ranges(composition: &SystemComposition, species_of: &[usize]) -> Vec<Range<usize>> {
    let mut start = 0;
    species_of
        .iter()
        .map(|&s| {
            let len = composition.species[s].sites.len();
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Pair loop over `workers` threads with per-thread buffers reduced in fixed
/// worker order.
pub fn parallel_evaluate(
    table: &PairTable,
    composition: &SystemComposition,
    species_of: &[usize],
    state: &SystemState,
    offsets: &[Vec3],
    workers: usize,
) -> Evaluation {
    let n = state.len();
    let input = LoopInput {
        table,
        species_of,
        positions: &state.positions,
        offsets,
        site_range: site_ranges(composition, species_of),
    };
    let chunks = partition(pair_count(n), workers);
    let mut buffers: Vec<ThreadBuffers> = (0..chunks.len()).map(|w| ThreadBuffers::new(w, n)).collect();

    if buffers.len() == 1 {
        run_chunk(&input, chunks[0].clone(), 0, &mut buffers[0]);
    } else {
        std::thread::scope(|scope| {
            for (w, (buf, range)) in buffers.iter_mut().zip(chunks).enumerate() {
                let input = &input;
                scope.spawn(move || run_chunk(input, range, w, buf));
            }
        });
    }

    let mut iter = buffers.into_iter();
    let first = iter.next().expect("at least one worker");
    let mut out = Evaluation {
        forces: first.forces,
        torques: first.torques,
        sums: first.sums,
        overlap: first.overlap,
    };
    for buf in iter {
        for (acc, f) in out.forces.iter_mut().zip(&buf.forces) {
            *acc += f;
        }
        for (acc, t) in out.torques.iter_mut().zip(&buf.torques) {
            *acc += t;
        }
        out.sums.merge(&buf.sums);
        out.overlap = out.overlap.or(buf.overlap);
    }
    out
}

/// Plain nested `i < j` loop; the reference for the chunked evaluation.
pub fn serial_evaluate(
    table: &PairTable,
    composition: &SystemComposition,
    species_of: &[usize],
    state: &SystemState,
    offsets: &[Vec3],
) -> Evaluation {
    let n = state.len();
    let ranges = site_ranges(composition, species_of);
    let mut forces = vec![Vec3::zeros(); n];
    let mut torques = vec![Vec3::zeros(); n];
    let mut sums = PairSums::default();
    let mut overlap = None;
    for i in 0..n {
        for j in i + 1..n {
            let (si, sj) = (species_of[i], species_of[j]);
            if let Some(p) = table.molecule_pair(
                si,
                sj,
                &state.positions[i],
                &state.positions[j],
                &offsets[ranges[i].clone()],
                &offsets[ranges[j].clone()],
                &mut sums,
            ) {
                forces[i] += p.force;
                forces[j] -= p.force;
                torques[i] += p.torque_i;
                torques[j] += p.torque_j;
            }
            if sums.overlap && overlap.is_none() {
                overlap = Some((i, j));
            }
        }
    }
    Evaluation {
        forces,
        torques,
        sums,
        overlap,
    }
}

/// Logical CPUs available to the process.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
