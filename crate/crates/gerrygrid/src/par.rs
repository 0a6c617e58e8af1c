//! Multi-threaded drivers. Work is split into fixed numeric ranges of bit
//! vectors (or fixed trial indices) and results are reassembled in range
//! order, so outputs never depend on the thread count.

use std::collections::BTreeMap;

use gerrygrid_core::analysis::{sweep_range, Extremes, SlopeTable};
use gerrygrid_core::enumeration::space_end;
use gerrygrid_core::optimizers::{check_compare, curve_points, trial_config};
use gerrygrid_core::{Algorithm, CurvePoint, DualGraph, Evaluator, OptimizerConfig, PlanSet, SweepMode, SweepRecord, TrialResult};
use rayon::prelude::*;

use crate::error::Result;

/// A sweep over the bit vectors in `[start, end)`.
#[derive(Clone, Copy)]
pub struct SweepJob<'a> {
    pub g: &'a DualGraph,
    pub plans: &'a PlanSet,
    pub mode: SweepMode,
    pub num: Option<u32>,
    pub start: u64,
    pub end: u64,
}

const CHUNKS: u64 = 4096;
const BATCH: usize = 256;

impl<'a> SweepJob<'a> {
    pub fn new(g: &'a DualGraph, plans: &'a PlanSet, mode: SweepMode, num: Option<u32>) -> SweepJob<'a> {
        SweepJob { g, plans, mode, num, start: 0, end: space_end(g.k().min(63)) }
    }

    fn chunks(&self) -> Vec<(u64, u64)> {
        let end = self.end.min(space_end(self.g.k().min(63)));
        if self.start >= end {
            return Vec::new();
        }
        let width = ((end - self.start) / CHUNKS).max(1);
        let mut out = Vec::new();
        let mut s = self.start;
        while s < end {
            let e = s.saturating_add(width).min(end);
            out.push((s, e));
            s = e;
        }
        out
    }

    fn records(&self, (s, e): (u64, u64)) -> Result<Vec<SweepRecord>> {
        Ok(sweep_range(self.g, self.plans, self.mode, self.num, s, e)?.collect())
    }

    /// Feeds every record to `sink` in increasing bit-vector order.
    pub fn for_each<F>(&self, mut sink: F) -> Result<()>
    where
        F: FnMut(SweepRecord) -> Result<()>,
    {
        // Fail early on invalid input rather than inside a worker.
        sweep_range(self.g, self.plans, self.mode, self.num, 0, 0)?;
        for batch in self.chunks().chunks(BATCH) {
            let done: Vec<Result<Vec<SweepRecord>>> = batch.par_iter().map(|&c| self.records(c)).collect();
            for part in done {
                part?.into_iter().try_for_each(&mut sink)?;
            }
        }
        Ok(())
    }

    /// Regression sums and extremes per `num`, without keeping records.
    /// In dedup mode each record is weighted by its orbit size.
    pub fn summarize(&self) -> Result<Summary> {
        sweep_range(self.g, self.plans, self.mode, self.num, 0, 0)?;
        let dedup = self.mode == SweepMode::Dedup;
        self.chunks()
            .into_par_iter()
            .map(|(s, e)| {
                let mut sum = Summary::default();
                for rec in sweep_range(self.g, self.plans, self.mode, self.num, s, e)? {
                    sum.add_weighted(&rec, if dedup { rec.orbit_size } else { 1 });
                }
                Ok(sum)
            })
            .try_reduce(Summary::default, |mut a, b| {
                a.merge(b);
                Ok(a)
            })
    }
}

/// Aggregates of a sweep that can be merged in any order with the same result.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub slopes: SlopeTable,
    pub extremes: BTreeMap<u32, Extremes>,
    /// Records per `num`.
    pub records: BTreeMap<u32, u64>,
    /// Distributions per `num` represented by the records (orbit sizes in dedup mode).
    pub weighted: BTreeMap<u32, u64>,
}

impl Summary {
    pub fn add(&mut self, rec: &SweepRecord) {
        self.add_weighted(rec, 1);
    }

    /// Adds a record standing for `weight` distributions.
    pub fn add_weighted(&mut self, rec: &SweepRecord, weight: u32) {
        self.slopes.add(rec);
        match self.extremes.get_mut(&rec.num) {
            Some(e) => e.observe(rec),
            None => {
                self.extremes.insert(rec.num, Extremes::from_record(rec.clone()));
            }
        }
        *self.records.entry(rec.num).or_default() += 1;
        *self.weighted.entry(rec.num).or_default() += weight as u64;
    }

    fn merge(&mut self, other: Summary) {
        self.slopes.merge(&other.slopes);
        for (num, e) in other.extremes {
            match self.extremes.get_mut(&num) {
                Some(mine) => mine.merge(&e),
                None => {
                    self.extremes.insert(num, e);
                }
            }
        }
        for (num, c) in other.records {
            *self.records.entry(num).or_default() += c;
        }
        for (num, c) in other.weighted {
            *self.weighted.entry(num).or_default() += c;
        }
    }
}

/// Largest expected representation over all distributions with `num` dots.
pub fn known_max(g: &DualGraph, plans: &PlanSet, num: u32) -> Result<f64> {
    let square = matches!(g.grid_dims(), Some((r, c)) if r == c);
    // Representation is symmetric on square grids, so orbit representatives suffice.
    let mode = if square { SweepMode::Dedup } else { SweepMode::Full };
    let sum = SweepJob::new(g, plans, mode, Some(num)).summarize()?;
    let best = sum.extremes.get(&num).map(|e| e.best.rep.expectation());
    Ok(best.expect("every num in 0..=k has a distribution"))
}

/// Runs `trials` independent searches of `alg` in parallel, returned in trial order.
pub fn run_trials(
    alg: Algorithm,
    e: &Evaluator<'_>,
    g: &DualGraph,
    num: usize,
    trials: usize,
    k_max: usize,
    base: &OptimizerConfig,
) -> Result<Vec<TrialResult>> {
    let results: Vec<_> =
        (0..trials as u64).into_par_iter().map(|t| alg.run(e, g, num, &trial_config(alg, base, k_max, t))).collect();
    Ok(results.into_iter().collect::<gerrygrid_core::Result<Vec<_>>>()?)
}

/// Parallel counterpart of [`gerrygrid_core::compare`] with identical output.
pub fn compare(
    algorithms: &[Algorithm],
    e: &Evaluator<'_>,
    g: &DualGraph,
    num: usize,
    trials: usize,
    k_max_grid: &[usize],
    base: &OptimizerConfig,
) -> Result<Vec<CurvePoint>> {
    let k_max = check_compare(trials, k_max_grid)?;
    let mut points = Vec::new();
    for &alg in algorithms {
        let results = run_trials(alg, e, g, num, trials, k_max, base)?;
        points.extend(curve_points(alg, &results, k_max_grid));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gerrygrid_core::{enumerate_plans, extremes, slope_table, sweep};

    #[test]
    fn parallel_sweep_matches_sequential() {
        let g = DualGraph::square(4).unwrap();
        let plans = enumerate_plans(4).unwrap();
        let seq: Vec<_> = sweep(&g, &plans, SweepMode::Full, Some(7)).unwrap().collect();
        let mut par = Vec::new();
        SweepJob::new(&g, &plans, SweepMode::Full, Some(7))
            .for_each(|r| {
                par.push(r);
                Ok(())
            })
            .unwrap();
        assert_eq!(par, seq);
        let sum = SweepJob::new(&g, &plans, SweepMode::Full, Some(7)).summarize().unwrap();
        assert_eq!(sum.slopes.rows(), slope_table(&seq));
        assert_eq!(sum.extremes[&7], extremes(&seq, 7).unwrap());
        assert_eq!(sum.records[&7], 11440);
    }

    #[test]
    fn dedup_weights_recover_full_counts() {
        let g = DualGraph::square(4).unwrap();
        let plans = enumerate_plans(4).unwrap();
        let full = SweepJob::new(&g, &plans, SweepMode::Full, None).summarize().unwrap();
        let dedup = SweepJob::new(&g, &plans, SweepMode::Dedup, None).summarize().unwrap();
        assert_eq!(dedup.weighted, full.records);
        assert_eq!(dedup.records.values().sum::<u64>(), 8548);
        for (num, e) in &full.extremes {
            assert_eq!(dedup.extremes[num].best.rep.expectation(), e.best.rep.expectation());
            assert_eq!(dedup.extremes[num].worst.rep.expectation(), e.worst.rep.expectation());
        }
    }

    #[test]
    fn parallel_compare_matches_core() {
        let g = DualGraph::square(4).unwrap();
        let plans = enumerate_plans(4).unwrap();
        let e = Evaluator::exact(&plans).unwrap();
        let base = OptimizerConfig { seed: 9, ..Default::default() };
        let algs = Algorithm::ALL;
        let a = compare(&algs, &e, &g, 6, 5, &[1, 10, 40], &base).unwrap();
        let b = gerrygrid_core::compare(&algs, &e, &g, 6, 5, &[1, 10, 40], &base).unwrap();
        assert_eq!(a, b);
    }
}
