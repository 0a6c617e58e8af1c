//! Exhaustive sweeps over voter distributions, per-`num` regression of
//! expected representation on partisan clustering, and extremal
//! distributions.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::borrow::Borrow;
use core::cmp::Ordering;

use crate::enumeration::{Distributions, PlanSet, VoterDistribution};
use crate::error::{invalid, Error, Result};
use crate::graph::DualGraph;
use crate::metrics::{clus, clusp, rep_stats, Ratio, RepStats};
use crate::symmetry::SquareSymmetries;

/// Which distributions a sweep visits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepMode {
    /// Every bit vector.
    Full,
    /// The numerically smallest vector of each orbit under the square's symmetries.
    Dedup,
}

/// Statistics of one voter distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub dist: VoterDistribution,
    pub num: u32,
    pub clus: Ratio,
    /// Absent when no edge leaves a dot block (always the case for `num == 0`).
    pub clusp: Option<Ratio>,
    pub rep: RepStats,
    /// Orbit size under the square's symmetries; 1 on non-square graphs.
    pub orbit_size: u32,
}

impl SweepRecord {
    pub fn bits(&self) -> u64 {
        self.dist.bits()
    }

    /// Builds the record for one distribution.
    pub fn compute(g: &DualGraph, plans: &PlanSet, dist: VoterDistribution, orbit_size: u32) -> Result<SweepRecord> {
        let clusp = match clusp(g, dist) {
            Ok(r) => Some(r),
            Err(Error::UndefinedMetric(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(SweepRecord { dist, num: dist.num(), clus: clus(g, dist)?, clusp, rep: rep_stats(dist, plans)?, orbit_size })
    }

    /// Orders by exact expected representation.
    pub fn cmp_expectation(&self, other: &SweepRecord) -> Ordering {
        let a = self.rep.half_sum() as u128 * other.rep.total_plans() as u128;
        let b = other.rep.half_sum() as u128 * self.rep.total_plans() as u128;
        a.cmp(&b)
    }
}

/// Lazily computed records, in increasing bit-vector order.
pub struct Sweep<'a> {
    g: &'a DualGraph,
    plans: &'a PlanSet,
    syms: Option<SquareSymmetries>,
    mode: SweepMode,
    inner: Distributions,
}

impl Iterator for Sweep<'_> {
    type Item = SweepRecord;

    fn next(&mut self) -> Option<SweepRecord> {
        loop {
            let dist = self.inner.next()?;
            let bits = dist.bits();
            let orbit_size = match (&self.syms, self.mode) {
                (Some(s), SweepMode::Dedup) => {
                    if s.canonical(bits) != bits {
                        continue;
                    }
                    s.orbit_size(bits)
                }
                (Some(s), SweepMode::Full) => s.orbit_size(bits),
                (None, _) => 1,
            };
            // Inputs were validated when the sweep was built.
            return Some(SweepRecord::compute(self.g, self.plans, dist, orbit_size).expect("validated sweep input"));
        }
    }
}

/// Sweeps every distribution (of popcount `num` when given).
pub fn sweep<'a>(g: &'a DualGraph, plans: &'a PlanSet, mode: SweepMode, num: Option<u32>) -> Result<Sweep<'a>> {
    sweep_range(g, plans, mode, num, 0, u64::MAX)
}

/// Sweeps the bit vectors in `[start, end)`. Disjoint ranges give disjoint
/// record sets whose concatenation in range order equals the full sweep.
pub fn sweep_range<'a>(
    g: &'a DualGraph,
    plans: &'a PlanSet,
    mode: SweepMode,
    num: Option<u32>,
    start: u64,
    end: u64,
) -> Result<Sweep<'a>> {
    if g.k() != plans.k() {
        return Err(invalid!("graph has {} blocks, plans have {}", g.k(), plans.k()));
    }
    if plans.is_empty() {
        return Err(invalid!("empty plan set"));
    }
    if g.edge_count() == 0 {
        return Err(Error::UndefinedMetric("clustering of a graph without edges"));
    }
    let syms = match g.grid_dims() {
        Some((r, c)) if r == c => Some(SquareSymmetries::new(r)?),
        _ => None,
    };
    if mode == SweepMode::Dedup && syms.is_none() {
        return Err(Error::Unsupported("symmetry deduplication needs a square grid".into()));
    }
    let inner = Distributions::range(g.k(), num, start, end)?;
    Ok(Sweep { g, plans, syms, mode, inner })
}

/// Least-squares line through `points`: `(slope, intercept)`.
///
/// When every x is equal the slope is 0 and the intercept is the mean of y.
pub fn ols_slope(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.is_empty() {
        return Err(invalid!("regression needs at least one point"));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Ok((0.0, my));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// One regression row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeRow {
    pub num: u32,
    pub slope: f64,
    pub intercept: f64,
    pub count: u64,
}

const FRAC_BITS: u32 = 32;
const SCALE: f64 = (1u64 << FRAC_BITS) as f64;

/// Streaming least-squares sums in 32-bit fixed point.
///
/// Inputs are rounded to multiples of 2^-32; all sums and the centred
/// cross products are exact integers, so the result does not depend on the
/// order in which points were added or accumulators merged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SlopeAccumulator {
    n: u64,
    sx: i128,
    sy: i128,
    sxx: i128,
    sxy: i128,
}

fn fixed(v: f64) -> i128 {
    libm::round(v * SCALE) as i128
}

impl SlopeAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one point; coordinates must be finite with magnitude below 2^31.
    pub fn add(&mut self, x: f64, y: f64) {
        self.add_weighted(x, y, 1);
    }

    /// Adds `weight` copies of a point.
    pub fn add_weighted(&mut self, x: f64, y: f64, weight: u64) {
        let (x, y, w) = (fixed(x), fixed(y), weight as i128);
        self.n += weight;
        self.sx += w * x;
        self.sy += w * y;
        self.sxx += w * x * x;
        self.sxy += w * x * y;
    }

    pub fn merge(&mut self, other: &SlopeAccumulator) {
        self.n += other.n;
        self.sx += other.sx;
        self.sy += other.sy;
        self.sxx += other.sxx;
        self.sxy += other.sxy;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    /// `(slope, intercept)`, or `None` without points.
    pub fn fit(&self) -> Option<(f64, f64)> {
        if self.n == 0 {
            return None;
        }
        let n = self.n as i128;
        let centred = |sab: i128, sa: i128, sb: i128| -> Option<i128> { n.checked_mul(sab)?.checked_sub(sa.checked_mul(sb)?) };
        let mean_y = self.sy as f64 / self.n as f64 / SCALE;
        let mean_x = self.sx as f64 / self.n as f64 / SCALE;
        let (cxx, cxy) = match (centred(self.sxx, self.sx, self.sx), centred(self.sxy, self.sx, self.sy)) {
            (Some(a), Some(b)) => (a as f64, b as f64),
            _ => {
                let nf = self.n as f64;
                let (sx, sy) = (self.sx as f64, self.sy as f64);
                (nf * self.sxx as f64 - sx * sx, nf * self.sxy as f64 - sx * sy)
            }
        };
        if cxx <= 0.0 {
            return Some((0.0, mean_y));
        }
        let slope = cxy / cxx;
        Some((slope, mean_y - slope * mean_x))
    }
}

/// Per-`num` regression accumulators of expected representation against
/// partisan clustering. Records without a partisan clustering are skipped.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SlopeTable {
    by_num: BTreeMap<u32, SlopeAccumulator>,
}

impl SlopeTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, rec: &SweepRecord) {
        self.add_weighted(rec, 1);
    }

    /// Adds a record as `weight` identical points, e.g. one per member of its orbit.
    pub fn add_weighted(&mut self, rec: &SweepRecord, weight: u64) {
        if rec.num == 0 {
            return;
        }
        if let Some(x) = rec.clusp {
            self.by_num.entry(rec.num).or_default().add_weighted(x.to_f64(), rec.rep.expectation(), weight);
        }
    }

    pub fn merge(&mut self, other: &SlopeTable) {
        for (num, acc) in &other.by_num {
            self.by_num.entry(*num).or_default().merge(acc);
        }
    }

    /// One row per `num` seen, ascending.
    pub fn rows(&self) -> Vec<SlopeRow> {
        self.by_num
            .iter()
            .filter_map(|(&num, acc)| {
                let (slope, intercept) = acc.fit()?;
                Some(SlopeRow { num, slope, intercept, count: acc.count() })
            })
            .collect()
    }
}

/// Regression rows for a stream of records, one point per record.
pub fn slope_table<I, R>(records: I) -> Vec<SlopeRow>
where
    I: IntoIterator<Item = R>,
    R: Borrow<SweepRecord>,
{
    let mut table = SlopeTable::new();
    for r in records {
        table.add(r.borrow());
    }
    table.rows()
}

/// Highest and lowest expected representation among records of one `num`.
#[derive(Clone, Debug, PartialEq)]
pub struct Extremes {
    pub num: u32,
    /// Maximizer with the smallest bit vector.
    pub best: SweepRecord,
    pub worst: SweepRecord,
    /// Bit vectors of every maximizer, ascending.
    pub best_ties: Vec<u64>,
    pub worst_ties: Vec<u64>,
}

impl Extremes {
    pub fn from_record(rec: SweepRecord) -> Extremes {
        let bits = rec.bits();
        Extremes { num: rec.num, best: rec.clone(), worst: rec, best_ties: alloc::vec![bits], worst_ties: alloc::vec![bits] }
    }

    /// Folds in a record of the same `num`.
    pub fn observe(&mut self, rec: &SweepRecord) {
        debug_assert_eq!(rec.num, self.num);
        observe_side(&mut self.best, &mut self.best_ties, rec, Ordering::Greater);
        observe_side(&mut self.worst, &mut self.worst_ties, rec, Ordering::Less);
    }

    pub fn merge(&mut self, other: &Extremes) {
        debug_assert_eq!(other.num, self.num);
        merge_side(&mut self.best, &mut self.best_ties, &other.best, &other.best_ties, Ordering::Greater);
        merge_side(&mut self.worst, &mut self.worst_ties, &other.worst, &other.worst_ties, Ordering::Less);
    }
}

fn observe_side(cur: &mut SweepRecord, ties: &mut Vec<u64>, rec: &SweepRecord, better: Ordering) {
    match rec.cmp_expectation(cur) {
        o if o == better => {
            *cur = rec.clone();
            ties.clear();
            ties.push(rec.bits());
        }
        Ordering::Equal => {
            if rec.bits() < cur.bits() {
                *cur = rec.clone();
            }
            let at = ties.partition_point(|&b| b < rec.bits());
            if ties.get(at) != Some(&rec.bits()) {
                ties.insert(at, rec.bits());
            }
        }
        _ => {}
    }
}

fn merge_side(cur: &mut SweepRecord, ties: &mut Vec<u64>, rec: &SweepRecord, rec_ties: &[u64], better: Ordering) {
    match rec.cmp_expectation(cur) {
        o if o == better => {
            *cur = rec.clone();
            *ties = rec_ties.to_vec();
        }
        Ordering::Equal => {
            if rec.bits() < cur.bits() {
                *cur = rec.clone();
            }
            ties.extend_from_slice(rec_ties);
            ties.sort_unstable();
            ties.dedup();
        }
        _ => {}
    }
}

/// Best and worst records with popcount `num`; ties go to the smallest bit vector.
pub fn extremes<I, R>(records: I, num: u32) -> Result<Extremes>
where
    I: IntoIterator<Item = R>,
    R: Borrow<SweepRecord>,
{
    let mut acc: Option<Extremes> = None;
    for r in records {
        let r = r.borrow();
        if r.num != num {
            continue;
        }
        match &mut acc {
            Some(e) => e.observe(r),
            None => acc = Some(Extremes::from_record(r.clone())),
        }
    }
    acc.ok_or_else(|| Error::NotFound(alloc::format!("no records with num {num}")))
}
