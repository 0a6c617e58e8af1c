//! Exhaustive enumeration of legal districting plans and voter distributions.
//!
//! Plans are enumerated by backtracking on the lowest unassigned block: the
//! district containing it is grown to full size with Redelmeier's method
//! (each connected set containing the root is produced exactly once), and a
//! branch is cut as soon as some connected component of the unassigned
//! blocks has a size that is not a multiple of the district size.

use alloc::vec::Vec;
use core::fmt;
use core::ops::ControlFlow;

use crate::districting::{outside_reaches_border, DistrictingPlan};
use crate::error::{invalid, Error, Result};
use crate::graph::{BlockId, BlockSet, DualGraph};

/// Voter distribution: bit `i` is set iff block `i` leans to the party of interest.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VoterDistribution {
    bits: u64,
    k: u8,
}

impl VoterDistribution {
    pub fn new(bits: u64, k: usize) -> Result<VoterDistribution> {
        if k == 0 || k > 64 {
            return Err(invalid!("distribution length must be in 1..=64, got {k}"));
        }
        if bits & !BlockSet::full(k).bits() != 0 {
            return Err(invalid!("bits {bits:#x} exceed {k} blocks"));
        }
        Ok(VoterDistribution { bits, k: k as u8 })
    }

    /// Caller guarantees `bits` fits in `k` blocks.
    #[inline]
    pub(crate) fn from_raw(bits: u64, k: usize) -> VoterDistribution {
        debug_assert!(bits & !BlockSet::full(k).bits() == 0);
        VoterDistribution { bits, k: k as u8 }
    }

    pub fn from_blocks(blocks: impl IntoIterator<Item = BlockId>, k: usize) -> Result<VoterDistribution> {
        let set: BlockSet = blocks.into_iter().collect();
        Self::new(set.bits(), k)
    }

    pub fn zeros(k: usize) -> VoterDistribution {
        VoterDistribution::from_raw(0, k)
    }

    pub fn ones(k: usize) -> VoterDistribution {
        VoterDistribution::from_raw(BlockSet::full(k).bits(), k)
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn k(self) -> usize {
        self.k as usize
    }

    #[inline]
    pub fn dots(self) -> BlockSet {
        BlockSet(self.bits)
    }

    /// Number of dot blocks.
    #[inline]
    pub fn num(self) -> u32 {
        self.bits.count_ones()
    }

    #[inline]
    pub fn get(self, b: BlockId) -> bool {
        self.bits >> b & 1 == 1
    }

    pub fn with(self, b: BlockId, value: bool) -> VoterDistribution {
        let bits = if value { self.bits | 1 << b } else { self.bits & !(1 << b) };
        VoterDistribution { bits, k: self.k }
    }

    /// Swaps every block's party.
    pub fn complement(self) -> VoterDistribution {
        VoterDistribution { bits: !self.bits & BlockSet::full(self.k()).bits(), k: self.k }
    }
}

impl fmt::Debug for VoterDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VoterDistribution({:#x}/{})", self.bits, self.k)
    }
}

/// The complete set of legal plans for one graph, sorted by assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanSet {
    k: usize,
    n_districts: usize,
    plans: Vec<DistrictingPlan>,
    /// `n_districts` masks per plan, plan-major.
    masks: Vec<BlockSet>,
    /// Distinct districts over all plans, ascending.
    districts: Vec<BlockSet>,
    /// `masks[i] == districts[district_ids[i]]`.
    district_ids: Vec<u32>,
}

impl PlanSet {
    /// Sorts and deduplicates `plans`. All plans must cover `k` blocks with
    /// the same number of districts.
    pub fn new(k: usize, mut plans: Vec<DistrictingPlan>) -> Result<PlanSet> {
        let n_districts = plans.first().map_or(0, |p| p.n_districts());
        for p in &plans {
            if p.k() != k {
                return Err(invalid!("plan {p} has {} blocks, expected {k}", p.k()));
            }
            if p.n_districts() != n_districts {
                return Err(invalid!("plan {p} has {} districts, expected {n_districts}", p.n_districts()));
            }
        }
        plans.sort_unstable();
        plans.dedup();
        let masks: Vec<BlockSet> = plans.iter().flat_map(|p| p.masks()).collect();
        let mut districts = masks.clone();
        districts.sort_unstable();
        districts.dedup();
        let district_ids = masks
            .iter()
            .map(|d| districts.binary_search(d).expect("district is listed") as u32)
            .collect();
        Ok(PlanSet { k, n_districts, plans, masks, districts, district_ids })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_districts(&self) -> usize {
        self.n_districts
    }

    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }

    pub fn plans(&self) -> &[DistrictingPlan] {
        &self.plans
    }

    /// District masks of every plan, `n_districts` per plan.
    #[inline]
    pub fn masks(&self) -> &[BlockSet] {
        &self.masks
    }

    /// Distinct districts used by any plan, ascending.
    pub fn districts(&self) -> &[BlockSet] {
        &self.districts
    }

    /// Index into [`PlanSet::districts`] of every entry of [`PlanSet::masks`].
    #[inline]
    pub fn district_ids(&self) -> &[u32] {
        &self.district_ids
    }

    pub fn plan_masks(&self, i: usize) -> &[BlockSet] {
        &self.masks[i * self.n_districts..(i + 1) * self.n_districts]
    }

    pub fn contains(&self, plan: &DistrictingPlan) -> bool {
        self.plans.binary_search(plan).is_ok()
    }

    pub fn position(&self, plan: &DistrictingPlan) -> Option<usize> {
        self.plans.binary_search(plan).ok()
    }
}

struct TilingSearch<'g, F> {
    g: &'g DualGraph,
    m: u32,
    check_border: bool,
    districts: Vec<BlockSet>,
    visit: F,
}

impl<F: FnMut(&[BlockSet]) -> ControlFlow<()>> TilingSearch<'_, F> {
    fn place(&mut self, unassigned: BlockSet) -> ControlFlow<()> {
        let Some(root) = unassigned.first() else {
            if self.check_border && !self.districts.iter().all(|&d| outside_reaches_border(self.g, d)) {
                return ControlFlow::Continue(());
            }
            return (self.visit)(&self.districts);
        };
        let root_set = BlockSet::single(root);
        let frontier = self.g.neighbor_mask(root).intersection(unassigned);
        self.grow(unassigned, root_set, frontier, root_set.union(frontier))
    }

    fn grow(&mut self, unassigned: BlockSet, district: BlockSet, untried: BlockSet, seen: BlockSet) -> ControlFlow<()> {
        if district.len() == self.m {
            let rest = unassigned.difference(district);
            if !self.components_divisible(rest) {
                return ControlFlow::Continue(());
            }
            self.districts.push(district);
            let flow = self.place(rest);
            self.districts.pop();
            return flow;
        }
        let mut untried = untried;
        while let Some(w) = untried.first() {
            untried.remove(w);
            let fresh = self.g.neighbor_mask(w).intersection(unassigned).difference(seen);
            let mut child = district;
            child.insert(w);
            self.grow(unassigned, child, untried.union(fresh), seen.union(fresh))?;
        }
        ControlFlow::Continue(())
    }

    fn components_divisible(&self, mut rest: BlockSet) -> bool {
        while let Some(b) = rest.first() {
            let comp = self.g.reach(BlockSet::single(b), rest);
            if !comp.len().is_multiple_of(self.m) {
                return false;
            }
            rest = rest.difference(comp);
        }
        true
    }
}

pub(crate) fn for_each_tiling<F>(g: &DualGraph, n_districts: usize, check_border: bool, visit: F) -> Result<()>
where
    F: FnMut(&[BlockSet]) -> ControlFlow<()>,
{
    if n_districts == 0 || !g.k().is_multiple_of(n_districts) {
        return Err(invalid!("{} blocks cannot be split into {n_districts} equal districts", g.k()));
    }
    let mut search = TilingSearch {
        g,
        m: (g.k() / n_districts) as u32,
        check_border,
        districts: Vec::with_capacity(n_districts),
        visit,
    };
    let _ = search.place(g.all_blocks());
    Ok(())
}

/// Visits every legal partition of `g` into `n_districts` equal districts.
///
/// Districts are passed in order of their lowest block, which is also the
/// normalized label order. Return `ControlFlow::Break` to stop early.
pub fn enumerate_partitions<F>(g: &DualGraph, n_districts: usize, visit: F) -> Result<()>
where
    F: FnMut(&[BlockSet]) -> ControlFlow<()>,
{
    for_each_tiling(g, n_districts, true, visit)
}

/// First legal plan found by the search, if any exists.
pub fn first_partition(g: &DualGraph, n_districts: usize) -> Result<Option<DistrictingPlan>> {
    let mut found = None;
    enumerate_partitions(g, n_districts, |districts| {
        found = Some(districts.to_vec());
        ControlFlow::Break(())
    })?;
    found.map(|d| DistrictingPlan::from_masks(g.k(), &d)).transpose()
}

/// Largest grid side accepted by [`enumerate_plans`].
pub const MAX_PLAN_SIDE: usize = 6;

/// All legal plans of the `n × n` grid into `n` districts of `n` blocks.
pub fn enumerate_plans(n: usize) -> Result<PlanSet> {
    if n == 0 || n > MAX_PLAN_SIDE {
        return Err(Error::Unsupported(alloc::format!(
            "plan enumeration supports 1 <= n <= {MAX_PLAN_SIDE}, got {n}"
        )));
    }
    let g = DualGraph::square(n)?;
    let mut plans = Vec::new();
    enumerate_partitions(&g, n, |districts| {
        let mut assignment = alloc::vec![0u8; n * n];
        for (label, d) in districts.iter().enumerate() {
            for b in d.iter() {
                assignment[b] = label as u8;
            }
        }
        plans.push(DistrictingPlan::new(assignment));
        ControlFlow::Continue(())
    })?;
    PlanSet::new(n * n, plans)
}

/// Stream of bit vectors in increasing numeric order over `[start, end)`,
/// optionally restricted to a fixed popcount.
#[derive(Clone, Debug)]
pub struct Distributions {
    next: Option<u64>,
    end: u64,
    num: Option<u32>,
    k: usize,
}

impl Distributions {
    /// Restricts the stream to `[start, end)`; used to split work into numeric intervals.
    pub fn range(k: usize, num: Option<u32>, start: u64, end: u64) -> Result<Distributions> {
        check_dims(k, num)?;
        let limit = space_end(k);
        let end = end.min(limit);
        let next = match num {
            None => Some(start),
            Some(num) => smallest_with_popcount_at_least(start, num, k),
        }
        .filter(|&v| v < end);
        Ok(Distributions { next, end, num, k })
    }
}

impl Iterator for Distributions {
    type Item = VoterDistribution;

    #[inline]
    fn next(&mut self) -> Option<VoterDistribution> {
        let cur = self.next?;
        let succ = match self.num {
            None => cur.checked_add(1),
            Some(_) => next_same_popcount(cur),
        };
        self.next = succ.filter(|&v| v < self.end);
        Some(VoterDistribution::from_raw(cur, self.k))
    }
}

fn check_dims(k: usize, num: Option<u32>) -> Result<()> {
    if k == 0 || k > 63 {
        return Err(invalid!("distribution streams need 1 <= k <= 63, got {k}"));
    }
    if let Some(num) = num {
        if num as usize > k {
            return Err(invalid!("num {num} exceeds block count {k}"));
        }
    }
    Ok(())
}

/// One past the largest `k`-bit vector.
#[inline]
pub fn space_end(k: usize) -> u64 {
    1u64 << k
}

/// Every voter distribution on `k` blocks (of popcount `num` when given),
/// in increasing numeric order.
pub fn enumerate_distributions(k: usize, num: Option<u32>) -> Result<Distributions> {
    Distributions::range(k, num, 0, u64::MAX)
}

/// Next larger integer with the same popcount (Gosper's hack).
#[inline]
fn next_same_popcount(x: u64) -> Option<u64> {
    if x == 0 {
        return None;
    }
    let c = x & x.wrapping_neg();
    let r = x.checked_add(c)?;
    Some((((r ^ x) >> 2) / c) | r)
}

/// Smallest `y >= a` with `popcount(y) == num` and `y < 2^k`.
fn smallest_with_popcount_at_least(a: u64, num: u32, k: usize) -> Option<u64> {
    let limit = space_end(k);
    if a >= limit {
        return None;
    }
    if a.count_ones() == num {
        return Some(a);
    }
    // Keep a's bits above some zero bit p, set p, and pack the remaining ones
    // at the bottom. Smaller p gives a smaller candidate.
    for p in 0..k {
        if a >> p & 1 == 1 {
            continue;
        }
        let high = if p + 1 >= 64 { 0 } else { a >> (p + 1) << (p + 1) };
        let used = high.count_ones() + 1;
        if used > num {
            continue;
        }
        let fill = num - used;
        if fill as usize > p {
            continue;
        }
        let y = high | 1 << p | ((1u64 << fill) - 1);
        if y < limit {
            return Some(y);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::districting::is_legal;
    use alloc::vec;

    fn binomial(n: u64, r: u64) -> u64 {
        (0..r).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn tiling_counts_small() {
        let counts: Vec<usize> = (1..=4).map(|n| enumerate_plans(n).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 2, 10, 117]);
    }

    #[test]
    fn unsupported_sides() {
        assert!(matches!(enumerate_plans(0), Err(Error::Unsupported(_))));
        assert!(matches!(enumerate_plans(7), Err(Error::Unsupported(_))));
    }

    #[test]
    fn plans_are_legal_sorted_and_unique() {
        for n in 1..=4 {
            let g = DualGraph::square(n).unwrap();
            let set = enumerate_plans(n).unwrap();
            for w in set.plans().windows(2) {
                assert!(w[0] < w[1]);
            }
            for p in set.plans() {
                assert!(is_legal(&g, p));
            }
        }
    }

    #[test]
    fn two_by_two_plans_are_rows_and_columns() {
        let set = enumerate_plans(2).unwrap();
        let strings: Vec<_> = set.plans().iter().map(|p| alloc::format!("{p}")).collect();
        assert_eq!(strings, vec!["0011", "0101"]);
    }

    #[test]
    fn general_graph_partitions() {
        // 2x3 grid into three dominoes: 3 tilings.
        let g = DualGraph::grid(2, 3).unwrap();
        let mut count = 0;
        enumerate_partitions(&g, 3, |_| {
            count += 1;
            ControlFlow::Continue(())
        })
        .unwrap();
        assert_eq!(count, 3);
        assert!(enumerate_partitions(&g, 4, |_| ControlFlow::Continue(())).is_err());
        let first = first_partition(&g, 3).unwrap().unwrap();
        assert!(is_legal(&g, &first));
    }

    #[test]
    fn distribution_counts() {
        assert_eq!(enumerate_distributions(25, Some(3)).unwrap().count() as u64, binomial(25, 3));
        let all: Vec<_> = enumerate_distributions(4, Some(4)).unwrap().map(|d| d.bits()).collect();
        assert_eq!(all, vec![0b1111]);
        assert_eq!(enumerate_distributions(10, None).unwrap().count(), 1024);
        assert_eq!(enumerate_distributions(5, Some(0)).unwrap().map(|d| d.bits()).collect::<Vec<_>>(), vec![0]);
        assert!(enumerate_distributions(4, Some(5)).is_err());
    }

    #[test]
    fn distribution_order_is_increasing_and_exact() {
        for num in 0..=8u32 {
            let got: Vec<u64> = enumerate_distributions(8, Some(num)).unwrap().map(|d| d.bits()).collect();
            let want: Vec<u64> = (0u64..256).filter(|v| v.count_ones() == num).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn ranges_partition_the_stream() {
        for num in [None, Some(0), Some(3), Some(6)] {
            let whole: Vec<u64> = enumerate_distributions(10, num).unwrap().map(|d| d.bits()).collect();
            let mut pieces = Vec::new();
            for lo in (0u64..1024).step_by(37) {
                pieces.extend(Distributions::range(10, num, lo, lo + 37).unwrap().map(|d| d.bits()));
            }
            assert_eq!(whole, pieces);
        }
    }

    #[test]
    fn complement_and_bits() {
        let d = VoterDistribution::from_blocks([0, 3], 4).unwrap();
        assert_eq!(d.complement().bits(), 0b0110);
        assert_eq!(d.num(), 2);
        assert!(VoterDistribution::new(0b10000, 4).is_err());
        assert_eq!(d.with(1, true).bits(), 0b1011);
        assert_eq!(d.with(0, false).bits(), 0b1000);
    }
}
