//! Dual graphs: blocks, rook adjacency on grids, and border flags.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Result};

/// Largest block count a [`DualGraph`] can hold; block sets are `u64` masks.
pub const MAX_BLOCKS: usize = 64;

/// Dense block index. On an `rows × cols` grid, `row * cols + col`.
pub type BlockId = usize;

/// A set of blocks as a bitmask (bit `i` set iff block `i` is a member).
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockSet(pub u64);

impl BlockSet {
    pub const EMPTY: BlockSet = BlockSet(0);

    /// The set `{0, 1, ..., k-1}`.
    #[inline]
    pub fn full(k: usize) -> BlockSet {
        if k >= 64 {
            BlockSet(u64::MAX)
        } else {
            BlockSet((1u64 << k) - 1)
        }
    }

    #[inline]
    pub fn single(b: BlockId) -> BlockSet {
        BlockSet(1u64 << b)
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn contains(self, b: BlockId) -> bool {
        b < 64 && self.0 >> b & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, b: BlockId) {
        self.0 |= 1u64 << b;
    }

    #[inline]
    pub fn remove(&mut self, b: BlockId) {
        self.0 &= !(1u64 << b);
    }

    /// Lowest member, if any.
    #[inline]
    pub fn first(self) -> Option<BlockId> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as BlockId)
    }

    #[inline]
    pub fn union(self, other: BlockSet) -> BlockSet {
        BlockSet(self.0 | other.0)
    }

    #[inline]
    pub fn intersection(self, other: BlockSet) -> BlockSet {
        BlockSet(self.0 & other.0)
    }

    #[inline]
    pub fn difference(self, other: BlockSet) -> BlockSet {
        BlockSet(self.0 & !other.0)
    }

    /// Members in increasing order.
    pub fn iter(self) -> Blocks {
        Blocks(self.0)
    }
}

impl fmt::Debug for BlockSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<BlockId> for BlockSet {
    fn from_iter<I: IntoIterator<Item = BlockId>>(iter: I) -> Self {
        let mut s = BlockSet::EMPTY;
        for b in iter {
            s.insert(b);
        }
        s
    }
}

impl IntoIterator for BlockSet {
    type Item = BlockId;
    type IntoIter = Blocks;
    fn into_iter(self) -> Blocks {
        self.iter()
    }
}

/// Iterator over the members of a [`BlockSet`].
#[derive(Clone, Debug)]
pub struct Blocks(u64);

impl Iterator for Blocks {
    type Item = BlockId;

    #[inline]
    fn next(&mut self) -> Option<BlockId> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros() as BlockId;
        self.0 &= self.0 - 1;
        Some(b)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Blocks {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct GridShape {
    rows: usize,
    cols: usize,
    /// Blocks in column 0.
    first_col: u64,
    /// Blocks in column `cols - 1`.
    last_col: u64,
}

/// A planar, undirected, connected graph of equal-population blocks.
///
/// Immutable once built. Blocks touching only at a corner share no edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualGraph {
    k: usize,
    adjacency: Vec<BlockSet>,
    edges: Vec<(BlockId, BlockId)>,
    border: BlockSet,
    grid: Option<GridShape>,
}

impl DualGraph {
    /// The `rows × cols` square grid with rook (4-neighbour) adjacency.
    pub fn grid(rows: usize, cols: usize) -> Result<DualGraph> {
        if rows == 0 || cols == 0 {
            return Err(invalid!("grid dimensions must be positive, got {rows}x{cols}"));
        }
        let k = rows
            .checked_mul(cols)
            .filter(|&k| k <= MAX_BLOCKS)
            .ok_or_else(|| invalid!("grid {rows}x{cols} exceeds {MAX_BLOCKS} blocks"))?;
        let mut adjacency = alloc::vec![BlockSet::EMPTY; k];
        let mut edges = Vec::with_capacity(rows * (cols - 1) + cols * (rows - 1));
        let mut border = BlockSet::EMPTY;
        for r in 0..rows {
            for c in 0..cols {
                let b = r * cols + c;
                if r == 0 || c == 0 || r + 1 == rows || c + 1 == cols {
                    border.insert(b);
                }
                if c + 1 < cols {
                    edges.push((b, b + 1));
                }
                if r + 1 < rows {
                    edges.push((b, b + cols));
                }
            }
        }
        edges.sort_unstable();
        for &(a, b) in &edges {
            adjacency[a].insert(b);
            adjacency[b].insert(a);
        }
        let first_col = (0..rows).map(|r| r * cols).collect::<BlockSet>().0;
        let last_col = (0..rows).map(|r| r * cols + cols - 1).collect::<BlockSet>().0;
        Ok(DualGraph {
            k,
            adjacency,
            edges,
            border,
            grid: Some(GridShape { rows, cols, first_col, last_col }),
        })
    }

    /// The `n × n` square grid.
    pub fn square(n: usize) -> Result<DualGraph> {
        Self::grid(n, n)
    }

    /// A general dual graph from an explicit edge list and border list.
    ///
    /// Rejects self-loops, duplicate edges, out-of-range indices and
    /// disconnected graphs.
    pub fn from_edges(k: usize, edges: &[(BlockId, BlockId)], border: &[BlockId]) -> Result<DualGraph> {
        if k == 0 || k > MAX_BLOCKS {
            return Err(invalid!("block count must be in 1..={MAX_BLOCKS}, got {k}"));
        }
        let mut adjacency = alloc::vec![BlockSet::EMPTY; k];
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= k || b >= k {
                return Err(invalid!("edge ({a}, {b}) references a block outside 0..{k}"));
            }
            if a == b {
                return Err(invalid!("self-loop at block {a}"));
            }
            if adjacency[a].contains(b) {
                return Err(invalid!("duplicate edge ({a}, {b})"));
            }
            adjacency[a].insert(b);
            adjacency[b].insert(a);
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        let mut border_set = BlockSet::EMPTY;
        for &b in border {
            if b >= k {
                return Err(invalid!("border block {b} outside 0..{k}"));
            }
            border_set.insert(b);
        }
        let g = DualGraph { k, adjacency, edges: normalized, border: border_set, grid: None };
        if !g.is_connected() {
            return Err(invalid!("graph is not connected"));
        }
        Ok(g)
    }

    /// Number of blocks.
    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    /// Undirected edges as `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> &[(BlockId, BlockId)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// `(rows, cols)` when built by [`DualGraph::grid`].
    pub fn grid_dims(&self) -> Option<(usize, usize)> {
        self.grid.map(|s| (s.rows, s.cols))
    }

    #[inline]
    pub fn all_blocks(&self) -> BlockSet {
        BlockSet::full(self.k)
    }

    pub fn neighbors(&self, b: BlockId) -> Result<BlockSet> {
        self.adjacency
            .get(b)
            .copied()
            .ok_or_else(|| invalid!("block {b} outside 0..{}", self.k))
    }

    /// Neighbour mask without a range check.
    #[inline]
    pub fn neighbor_mask(&self, b: BlockId) -> BlockSet {
        self.adjacency[b]
    }

    #[inline]
    pub fn degree(&self, b: BlockId) -> u32 {
        self.adjacency[b].len()
    }

    pub fn border(&self) -> BlockSet {
        self.border
    }

    pub fn is_border(&self, b: BlockId) -> bool {
        self.border.contains(b)
    }

    /// Every block adjacent to some member of `set` (members included only
    /// if adjacent to another member).
    #[inline]
    pub fn expand(&self, set: BlockSet) -> BlockSet {
        match self.grid {
            Some(s) => {
                let x = set.0;
                let full = BlockSet::full(self.k).0;
                let horiz = ((x & !s.last_col) << 1) | ((x & !s.first_col) >> 1);
                let vert = (x << s.cols) | (x >> s.cols);
                BlockSet((horiz | vert) & full)
            }
            None => set.iter().fold(BlockSet::EMPTY, |acc, b| acc.union(self.adjacency[b])),
        }
    }

    /// Blocks of `within` reachable from `seed` through `within`.
    #[inline]
    pub fn reach(&self, seed: BlockSet, within: BlockSet) -> BlockSet {
        let mut reached = seed.intersection(within);
        loop {
            let next = self.expand(reached).intersection(within).union(reached);
            if next == reached {
                return reached;
            }
            reached = next;
        }
    }

    /// True iff the subgraph induced by `set` is connected (empty sets are not).
    #[inline]
    pub fn induces_connected(&self, set: BlockSet) -> bool {
        match set.first() {
            None => false,
            Some(b) => self.reach(BlockSet::single(b), set) == set,
        }
    }

    pub fn is_connected(&self) -> bool {
        self.induces_connected(self.all_blocks())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn grid_counts() {
        let g = DualGraph::grid(5, 5).unwrap();
        assert_eq!(g.k(), 25);
        assert_eq!(g.edge_count(), 40);

        let g = DualGraph::grid(1, 1).unwrap();
        assert_eq!((g.k(), g.edge_count()), (1, 0));
        assert!(g.is_border(0));

        let g = DualGraph::grid(2, 2).unwrap();
        assert_eq!((g.k(), g.edge_count()), (4, 4));
        assert_eq!(g.border(), g.all_blocks());

        let g = DualGraph::grid(3, 7).unwrap();
        assert_eq!(g.edge_count(), 3 * 6 + 7 * 2);
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(matches!(DualGraph::grid(0, 3), Err(crate::Error::InvalidArgument(_))));
        assert!(DualGraph::grid(9, 9).is_err());
    }

    #[test]
    fn neighbors_on_grid() {
        let g = DualGraph::square(5).unwrap();
        assert_eq!(g.neighbors(0).unwrap(), [1, 5].into_iter().collect());
        assert_eq!(g.neighbors(12).unwrap().len(), 4);
        assert!(g.neighbors(25).is_err());
        assert!(DualGraph::square(1).unwrap().neighbors(0).unwrap().is_empty());
    }

    #[test]
    fn border_flags() {
        let g = DualGraph::square(5).unwrap();
        let interior: BlockSet = [6, 7, 8, 11, 12, 13, 16, 17, 18].into_iter().collect();
        assert_eq!(g.border(), g.all_blocks().difference(interior));
    }

    #[test]
    fn degrees_and_symmetry() {
        for n in 1..=8 {
            let g = DualGraph::square(n).unwrap();
            let mut sum = 0;
            for b in 0..g.k() {
                sum += g.degree(b);
                if n > 1 {
                    assert!((2..=4).contains(&g.degree(b)));
                }
                for a in g.neighbor_mask(b) {
                    assert!(g.neighbor_mask(a).contains(b));
                }
            }
            assert_eq!(sum as usize, 2 * g.edge_count());
            assert!(g.is_connected());
        }
    }

    #[test]
    fn grid_expand_matches_adjacency() {
        let g = DualGraph::grid(4, 6).unwrap();
        for b in 0..g.k() {
            assert_eq!(g.expand(BlockSet::single(b)), g.neighbor_mask(b));
        }
    }

    #[test]
    fn general_graph_validation() {
        assert!(DualGraph::from_edges(3, &[(0, 1), (1, 2)], &[0, 2]).is_ok());
        assert!(DualGraph::from_edges(3, &[(0, 0), (1, 2)], &[]).is_err());
        assert!(DualGraph::from_edges(3, &[(0, 1), (1, 0), (1, 2)], &[]).is_err());
        assert!(DualGraph::from_edges(3, &[(0, 1)], &[]).is_err());
        assert!(DualGraph::from_edges(2, &[(0, 2)], &[]).is_err());
        let g = DualGraph::from_edges(3, &[(2, 1), (1, 0)], &[1]).unwrap();
        assert_eq!(g.edges(), &vec![(0, 1), (1, 2)][..]);
    }
}
