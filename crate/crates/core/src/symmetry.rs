//! The eight symmetries of the square acting on `n × n` grids.

use alloc::vec::Vec;

use crate::districting::DistrictingPlan;
use crate::enumeration::VoterDistribution;
use crate::error::{invalid, Result};

/// An element of the dihedral group of the square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symmetry {
    Identity,
    Rotate90,
    Rotate180,
    Rotate270,
    /// Mirror left-right.
    FlipColumns,
    /// Mirror top-bottom.
    FlipRows,
    /// Reflect across the main diagonal.
    Transpose,
    /// Reflect across the anti-diagonal.
    AntiTranspose,
}

impl Symmetry {
    pub const ALL: [Symmetry; 8] = [
        Symmetry::Identity,
        Symmetry::Rotate90,
        Symmetry::Rotate180,
        Symmetry::Rotate270,
        Symmetry::FlipColumns,
        Symmetry::FlipRows,
        Symmetry::Transpose,
        Symmetry::AntiTranspose,
    ];

    /// Image of cell `(row, col)` on an `n × n` grid.
    #[inline]
    pub fn map(self, row: usize, col: usize, n: usize) -> (usize, usize) {
        let (r, c, e) = (row, col, n - 1);
        match self {
            Symmetry::Identity => (r, c),
            Symmetry::Rotate90 => (c, e - r),
            Symmetry::Rotate180 => (e - r, e - c),
            Symmetry::Rotate270 => (e - c, r),
            Symmetry::FlipColumns => (r, e - c),
            Symmetry::FlipRows => (e - r, c),
            Symmetry::Transpose => (c, r),
            Symmetry::AntiTranspose => (e - c, e - r),
        }
    }

    /// Block permutation: `perm[b]` is the image of block `b`.
    pub fn permutation(self, n: usize) -> Vec<usize> {
        (0..n * n)
            .map(|b| {
                let (r, c) = self.map(b / n, b % n, n);
                r * n + c
            })
            .collect()
    }

    /// Moves each block's district to the block's image and renormalizes labels.
    pub fn apply_plan(self, plan: &DistrictingPlan, n: usize) -> DistrictingPlan {
        let perm = self.permutation(n);
        let mut out = alloc::vec![0u8; n * n];
        for (b, &label) in plan.assignment().iter().enumerate() {
            out[perm[b]] = label;
        }
        DistrictingPlan::new(out)
    }
}

/// Precomputed bit permutations for all eight symmetries of one grid size.
///
/// Each symmetry is applied row by row through a lookup table indexed by the
/// row's bits, so one image costs `n` table reads.
#[derive(Clone, Debug)]
pub struct SquareSymmetries {
    n: usize,
    /// `tables[(s * n + row) << n | row_bits]`
    tables: Vec<u64>,
}

impl SquareSymmetries {
    pub fn new(n: usize) -> Result<SquareSymmetries> {
        if n == 0 || n > 8 {
            return Err(invalid!("square symmetries need 1 <= n <= 8, got {n}"));
        }
        let width = 1usize << n;
        let mut tables = alloc::vec![0u64; 8 * n * width];
        for (s, sym) in Symmetry::ALL.iter().enumerate() {
            let perm = sym.permutation(n);
            for row in 0..n {
                for bits in 0..width {
                    let mut image = 0u64;
                    for col in 0..n {
                        if bits >> col & 1 == 1 {
                            image |= 1u64 << perm[row * n + col];
                        }
                    }
                    tables[(s * n + row) * width + bits] = image;
                }
            }
        }
        Ok(SquareSymmetries { n, tables })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn apply(&self, sym: usize, bits: u64) -> u64 {
        let n = self.n;
        let width = 1usize << n;
        let row_mask = (width - 1) as u64;
        let base = sym * n * width;
        let mut image = 0u64;
        for row in 0..n {
            let rb = (bits >> (row * n)) & row_mask;
            image |= self.tables[base + row * width + rb as usize];
        }
        image
    }

    /// The eight images of `bits` (with repeats when `bits` has symmetries).
    #[inline]
    pub fn images(&self, bits: u64) -> [u64; 8] {
        core::array::from_fn(|s| self.apply(s, bits))
    }

    /// Numerically smallest image.
    #[inline]
    pub fn canonical(&self, bits: u64) -> u64 {
        let mut best = bits;
        for s in 1..8 {
            best = best.min(self.apply(s, bits));
        }
        best
    }

    /// Size of the orbit of `bits`: 1, 2, 4 or 8.
    pub fn orbit_size(&self, bits: u64) -> u32 {
        let mut images = self.images(bits);
        images.sort_unstable();
        let mut distinct = 1;
        for w in images.windows(2) {
            if w[0] != w[1] {
                distinct += 1;
            }
        }
        distinct
    }
}

/// Smallest bit vector in the orbit of `dist` under the square's symmetries.
pub fn canonicalize(dist: VoterDistribution, n: usize) -> Result<VoterDistribution> {
    if n * n != dist.k() {
        return Err(invalid!("distribution of {} blocks is not an {n}x{n} grid", dist.k()));
    }
    let syms = SquareSymmetries::new(n)?;
    VoterDistribution::new(syms.canonical(dist.bits()), dist.k())
}
