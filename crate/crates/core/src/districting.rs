//! Districting plans and their legality.
//!
//! A plan is legal when every district has the same number of blocks, each
//! district is connected, and removing any one district leaves every other
//! block connected to the border without passing through it.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Result};
use crate::graph::{BlockSet, DualGraph};

/// Block-to-district assignment with labels normalized to first-appearance
/// order, so two plans compare equal iff they are the same set partition.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DistrictingPlan {
    assignment: Vec<u8>,
    n_districts: usize,
}

impl DistrictingPlan {
    /// Builds a plan from arbitrary labels, relabelling in first-appearance order.
    pub fn new(mut assignment: Vec<u8>) -> DistrictingPlan {
        let n_districts = normalize_labels(&mut assignment);
        DistrictingPlan { assignment, n_districts }
    }

    /// Builds a plan from one block set per district. The sets must be
    /// disjoint and cover `0..k`.
    pub fn from_masks(k: usize, districts: &[BlockSet]) -> Result<DistrictingPlan> {
        let mut assignment = alloc::vec![u8::MAX; k];
        for (label, d) in districts.iter().enumerate() {
            for b in d.iter() {
                let slot = assignment
                    .get_mut(b)
                    .ok_or_else(|| invalid!("district {label} contains block {b} outside 0..{k}"))?;
                if *slot != u8::MAX {
                    return Err(invalid!("block {b} assigned to two districts"));
                }
                *slot = label as u8;
            }
        }
        if let Some(b) = assignment.iter().position(|&l| l == u8::MAX) {
            return Err(invalid!("block {b} is not assigned to any district"));
        }
        Ok(DistrictingPlan::new(assignment))
    }

    pub fn assignment(&self) -> &[u8] {
        &self.assignment
    }

    pub fn k(&self) -> usize {
        self.assignment.len()
    }

    pub fn n_districts(&self) -> usize {
        self.n_districts
    }

    /// Common district size, or `None` when district sizes differ.
    pub fn district_size(&self) -> Option<usize> {
        let masks = self.masks();
        let m = masks.first()?.len();
        masks.iter().all(|d| d.len() == m).then_some(m as usize)
    }

    /// One block set per district, indexed by label.
    pub fn masks(&self) -> Vec<BlockSet> {
        let mut masks = alloc::vec![BlockSet::EMPTY; self.n_districts];
        for (b, &label) in self.assignment.iter().enumerate() {
            masks[label as usize].insert(b);
        }
        masks
    }
}

impl fmt::Debug for DistrictingPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DistrictingPlan({self})")
    }
}

/// District labels as digits, block 0 first. Labels above 9 use `a`..`z`.
impl fmt::Display for DistrictingPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.assignment {
            let c = core::char::from_digit(l as u32, 36).unwrap_or('?');
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Relabels in first-appearance order; returns the number of distinct labels.
pub fn normalize_labels(assignment: &mut [u8]) -> usize {
    let mut map = [u8::MAX; 256];
    let mut next = 0u8;
    for l in assignment.iter_mut() {
        let slot = &mut map[*l as usize];
        if *slot == u8::MAX {
            *slot = next;
            next += 1;
        }
        *l = *slot;
    }
    next as usize
}

/// True iff `blocks` induces a connected subgraph of `g`.
pub fn is_contiguous(g: &DualGraph, blocks: BlockSet) -> Result<bool> {
    if blocks.is_empty() {
        return Err(invalid!("contiguity of an empty block set"));
    }
    if !blocks.difference(g.all_blocks()).is_empty() {
        return Err(invalid!("block set references blocks outside 0..{}", g.k()));
    }
    Ok(g.induces_connected(blocks))
}

/// Second contiguity clause: every block outside `district` reaches a border
/// block without entering `district`.
#[inline]
pub fn outside_reaches_border(g: &DualGraph, district: BlockSet) -> bool {
    let rest = g.all_blocks().difference(district);
    g.reach(g.border().intersection(rest), rest) == rest
}

/// Legality of one district of size `m`: population, connectivity, border access.
#[inline]
pub fn district_is_legal(g: &DualGraph, district: BlockSet, m: u32) -> bool {
    district.len() == m && g.induces_connected(district) && outside_reaches_border(g, district)
}

/// Full legality check. Malformed plans (wrong length) are simply illegal.
pub fn is_legal(g: &DualGraph, plan: &DistrictingPlan) -> bool {
    if plan.k() != g.k() || plan.n_districts() == 0 || !g.k().is_multiple_of(plan.n_districts()) {
        return false;
    }
    let m = (g.k() / plan.n_districts()) as u32;
    plan.masks().into_iter().all(|d| district_is_legal(g, d, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn contiguity_examples() {
        let g = DualGraph::square(5).unwrap();
        let row: BlockSet = (0..5).collect();
        assert!(is_contiguous(&g, row).unwrap());
        assert!(!is_contiguous(&g, [0, 6].into_iter().collect()).unwrap());
        for b in 0..25 {
            assert!(is_contiguous(&g, BlockSet::single(b)).unwrap());
        }
        assert!(is_contiguous(&g, BlockSet::EMPTY).is_err());
        assert!(is_contiguous(&g, BlockSet::single(30)).is_err());
    }

    #[test]
    fn two_by_two_plans() {
        let g = DualGraph::square(2).unwrap();
        assert!(is_legal(&g, &DistrictingPlan::new(vec![0, 1, 0, 1])));
        assert!(is_legal(&g, &DistrictingPlan::new(vec![0, 0, 1, 1])));
        assert!(!is_legal(&g, &DistrictingPlan::new(vec![0, 1, 1, 0])));
        assert!(!is_legal(&g, &DistrictingPlan::new(vec![0, 0, 0, 1])));
        assert!(!is_legal(&g, &DistrictingPlan::new(vec![0, 0, 1])));
    }

    #[test]
    fn labels_normalize() {
        let p = DistrictingPlan::new(vec![3, 3, 1, 1, 7]);
        assert_eq!(p.assignment(), &[0, 0, 1, 1, 2]);
        assert_eq!(p.n_districts(), 3);
        assert_eq!(p.district_size(), None);
        let mut again = p.assignment().to_vec();
        normalize_labels(&mut again);
        assert_eq!(again, p.assignment());
        assert_eq!(p, DistrictingPlan::new(vec![9, 9, 0, 0, 4]));
    }

    #[test]
    fn enclosed_block_violates_border_clause() {
        // The ring around the centre of a 3x3 grid encloses it.
        let g = DualGraph::square(3).unwrap();
        let ring = g.all_blocks().difference(BlockSet::single(4));
        assert!(!outside_reaches_border(&g, ring));
        assert!(outside_reaches_border(&g, (0..3).collect()));
    }

    #[test]
    fn border_clause_rejects_enclosed_district() {
        // Interior triangle {0,1,2} wrapped by a border triangle {3,4,5}.
        let g = DualGraph::from_edges(
            6,
            &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 5)],
            &[3, 4, 5],
        )
        .unwrap();
        let plan = DistrictingPlan::new(vec![0, 0, 0, 1, 1, 1]);
        for d in plan.masks() {
            assert!(g.induces_connected(d));
        }
        assert!(!is_legal(&g, &plan));
        assert!(is_legal(&g, &DistrictingPlan::new(vec![0, 1, 1, 0, 1, 0])));
    }

    #[test]
    fn from_masks_validation() {
        assert!(DistrictingPlan::from_masks(3, &[BlockSet(0b011), BlockSet(0b010)]).is_err());
        assert!(DistrictingPlan::from_masks(3, &[BlockSet(0b011)]).is_err());
        let p = DistrictingPlan::from_masks(3, &[BlockSet(0b100), BlockSet(0b011)]).unwrap();
        assert_eq!(p.assignment(), &[0, 0, 1]);
        assert_eq!(alloc::format!("{p}"), "001");
    }
}
