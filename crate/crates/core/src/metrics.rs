//! Clustering scores and representation statistics.
//!
//! Seat counts are held in half-seat units so tied districts (worth half a
//! seat) keep histograms and sums exact.

use alloc::vec::Vec;
use core::fmt;

use crate::districting::DistrictingPlan;
use crate::enumeration::PlanSet;
pub use crate::enumeration::VoterDistribution;
use crate::error::{invalid, Error, Result};
use crate::graph::{BlockSet, DualGraph};

/// A non-negative fraction in lowest terms.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ratio {
    num: u64,
    den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Result<Ratio> {
        if den == 0 {
            return Err(invalid!("zero denominator"));
        }
        let g = gcd(num, den);
        Ok(Ratio { num: num / g, den: den / g })
    }

    pub fn numer(self) -> u64 {
        self.num
    }

    pub fn denom(self) -> u64 {
        self.den
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Debug for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// A seat count in half-seat units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Seats(pub u32);

impl Seats {
    pub fn halves(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

/// Number of dot blocks.
#[inline]
pub fn num_of(dist: VoterDistribution) -> u32 {
    dist.num()
}

fn check_len(g: &DualGraph, dist: VoterDistribution) -> Result<()> {
    if g.k() != dist.k() {
        return Err(invalid!("distribution has {} blocks, graph has {}", dist.k(), g.k()));
    }
    Ok(())
}

/// Share of undirected edges whose endpoints vote alike.
pub fn clus(g: &DualGraph, dist: VoterDistribution) -> Result<Ratio> {
    check_len(g, dist)?;
    if g.edge_count() == 0 {
        return Err(Error::UndefinedMetric("clustering of a graph without edges"));
    }
    let same = g.edges().iter().filter(|&&(a, b)| dist.get(a) == dist.get(b)).count();
    Ratio::new(same as u64, g.edge_count() as u64)
}

/// Share of directed edges leaving a dot block that land on a dot block.
/// Dot-dot edges therefore count twice.
pub fn clusp(g: &DualGraph, dist: VoterDistribution) -> Result<Ratio> {
    check_len(g, dist)?;
    let dots = dist.dots();
    let (mut hit, mut total) = (0u64, 0u64);
    for b in dots {
        let nb = g.neighbor_mask(b);
        hit += nb.intersection(dots).len() as u64;
        total += nb.len() as u64;
    }
    if total == 0 {
        return Err(Error::UndefinedMetric("partisan clustering with no edges leaving a dot block"));
    }
    Ratio::new(hit, total)
}

/// Outcome of one district's plurality election: 0, ½ or 1 seat.
#[inline]
pub fn district_rep(dist: VoterDistribution, district: BlockSet) -> Result<Seats> {
    let m = district.len();
    if m == 0 {
        return Err(invalid!("empty district"));
    }
    Ok(Seats(district_halves(dist.bits(), district.bits(), m)))
}

#[inline(always)]
fn district_halves(dots: u64, district: u64, m: u32) -> u32 {
    let twice = 2 * (dots & district).count_ones();
    2 * (twice > m) as u32 + (twice == m) as u32
}

/// Seats won over every district of `plan`.
pub fn total_rep(dist: VoterDistribution, plan: &DistrictingPlan) -> Result<Seats> {
    if plan.k() != dist.k() {
        return Err(invalid!("distribution has {} blocks, plan has {}", dist.k(), plan.k()));
    }
    plan.masks().into_iter().try_fold(Seats(0), |acc, d| Ok(Seats(acc.0 + district_rep(dist, d)?.0)))
}

/// Half-seats won under one plan given as district masks of size `m`.
#[inline(always)]
pub fn plan_halves(dots: u64, districts: &[BlockSet], m: u32) -> u32 {
    districts.iter().map(|d| district_halves(dots, d.bits(), m)).sum()
}

/// The distribution of seats over a uniformly drawn plan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepStats {
    /// `histogram[h]` counts plans winning `h / 2` seats, `h` in `0..=2 * n_districts`.
    histogram: Vec<u64>,
    total_plans: u64,
    half_sum: u64,
    half_sq_sum: u64,
}

impl RepStats {
    /// Builds statistics from a half-seat histogram.
    pub fn from_histogram(histogram: Vec<u64>) -> Result<RepStats> {
        let total_plans: u64 = histogram.iter().sum();
        if total_plans == 0 {
            return Err(invalid!("empty seat histogram"));
        }
        let half_sum = histogram.iter().enumerate().map(|(h, &c)| h as u64 * c).sum();
        let half_sq_sum = histogram.iter().enumerate().map(|(h, &c)| (h * h) as u64 * c).sum();
        Ok(RepStats { histogram, total_plans, half_sum, half_sq_sum })
    }

    pub fn histogram(&self) -> &[u64] {
        &self.histogram
    }

    pub fn total_plans(&self) -> u64 {
        self.total_plans
    }

    /// Sum of half-seats over all plans; `expectation = half_sum / (2 * total_plans)`.
    pub fn half_sum(&self) -> u64 {
        self.half_sum
    }

    pub fn expectation(&self) -> f64 {
        self.half_sum as f64 / (2 * self.total_plans) as f64
    }

    /// Population variance over plans.
    pub fn variance(&self) -> f64 {
        self.centered_sq() as f64 / (4 * self.total_plans as u128 * self.total_plans as u128) as f64
    }

    /// Unbiased sample variance over plans (0 for a single plan).
    pub fn sample_variance(&self) -> f64 {
        if self.total_plans < 2 {
            return 0.0;
        }
        let t = self.total_plans as u128;
        self.centered_sq() as f64 / (4 * t * (t - 1)) as f64
    }

    /// `total * Σh² - (Σh)²`, exact.
    fn centered_sq(&self) -> u128 {
        let t = self.total_plans as u128;
        t * self.half_sq_sum as u128 - (self.half_sum as u128) * (self.half_sum as u128)
    }

    pub fn min(&self) -> Seats {
        Seats(self.histogram.iter().position(|&c| c > 0).unwrap_or(0) as u32)
    }

    pub fn max(&self) -> Seats {
        Seats(self.histogram.iter().rposition(|&c| c > 0).unwrap_or(0) as u32)
    }
}

/// Seat statistics of `dist` over every plan in `plans`, uniformly weighted.
pub fn rep_stats(dist: VoterDistribution, plans: &PlanSet) -> Result<RepStats> {
    if plans.is_empty() {
        return Err(invalid!("empty plan set"));
    }
    if dist.k() != plans.k() {
        return Err(invalid!("distribution has {} blocks, plans have {}", dist.k(), plans.k()));
    }
    let nd = plans.n_districts();
    let m = (plans.k() / nd) as u32;
    let dots = dist.bits();
    // Plans share districts, so score each distinct district once.
    let halves: Vec<u8> = plans.districts().iter().map(|d| district_halves(dots, d.bits(), m) as u8).collect();
    let mut histogram = alloc::vec![0u64; 2 * nd + 1];
    for ids in plans.district_ids().chunks_exact(nd) {
        let h: u32 = ids.iter().map(|&i| halves[i as usize] as u32).sum();
        histogram[h as usize] += 1;
    }
    RepStats::from_histogram(histogram)
}
