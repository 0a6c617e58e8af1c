//! Metaheuristics searching for voter distributions of fixed size that
//! maximize expected representation.
//!
//! All searches share one bookkeeping rule: every distribution is scored at
//! most once, and the budget `k_max` counts scores, not loop iterations.
//! Because a search can keep revisiting scored distributions (a small state
//! space, or a proposal that never changes anything), a run also ends after
//! `stall_limit` consecutive revisits.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::enumeration::VoterDistribution;
use crate::error::{invalid, Error, Result};
use crate::evaluator::Evaluator;
use crate::graph::{BlockId, DualGraph};
use crate::rng;

/// Hyperparameters shared by the searches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    /// Happiness threshold of the cellular automaton.
    pub theta: f64,
    /// Initial temperature.
    pub t0: f64,
    /// Cooling factor applied to the temperature.
    pub alpha: f64,
    /// Probability of jumping to a fresh random state after a rejection.
    pub theta_r: f64,
    /// Blocks shuffled per random step.
    pub n_swap: usize,
    /// Evaluation budget.
    pub k_max: usize,
    pub seed: u64,
    /// Cool after every iteration instead of only after acceptances.
    pub cool_every_step: bool,
    /// Consecutive revisits of scored states tolerated before giving up.
    pub stall_limit: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            theta: 0.4,
            t0: 1.0,
            alpha: 0.95,
            theta_r: 0.05,
            n_swap: 4,
            k_max: 1000,
            seed: 0,
            cool_every_step: false,
            stall_limit: 10_000,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.theta) {
            return Err(invalid!("theta must lie in [0, 1], got {}", self.theta));
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(invalid!("t0 must be positive and finite, got {}", self.t0));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !unit.contains(&self.theta_r) {
            return Err(invalid!("theta_r must lie in [0, 1], got {}", self.theta_r));
        }
        if self.n_swap < 2 {
            return Err(invalid!("n_swap must be at least 2, got {}", self.n_swap));
        }
        if self.k_max == 0 {
            return Err(invalid!("k_max must be at least 1"));
        }
        Ok(())
    }
}

/// Outcome of one search.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub best_distribution: VoterDistribution,
    pub best_score: f64,
    /// Running maximum after each evaluation.
    pub best_so_far: Vec<f64>,
}

impl TrialResult {
    pub fn evaluations(&self) -> usize {
        self.best_so_far.len()
    }

    /// Best score within the first `k_max` evaluations.
    pub fn best_within(&self, k_max: usize) -> f64 {
        let i = k_max.min(self.best_so_far.len()).max(1) - 1;
        self.best_so_far[i]
    }
}

/// Memoized score record with an evaluation budget.
struct Trials<'e, 'a> {
    evaluator: &'e Evaluator<'a>,
    k_max: usize,
    stall_limit: usize,
    stall: usize,
    scores: BTreeMap<u64, f64>,
    best: Option<(VoterDistribution, f64)>,
    best_so_far: Vec<f64>,
}

impl<'e, 'a> Trials<'e, 'a> {
    fn new(evaluator: &'e Evaluator<'a>, k_max: usize, stall_limit: usize) -> Self {
        Trials {
            evaluator,
            k_max,
            stall_limit,
            stall: 0,
            scores: BTreeMap::new(),
            best: None,
            best_so_far: Vec::with_capacity(k_max),
        }
    }

    fn exhausted(&self) -> bool {
        self.best_so_far.len() >= self.k_max || self.stall > self.stall_limit
    }

    /// Score of `d`, or `None` once the budget or the stall limit is spent.
    fn score(&mut self, d: VoterDistribution) -> Result<Option<f64>> {
        if let Some(&s) = self.scores.get(&d.bits()) {
            self.stall += 1;
            return Ok((self.stall <= self.stall_limit).then_some(s));
        }
        if self.best_so_far.len() >= self.k_max {
            return Ok(None);
        }
        let s = self.evaluator.eval(d)?;
        self.scores.insert(d.bits(), s);
        self.stall = 0;
        // Strict improvement only: the earliest state wins ties.
        if self.best.is_none_or(|(_, b)| s > b) {
            self.best = Some((d, s));
        }
        self.best_so_far.push(self.best.map_or(s, |(_, b)| b));
        Ok(Some(s))
    }

    fn finish(self) -> Result<TrialResult> {
        let (best_distribution, best_score) =
            self.best.ok_or_else(|| Error::InvalidArgument("search finished without evaluating".into()))?;
        Ok(TrialResult { best_distribution, best_score, best_so_far: self.best_so_far })
    }
}

/// Uniformly random distribution on `k` blocks with exactly `num` dots.
pub fn random_distribution<R: Rng + ?Sized>(k: usize, num: usize, rng: &mut R) -> VoterDistribution {
    let mut blocks: Vec<BlockId> = (0..k).collect();
    let (chosen, _) = blocks.partial_shuffle(rng, num);
    let bits = chosen.iter().fold(0u64, |acc, &b| acc | 1 << b);
    VoterDistribution::from_raw(bits, k)
}

fn check_num(g: &DualGraph, e: &Evaluator<'_>, num: usize) -> Result<()> {
    if g.k() != e.k() {
        return Err(invalid!("graph has {} blocks, evaluator expects {}", g.k(), e.k()));
    }
    if num > g.k() {
        return Err(invalid!("num {num} exceeds block count {}", g.k()));
    }
    Ok(())
}

/// One cellular-automaton move: the values of all unhappy blocks (share of
/// like neighbours below `theta`), taken in block order, are randomly
/// permuted and written back to the same blocks.
pub fn evolve<R: Rng + ?Sized>(g: &DualGraph, dist: VoterDistribution, theta: f64, rng: &mut R) -> VoterDistribution {
    let dots = dist.dots();
    let blanks = g.all_blocks().difference(dots);
    let mut unhappy: Vec<BlockId> = Vec::new();
    for b in 0..g.k() {
        let nb = g.neighbor_mask(b);
        let total = nb.len();
        if total == 0 {
            continue;
        }
        let like = if dist.get(b) { dots } else { blanks };
        let same = nb.intersection(like).len();
        if (same as f64) / (total as f64) < theta {
            unhappy.push(b);
        }
    }
    permute_values(dist, &unhappy, rng)
}

fn permute_values<R: Rng + ?Sized>(dist: VoterDistribution, blocks: &[BlockId], rng: &mut R) -> VoterDistribution {
    let mut values: Vec<bool> = blocks.iter().map(|&b| dist.get(b)).collect();
    values.shuffle(rng);
    blocks.iter().zip(values).fold(dist, |d, (&b, v)| d.with(b, v))
}

/// Picks `n_swap` distinct blocks uniformly and permutes their values.
pub fn step_random<R: Rng + ?Sized>(dist: VoterDistribution, n_swap: usize, rng: &mut R) -> Result<VoterDistribution> {
    let k = dist.k();
    if n_swap < 2 || n_swap > k {
        return Err(invalid!("n_swap must lie in [2, {k}], got {n_swap}"));
    }
    let mut blocks: Vec<BlockId> = (0..k).collect();
    let (chosen, _) = blocks.partial_shuffle(rng, n_swap);
    Ok(permute_values(dist, chosen, rng))
}

/// Acceptance probability `exp(delta / t)`; values above 1 mean certain acceptance.
pub fn prob_accept(delta_score: f64, t: f64) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(invalid!("temperature must be positive, got {t}"));
    }
    Ok(libm::exp(delta_score / t))
}

/// Random-restart iterated local search.
///
/// From each random start the automaton is applied until a move leaves the
/// distribution unchanged, then the search restarts.
pub fn rrils(e: &Evaluator<'_>, g: &DualGraph, num: usize, cfg: &OptimizerConfig) -> Result<TrialResult> {
    cfg.validate()?;
    check_num(g, e, num)?;
    let mut rng = rng::seeded(cfg.seed);
    let mut trials = Trials::new(e, cfg.k_max, cfg.stall_limit);
    'restart: while !trials.exhausted() {
        let mut d = random_distribution(g.k(), num, &mut rng);
        loop {
            if trials.score(d)?.is_none() {
                break 'restart;
            }
            let next = evolve(g, d, cfg.theta, &mut rng);
            if next == d {
                break;
            }
            d = next;
        }
    }
    trials.finish()
}

fn anneal<P>(e: &Evaluator<'_>, g: &DualGraph, num: usize, cfg: &OptimizerConfig, theta_r: f64, mut propose: P) -> Result<TrialResult>
where
    P: FnMut(VoterDistribution, &mut rng::Rng) -> Result<VoterDistribution>,
{
    cfg.validate()?;
    check_num(g, e, num)?;
    let mut rng = rng::seeded(cfg.seed);
    let mut trials = Trials::new(e, cfg.k_max, cfg.stall_limit);
    let mut t = cfg.t0;
    let mut d = random_distribution(g.k(), num, &mut rng);
    let Some(mut score) = trials.score(d)? else {
        return trials.finish();
    };
    while !trials.exhausted() {
        let proposal = propose(d, &mut rng)?;
        let Some(proposal_score) = trials.score(proposal)? else {
            break;
        };
        // A proposal equal to the current state is not a move: treat it as
        // rejected so the restart branch can fire at automaton fixpoints.
        if proposal != d && prob_accept(proposal_score - score, t)? > rng.random::<f64>() {
            d = proposal;
            score = proposal_score;
            if !cfg.cool_every_step {
                t = (t * cfg.alpha).max(f64::MIN_POSITIVE);
            }
        } else if theta_r > rng.random::<f64>() {
            d = random_distribution(g.k(), num, &mut rng);
            match trials.score(d)? {
                Some(s) => score = s,
                None => break,
            }
        }
        if cfg.cool_every_step {
            t = (t * cfg.alpha).max(f64::MIN_POSITIVE);
        }
    }
    trials.finish()
}

/// Simulated annealing with automaton moves as proposals.
pub fn simulated_anneal(e: &Evaluator<'_>, g: &DualGraph, num: usize, cfg: &OptimizerConfig) -> Result<TrialResult> {
    anneal(e, g, num, cfg, cfg.theta_r, |d, rng| Ok(evolve(g, d, cfg.theta, rng)))
}

/// Simulated annealing with random `n_swap`-block shuffles as proposals and
/// no random restarts.
pub fn rsa(e: &Evaluator<'_>, g: &DualGraph, num: usize, cfg: &OptimizerConfig) -> Result<TrialResult> {
    anneal(e, g, num, cfg, 0.0, |d, rng| step_random(d, cfg.n_swap, rng))
}

/// Independent uniform draws of `num`-dot distributions.
pub fn random_benchmark<R: Rng + ?Sized>(
    e: &Evaluator<'_>,
    g: &DualGraph,
    num: usize,
    k_max: usize,
    stall_limit: usize,
    rng: &mut R,
) -> Result<TrialResult> {
    check_num(g, e, num)?;
    if k_max == 0 {
        return Err(invalid!("k_max must be at least 1"));
    }
    let mut trials = Trials::new(e, k_max, stall_limit);
    while !trials.exhausted() {
        let d = random_distribution(g.k(), num, rng);
        if trials.score(d)?.is_none() {
            break;
        }
    }
    trials.finish()
}

/// The searches available to the comparison harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Rrils,
    SimulatedAnnealing,
    RandomSimulatedAnnealing,
    Random,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] =
        [Algorithm::Rrils, Algorithm::SimulatedAnnealing, Algorithm::RandomSimulatedAnnealing, Algorithm::Random];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rrils => "rrils",
            Algorithm::SimulatedAnnealing => "sa",
            Algorithm::RandomSimulatedAnnealing => "rsa",
            Algorithm::Random => "random",
        }
    }

    fn stream_id(self) -> u64 {
        self as u64 + 1
    }

    /// Runs one search with `cfg.seed` as its seed.
    pub fn run(self, e: &Evaluator<'_>, g: &DualGraph, num: usize, cfg: &OptimizerConfig) -> Result<TrialResult> {
        match self {
            Algorithm::Rrils => rrils(e, g, num, cfg),
            Algorithm::SimulatedAnnealing => simulated_anneal(e, g, num, cfg),
            Algorithm::RandomSimulatedAnnealing => rsa(e, g, num, cfg),
            Algorithm::Random => {
                let mut r = rng::seeded(cfg.seed);
                random_benchmark(e, g, num, cfg.k_max, cfg.stall_limit, &mut r)
            }
        }
    }

    /// Seed of trial `trial` of this algorithm under a harness seed.
    pub fn trial_seed(self, seed: u64, trial: u64) -> u64 {
        rng::derive_seed(seed, self.stream_id() << 40 | trial)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Algorithm> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| invalid!("unknown algorithm '{s}' (expected rrils, sa, rsa or random)"))
    }
}

/// Mean best score of one algorithm at one budget.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub algorithm: Algorithm,
    pub k_max: usize,
    pub mean_best: f64,
    /// Standard error of the mean over trials.
    pub stderr: f64,
    pub trials: usize,
}

/// Configuration for trial `trial` of `alg`: budget raised to the largest
/// grid value, seed derived from the harness seed.
pub fn trial_config(alg: Algorithm, base: &OptimizerConfig, k_max: usize, trial: u64) -> OptimizerConfig {
    OptimizerConfig { k_max, seed: alg.trial_seed(base.seed, trial), ..*base }
}

/// Reduces per-trial results (in trial order) to one curve point per budget.
/// Each trial runs once at the largest budget; smaller budgets read its
/// running maximum, so every curve is non-decreasing.
pub fn curve_points(alg: Algorithm, results: &[TrialResult], k_max_grid: &[usize]) -> Vec<CurvePoint> {
    let n = results.len();
    k_max_grid
        .iter()
        .map(|&k| {
            let values: Vec<f64> = results.iter().map(|r| r.best_within(k)).collect();
            let mean = values.iter().sum::<f64>() / n as f64;
            let stderr = if n > 1 {
                let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
                libm::sqrt(ss / (n - 1) as f64 / n as f64)
            } else {
                0.0
            };
            CurvePoint { algorithm: alg, k_max: k, mean_best: mean, stderr, trials: n }
        })
        .collect()
}

/// Mean best-so-far curves of each algorithm over `trials` seeded trials.
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
        let results = (0..trials as u64)
            .map(|t| alg.run(e, g, num, &trial_config(alg, base, k_max, t)))
            .collect::<Result<Vec<_>>>()?;
        points.extend(curve_points(alg, &results, k_max_grid));
    }
    Ok(points)
}

/// Validates harness arguments; returns the largest budget in the grid.
pub fn check_compare(trials: usize, k_max_grid: &[usize]) -> Result<usize> {
    if trials == 0 {
        return Err(invalid!("trials must be at least 1"));
    }
    match k_max_grid.iter().copied().max() {
        Some(k) if k > 0 && !k_max_grid.contains(&0) => Ok(k),
        _ => Err(invalid!("k_max grid must be non-empty with positive budgets")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::enumerate_plans;
    use alloc::vec;

    #[test]
    fn evolve_examples() {
        let g = DualGraph::square(5).unwrap();
        let mut r = rng::seeded(7);
        let d = VoterDistribution::new(0x15a_c3e1, 25).unwrap();
        assert_eq!(evolve(&g, d, 0.0, &mut r), d);
        assert_eq!(evolve(&g, VoterDistribution::ones(25), 1.0, &mut r), VoterDistribution::ones(25));
        let corner = VoterDistribution::from_blocks([0], 25).unwrap();
        assert_eq!(evolve(&g, corner, 0.4, &mut r), corner);
    }

    #[test]
    fn evolve_only_touches_unhappy_blocks() {
        // Dot at the centre of a 3x3 grid: the centre (0/4 like) is unhappy;
        // its four neighbours have 2/3 like and the corners 2/2, so nothing
        // else moves at theta = 0.5 and the single value is permuted onto itself.
        let g = DualGraph::square(3).unwrap();
        let centre = VoterDistribution::from_blocks([4], 9).unwrap();
        let mut r = rng::seeded(1);
        assert_eq!(evolve(&g, centre, 0.5, &mut r), centre);
        // At theta = 0.7 the four edge-midpoint blanks (2/3 like) join the
        // unhappy set, so the dot can land on any of those five cells.
        let mut landed = alloc::collections::BTreeSet::new();
        for seed in 0..200 {
            let out = evolve(&g, centre, 0.7, &mut rng::seeded(seed));
            assert_eq!(out.num(), 1);
            landed.insert(out.bits().trailing_zeros());
        }
        assert_eq!(landed.into_iter().collect::<Vec<_>>(), vec![1, 3, 4, 5, 7]);
    }

    #[test]
    fn step_random_examples() {
        let mut r = rng::seeded(3);
        let zeros = VoterDistribution::zeros(25);
        assert_eq!(step_random(zeros, 25, &mut r).unwrap(), zeros);
        let d = VoterDistribution::new(0b0001, 4).unwrap();
        let mut outs = alloc::collections::BTreeSet::new();
        for seed in 0..300 {
            let mut r = rng::seeded(seed);
            let out = step_random(d, 2, &mut r).unwrap();
            assert_eq!(out.num(), 1);
            outs.insert(out.bits());
        }
        // Block 0 is touched in half of the draws; its dot moves to the
        // other touched block with probability 1/2.
        assert_eq!(outs.into_iter().collect::<Vec<_>>(), vec![0b0001, 0b0010, 0b0100, 0b1000]);
        assert!(step_random(d, 1, &mut r).is_err());
        assert!(step_random(d, 5, &mut r).is_err());
    }

    #[test]
    fn prob_accept_values() {
        assert_eq!(prob_accept(0.0, 2.0).unwrap(), 1.0);
        assert!(prob_accept(0.3, 1.0).unwrap() > 1.0);
        assert!((prob_accept(-1.0, 1.0).unwrap() - 0.367_879_441_171_442_3).abs() < 1e-12);
        assert!(prob_accept(-1.0, 0.0).is_err());
        assert!(prob_accept(-1.0, -1.0).is_err());
        assert!(prob_accept(-1.0, f64::NAN).is_err());
        assert!(prob_accept(-1.0, 1e-300).unwrap() < 1e-300);
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        for bad in [
            OptimizerConfig { theta: 1.5, ..Default::default() },
            OptimizerConfig { t0: 0.0, ..Default::default() },
            OptimizerConfig { alpha: 0.0, ..Default::default() },
            OptimizerConfig { theta_r: -0.1, ..Default::default() },
            OptimizerConfig { n_swap: 1, ..Default::default() },
            OptimizerConfig { k_max: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn single_evaluation_budget() {
        let plans = enumerate_plans(4).unwrap();
        let g = DualGraph::square(4).unwrap();
        let e = Evaluator::exact(&plans).unwrap();
        let cfg = OptimizerConfig { k_max: 1, seed: 11, ..Default::default() };
        for alg in Algorithm::ALL {
            let r = alg.run(&e, &g, 6, &cfg).unwrap();
            assert_eq!(r.evaluations(), 1);
            assert_eq!(r.best_so_far, vec![r.best_score]);
            assert_eq!(e.eval(r.best_distribution).unwrap(), r.best_score);
        }
    }

    #[test]
    fn rrils_with_zero_threshold_is_random_search() {
        let plans = enumerate_plans(4).unwrap();
        let g = DualGraph::square(4).unwrap();
        let e = Evaluator::exact(&plans).unwrap();
        let cfg = OptimizerConfig { theta: 0.0, k_max: 50, seed: 5, ..Default::default() };
        let a = rrils(&e, &g, 7, &cfg).unwrap();
        let b = random_benchmark(&e, &g, 7, 50, cfg.stall_limit, &mut rng::seeded(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn frozen_annealing_keeps_initial_state() {
        let plans = enumerate_plans(4).unwrap();
        let g = DualGraph::square(4).unwrap();
        let e = Evaluator::exact(&plans).unwrap();
        let cfg = OptimizerConfig { theta: 0.0, alpha: 1.0, theta_r: 0.0, k_max: 100, stall_limit: 50, seed: 2, ..Default::default() };
        let r = simulated_anneal(&e, &g, 8, &cfg).unwrap();
        let start = random_distribution(16, 8, &mut rng::seeded(2));
        assert_eq!(r.evaluations(), 1);
        assert_eq!(r.best_distribution, start);
    }

    #[test]
    fn exhausted_state_space_terminates() {
        let plans = enumerate_plans(4).unwrap();
        let g = DualGraph::square(4).unwrap();
        let e = Evaluator::exact(&plans).unwrap();
        let r = random_benchmark(&e, &g, 0, 10, 100, &mut rng::seeded(0)).unwrap();
        assert_eq!((r.evaluations(), r.best_score), (1, 0.0));
        let r = random_benchmark(&e, &g, 16, 10, 100, &mut rng::seeded(0)).unwrap();
        assert_eq!(r.best_score, 4.0);
        assert!(random_benchmark(&e, &g, 17, 10, 100, &mut rng::seeded(0)).is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("greedy".parse::<Algorithm>().is_err());
    }

    #[test]
    fn compare_single_point() {
        let plans = enumerate_plans(4).unwrap();
        let g = DualGraph::square(4).unwrap();
        let e = Evaluator::exact(&plans).unwrap();
        let base = OptimizerConfig { seed: 1, ..Default::default() };
        let pts = compare(&[Algorithm::Random], &e, &g, 8, 1, &[1], &base).unwrap();
        assert_eq!(pts.len(), 1);
        let seed = Algorithm::Random.trial_seed(1, 0);
        let d = random_distribution(16, 8, &mut rng::seeded(seed));
        assert_eq!(pts[0].mean_best, e.eval(d).unwrap());
        assert_eq!(pts[0].stderr, 0.0);
        assert!(compare(&[Algorithm::Random], &e, &g, 8, 0, &[1], &base).is_err());
        assert!(compare(&[Algorithm::Random], &e, &g, 8, 1, &[], &base).is_err());
    }
}
