//! Estimators of the expected seat count of a voter distribution.
//!
//! Three backends: the exact mean over a full plan set, a uniform subsample
//! of that set, and a Markov chain over legal plans for graphs whose plans
//! cannot be enumerated. Stochastic backends seed a private stream from the
//! backend seed and the evaluated distribution, so `eval` is a deterministic
//! function of its input.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::districting::{district_is_legal, DistrictingPlan};
use crate::enumeration::{first_partition, PlanSet, VoterDistribution};
use crate::error::{invalid, Error, Result};
use crate::graph::{BlockSet, DualGraph};
use crate::metrics::plan_halves;
use crate::rng::{self, Rng};

/// How the sampled backend draws plans.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleMode {
    /// Independent uniform draws.
    WithReplacement,
    /// Distinct plans in random order; a sample as large as the plan set
    /// visits every plan once.
    FullPass,
}

/// Parameters of the plan-sampling Markov chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainConfig {
    pub steps: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig { steps: 11_000, burn_in: 1000, thinning: 10, seed: 0 }
    }
}

#[derive(Clone, Debug)]
enum Backend<'a> {
    Exact(&'a PlanSet),
    Sampled { plans: &'a PlanSet, sample_size: usize, mode: SampleMode, seed: u64 },
    Chain { graph: &'a DualGraph, initial: DistrictingPlan, config: ChainConfig },
}

/// A scoring function for voter distributions.
#[derive(Clone, Debug)]
pub struct Evaluator<'a> {
    backend: Backend<'a>,
}

impl<'a> Evaluator<'a> {
    pub fn exact(plans: &'a PlanSet) -> Result<Evaluator<'a>> {
        if plans.is_empty() {
            return Err(invalid!("exact evaluator over an empty plan set"));
        }
        Ok(Evaluator { backend: Backend::Exact(plans) })
    }

    pub fn sampled(plans: &'a PlanSet, sample_size: usize, mode: SampleMode, seed: u64) -> Result<Evaluator<'a>> {
        if plans.is_empty() || sample_size == 0 {
            return Err(invalid!("sampled evaluator needs plans and a positive sample size"));
        }
        Ok(Evaluator { backend: Backend::Sampled { plans, sample_size, mode, seed } })
    }

    /// Chain backend on `graph` with `n_districts` equal districts. Fails if
    /// no legal starting plan exists.
    pub fn chain(graph: &'a DualGraph, n_districts: usize, config: ChainConfig) -> Result<Evaluator<'a>> {
        if config.thinning == 0 || config.steps <= config.burn_in {
            return Err(invalid!("chain needs thinning >= 1 and steps > burn_in"));
        }
        let initial = first_partition(graph, n_districts)?.ok_or(Error::InitializationFailure)?;
        Ok(Evaluator { backend: Backend::Chain { graph, initial, config } })
    }

    /// Number of blocks the evaluator scores.
    pub fn k(&self) -> usize {
        match &self.backend {
            Backend::Exact(p) | Backend::Sampled { plans: p, .. } => p.k(),
            Backend::Chain { graph, .. } => graph.k(),
        }
    }

    /// Estimated expected seats of `dist`.
    pub fn eval(&self, dist: VoterDistribution) -> Result<f64> {
        if dist.k() != self.k() {
            return Err(invalid!("distribution has {} blocks, evaluator expects {}", dist.k(), self.k()));
        }
        let dots = dist.bits();
        match &self.backend {
            Backend::Exact(plans) => {
                let (nd, m) = (plans.n_districts(), district_size(plans));
                let halves: u64 = plans.masks().chunks_exact(nd).map(|p| plan_halves(dots, p, m) as u64).sum();
                Ok(halves as f64 / (2 * plans.len()) as f64)
            }
            Backend::Sampled { plans, sample_size, mode, seed } => {
                let m = district_size(plans);
                let mut rng = rng::stream(*seed, dots);
                let mut halves = 0u64;
                let drawn = match mode {
                    SampleMode::WithReplacement => {
                        for _ in 0..*sample_size {
                            let i = rng.random_range(0..plans.len());
                            halves += plan_halves(dots, plans.plan_masks(i), m) as u64;
                        }
                        *sample_size
                    }
                    SampleMode::FullPass => {
                        let mut order: Vec<usize> = (0..plans.len()).collect();
                        let take = (*sample_size).min(order.len());
                        let (chosen, _) = order.partial_shuffle(&mut rng, take);
                        for &i in chosen.iter() {
                            halves += plan_halves(dots, plans.plan_masks(i), m) as u64;
                        }
                        take
                    }
                };
                Ok(halves as f64 / (2 * drawn) as f64)
            }
            Backend::Chain { graph, initial, config } => {
                let mut state = ChainState::new(graph, initial, rng::stream(config.seed, dots))?;
                let (mut halves, mut samples) = (0u64, 0u64);
                for t in 1..=config.steps {
                    state.step(graph);
                    if t >= config.burn_in && (t - config.burn_in) % config.thinning == 0 {
                        halves += plan_halves(dots, state.masks(), state.m) as u64;
                        samples += 1;
                    }
                }
                Ok(halves as f64 / (2 * samples) as f64)
            }
        }
    }
}

fn district_size(plans: &PlanSet) -> u32 {
    (plans.k() / plans.n_districts()) as u32
}

/// State of the plan-sampling chain.
///
/// Each step draws an ordered block pair uniformly from all `k²` pairs. When
/// the two blocks lie in different districts and each touches the other's
/// district, their assignments are swapped; the swap is kept iff both changed
/// districts stay legal. The proposal is symmetric, so the chain's stationary
/// distribution is uniform on the legal plans it can reach.
#[derive(Clone, Debug)]
pub struct ChainState {
    assignment: Vec<u8>,
    masks: Vec<BlockSet>,
    m: u32,
    steps: u64,
    accepted: u64,
    rng: Rng,
}

impl ChainState {
    pub fn new(g: &DualGraph, plan: &DistrictingPlan, rng: Rng) -> Result<ChainState> {
        if !crate::districting::is_legal(g, plan) {
            return Err(invalid!("chain must start from a legal plan"));
        }
        let masks = plan.masks();
        let m = masks[0].len();
        Ok(ChainState { assignment: plan.assignment().to_vec(), masks, m, steps: 0, accepted: 0, rng })
    }

    /// Current plan with normalized labels.
    pub fn plan(&self) -> DistrictingPlan {
        DistrictingPlan::new(self.assignment.clone())
    }

    /// District masks under the chain's internal labels.
    pub fn masks(&self) -> &[BlockSet] {
        &self.masks
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    /// One proposal; returns whether it was accepted.
    pub fn step(&mut self, g: &DualGraph) -> bool {
        let k = g.k();
        let u = self.rng.random_range(0..k);
        let v = self.rng.random_range(0..k);
        self.steps += 1;
        let (a, b) = (self.assignment[u] as usize, self.assignment[v] as usize);
        if a == b {
            return false;
        }
        if g.neighbor_mask(u).intersection(self.masks[b]).is_empty()
            || g.neighbor_mask(v).intersection(self.masks[a]).is_empty()
        {
            return false;
        }
        let (su, sv) = (BlockSet::single(u), BlockSet::single(v));
        let new_a = self.masks[a].difference(su).union(sv);
        let new_b = self.masks[b].difference(sv).union(su);
        if !(district_is_legal(g, new_a, self.m) && district_is_legal(g, new_b, self.m)) {
            return false;
        }
        self.masks[a] = new_a;
        self.masks[b] = new_b;
        self.assignment.swap(u, v);
        self.accepted += 1;
        debug_assert!(crate::districting::is_legal(g, &self.plan()));
        true
    }
}

/// Advances `state` by one proposal.
pub fn chain_step(g: &DualGraph, mut state: ChainState) -> ChainState {
    state.step(g);
    state
}
