//! Exhaustive enumeration of the GPC construction.
//!
//! Walks every random choice point of `gpc_partition` — demand slots,
//! side-information draws, the final scatter — with its exact probability,
//! for every (W, S) pair, and aggregates by canonical query. The sampler
//! and this enumerator implement the same distribution; a seeded
//! frequency test in the test suite ties the two together.
//!
//! Probabilities per stage, for one concrete outcome:
//!
//! * demand placement: a uniform injection of W into the K slots, so an
//!   assignment of specific demands to blocks has probability
//!   prod_b perm(cap_b, n_b) / perm(K, D);
//! * side-information draws: each demand-bearing block draws its quota
//!   uniformly from the remaining S, contributing 1 / C(remaining, quota);
//! * scatter: a uniform bijection of the leftover indices onto the
//!   leftover slots, so one concrete split has probability
//!   prod_b free_b! / rest!.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use num::{BigInt, BigRational, One, Zero};

use crate::error::{Error, Result};
use crate::gf::FieldParams;
use crate::gpc::{canonical_blocks, gpc_params, GpcParams, PartitionTrace};
use crate::privacy::{binom, factorial, perm};

/// Largest K enumerated by default: C(K,D) * C(K-D,M) pairs, each with a
/// full trace tree, stays comfortable up to here.
pub const DEFAULT_ENUMERATION_BOUND: usize = 7;

/// Exact statistics for one canonical query.
#[derive(Debug, Clone)]
pub struct QueryStats {
    /// Marginal P(Q) under the uniform (W, S) prior.
    pub total: BigRational,
    /// P(Q | W, S) for every pair that can produce this query.
    pub per_pair: BTreeMap<(Vec<usize>, Vec<usize>), BigRational>,
}

/// The complete query distribution of an instance.
#[derive(Debug, Clone)]
pub struct QueryDistribution {
    pub k: usize,
    pub d: usize,
    pub m_side: usize,
    pub params: GpcParams,
    /// Keyed by canonical blocks: Q_0 first, then full blocks ordered by
    /// minimum element, ascending inside each block.
    pub queries: BTreeMap<Vec<Vec<usize>>, QueryStats>,
}

impl QueryDistribution {
    /// Uniform prior of one (W, S) pair: 1 / (C(K,D) * C(K-D,M)).
    pub fn pair_prior(&self) -> BigRational {
        BigRational::new(
            BigInt::one(),
            binom(self.k, self.d) * binom(self.k - self.d, self.m_side),
        )
    }

    /// Every size-D demand set — the posterior's domain.
    pub fn all_demands(&self) -> Vec<Vec<usize>> {
        (1..=self.k).combinations(self.d).collect()
    }
}

/// Protocol mutations used to validate the oracle's detection power.
/// `None` is the real protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mutation {
    None,
    /// Skip step (b): no deliberate side-information placement. The query
    /// becomes independent of (W, S) outright — the posterior stays
    /// uniform — but recoverability and the closed-form support break.
    SkipSidePlacement,
    /// Place demands only into the full blocks, never Q_0. Breaks
    /// posterior uniformity whenever rho > 0.
    DemandsAvoidLeftoverBlock,
}

/// Visits every trace the construction can produce for (demand, side),
/// together with its exact probability; the probabilities over all visits
/// sum to 1.
pub fn enumerate_traces<F>(
    params: &GpcParams,
    demand: &BTreeSet<usize>,
    side: &BTreeSet<usize>,
    visit: F,
) -> Result<()>
where
    F: FnMut(&PartitionTrace, &BigRational),
{
    crate::validate_index_sets(params.k, params.d, params.m_side, demand, side)?;
    for_each_trace(params, demand, side, Mutation::None, visit);
    Ok(())
}

/// Visits every trace reachable for (demand, side) with its exact
/// probability; the probabilities over all visits sum to 1.
pub(crate) fn for_each_trace<F>(
    params: &GpcParams,
    demand: &BTreeSet<usize>,
    side: &BTreeSet<usize>,
    mutation: Mutation,
    visit: F,
) where
    F: FnMut(&PartitionTrace, &BigRational),
{
    let mut walker = TraceWalker {
        params,
        sizes: params.block_sizes(),
        demand: demand.iter().copied().collect(),
        mutation,
        visit,
    };
    walker.run(side);
}

struct TraceWalker<'a, F> {
    params: &'a GpcParams,
    sizes: Vec<usize>,
    demand: Vec<usize>,
    mutation: Mutation,
    visit: F,
}

impl<F: FnMut(&PartitionTrace, &BigRational)> TraceWalker<'_, F> {
    fn run(&mut self, side: &BTreeSet<usize>) {
        let first_block = if self.mutation == Mutation::DemandsAvoidLeftoverBlock {
            1
        } else {
            0
        };
        let slot_total: usize = self.sizes[first_block..].iter().sum();
        let mut placement = Vec::with_capacity(self.demand.len());
        self.assign_demands(0, first_block, slot_total, side, &mut placement);
    }

    /// Stage 1: every function from the demand list to the blocks.
    fn assign_demands(
        &mut self,
        pos: usize,
        first_block: usize,
        slot_total: usize,
        side: &BTreeSet<usize>,
        placement: &mut Vec<usize>,
    ) {
        if pos == self.demand.len() {
            let placement = placement.clone();
            self.with_placement(&placement, slot_total, side);
            return;
        }
        for b in first_block..self.sizes.len() {
            placement.push(b);
            self.assign_demands(pos + 1, first_block, slot_total, side, placement);
            placement.pop();
        }
    }

    fn with_placement(&mut self, placement: &[usize], slot_total: usize, side: &BTreeSet<usize>) {
        let num_blocks = self.sizes.len();
        let mut counts = vec![0usize; num_blocks];
        for &b in placement {
            counts[b] += 1;
        }
        if counts.iter().zip(&self.sizes).any(|(&n, &cap)| n > cap) {
            return;
        }
        let mut p1 = BigRational::one();
        for (b, &n_b) in counts.iter().enumerate() {
            p1 *= BigRational::from_integer(perm(self.sizes[b], n_b));
        }
        p1 /= BigRational::from_integer(perm(slot_total, self.demand.len()));

        let mut blocks: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); num_blocks];
        for (w, &b) in self.demand.iter().zip(placement) {
            blocks[b].insert(*w);
        }
        let mut placed: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); num_blocks];
        let side_vec: Vec<usize> = side.iter().copied().collect();
        self.place_side(0, &mut blocks, &counts, &mut placed, &side_vec, p1);
    }

    fn place_side(
        &mut self,
        b: usize,
        blocks: &mut Vec<BTreeSet<usize>>,
        counts: &[usize],
        placed: &mut Vec<BTreeSet<usize>>,
        remaining_side: &[usize],
        p_so_far: BigRational,
    ) {
        if b == blocks.len() {
            self.scatter(blocks, counts, placed, p_so_far);
            return;
        }
        let quota = if self.mutation == Mutation::SkipSidePlacement || counts[b] == 0 {
            0
        } else {
            self.params.side_quota(b)
        };
        if quota == 0 {
            self.place_side(b + 1, blocks, counts, placed, remaining_side, p_so_far);
            return;
        }
        let choice_prob = BigRational::new(BigInt::one(), binom(remaining_side.len(), quota));
        for subset in remaining_side.iter().copied().combinations(quota) {
            for idx in &subset {
                blocks[b].insert(*idx);
                placed[b].insert(*idx);
            }
            let next_side: Vec<usize> = remaining_side
                .iter()
                .copied()
                .filter(|i| !subset.contains(i))
                .collect();
            self.place_side(
                b + 1,
                blocks,
                counts,
                placed,
                &next_side,
                p_so_far.clone() * choice_prob.clone(),
            );
            for idx in &subset {
                blocks[b].remove(idx);
                placed[b].remove(idx);
            }
        }
    }

    fn scatter(
        &mut self,
        blocks: &mut Vec<BTreeSet<usize>>,
        counts: &[usize],
        placed: &mut Vec<BTreeSet<usize>>,
        p_so_far: BigRational,
    ) {
        let used: BTreeSet<usize> = blocks.iter().flatten().copied().collect();
        let rest: Vec<usize> = (1..=self.params.k).filter(|i| !used.contains(i)).collect();
        let free: Vec<usize> = blocks
            .iter()
            .zip(&self.sizes)
            .map(|(blk, &cap)| cap - blk.len())
            .collect();
        let mut split_prob = BigRational::one();
        for &f in &free {
            split_prob *= BigRational::from_integer(factorial(f));
        }
        split_prob /= BigRational::from_integer(factorial(rest.len()));
        let p_leaf = p_so_far * split_prob;
        self.split(0, &rest, &free, blocks, counts, placed, &p_leaf);
    }

    #[allow(clippy::too_many_arguments)]
    fn split(
        &mut self,
        b: usize,
        rest: &[usize],
        free: &[usize],
        blocks: &mut Vec<BTreeSet<usize>>,
        counts: &[usize],
        placed: &mut Vec<BTreeSet<usize>>,
        p_leaf: &BigRational,
    ) {
        if b == blocks.len() {
            debug_assert!(rest.is_empty());
            let trace = PartitionTrace {
                blocks: blocks.clone(),
                demand_placement: counts.to_vec(),
                placed_side_info: placed.clone(),
            };
            (self.visit)(&trace, p_leaf);
            return;
        }
        for subset in rest.iter().copied().combinations(free[b]) {
            for idx in &subset {
                blocks[b].insert(*idx);
            }
            let next_rest: Vec<usize> = rest
                .iter()
                .copied()
                .filter(|i| !subset.contains(i))
                .collect();
            self.split(b + 1, &next_rest, free, blocks, counts, placed, p_leaf);
            for idx in &subset {
                blocks[b].remove(idx);
            }
        }
    }
}

/// Enumerates the exact query distribution of an instance with the default
/// size bound. `fp` fixes the field the queries would be issued over; the
/// distribution itself is a property of the partition construction alone.
pub fn enumerate_distribution(
    k: usize,
    d: usize,
    m_side: usize,
    fp: FieldParams,
) -> Result<QueryDistribution> {
    enumerate_distribution_with_bound(k, d, m_side, fp, DEFAULT_ENUMERATION_BOUND)
}

/// Same as [`enumerate_distribution`] with an explicit bound on K.
pub fn enumerate_distribution_with_bound(
    k: usize,
    d: usize,
    m_side: usize,
    fp: FieldParams,
    bound: usize,
) -> Result<QueryDistribution> {
    if k > bound {
        return Err(Error::EnumerationBoundExceeded { k, bound });
    }
    let params = gpc_params(k, d, m_side)?;
    if fp.q() < params.beta as u64 {
        return Err(Error::FieldTooSmall {
            q: fp.q(),
            needed: params.beta as u64,
        });
    }
    Ok(enumerate_internal(&params, Mutation::None))
}

pub(crate) fn enumerate_internal(params: &GpcParams, mutation: Mutation) -> QueryDistribution {
    let k = params.k;
    let d = params.d;
    let m_side = params.m_side;
    let mut queries: BTreeMap<Vec<Vec<usize>>, QueryStats> = BTreeMap::new();

    for w in (1..=k).combinations(d) {
        let demand: BTreeSet<usize> = w.iter().copied().collect();
        for s in (1..=k).filter(|i| !demand.contains(i)).combinations(m_side) {
            let side: BTreeSet<usize> = s.iter().copied().collect();
            let mut per_query: BTreeMap<Vec<Vec<usize>>, BigRational> = BTreeMap::new();
            for_each_trace(params, &demand, &side, mutation, |trace, p| {
                let key = canonical_blocks(&trace.blocks);
                *per_query.entry(key).or_insert_with(BigRational::zero) += p;
            });
            debug_assert_eq!(
                per_query.values().fold(BigRational::zero(), |a, b| a + b),
                BigRational::one(),
                "per-pair probabilities must sum to 1"
            );
            for (key, p) in per_query {
                let stats = queries.entry(key).or_insert_with(|| QueryStats {
                    total: BigRational::zero(),
                    per_pair: BTreeMap::new(),
                });
                stats.per_pair.insert((w.clone(), s.clone()), p);
            }
        }
    }

    let mut dist = QueryDistribution {
        k,
        d,
        m_side,
        params: *params,
        queries,
    };
    let prior = dist.pair_prior();
    for stats in dist.queries.values_mut() {
        stats.total = stats
            .per_pair
            .values()
            .fold(BigRational::zero(), |acc, p| acc + p)
            * prior.clone();
    }
    dist
}

/// Exact posterior over demand sets given one canonical query, by Bayes
/// over the uniform (W, S) prior. The privacy condition says this is
/// identically 1 / C(K, D).
pub fn posterior(
    dist: &QueryDistribution,
    blocks: &[Vec<usize>],
) -> Result<BTreeMap<Vec<usize>, BigRational>> {
    let stats = dist.queries.get(blocks).ok_or(Error::UnreachableQuery)?;
    let prior = dist.pair_prior();
    let mut out = BTreeMap::new();
    for w in dist.all_demands() {
        let numerator = stats
            .per_pair
            .iter()
            .filter(|((pw, _), _)| *pw == w)
            .fold(BigRational::zero(), |acc, (_, p)| acc + p)
            * prior.clone();
        out.insert(w, numerator / stats.total.clone());
    }
    Ok(out)
}
