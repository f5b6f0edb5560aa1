//! Seeded Monte Carlo diagnostics for instances beyond the enumeration
//! bound. Never part of exact acceptance — the exact checks stop at the
//! bound, and this estimator reports how plausibly larger instances behave
//! the same way.
//!
//! Two chi-square statistics over sampled protocol runs with uniformly
//! drawn (W, S):
//!
//! * goodness of fit of the observed demand-count profiles N against the
//!   closed-form P(N) — the load-bearing combinatorial identity;
//! * independence of the demand set W from a query-only feature (where
//!   the probe indices 1 and 2 land in the partition). Under the privacy
//!   condition W is independent of the whole query, hence of any feature
//!   of it.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::gpc::{gpc_params, gpc_partition};
use crate::privacy::{closed_form_p_n, enumerate_demand_counts, DemandCounts};
use num::ToPrimitive;

#[derive(Debug, Clone)]
pub struct MonteCarloReport {
    pub k: usize,
    pub d: usize,
    pub m_side: usize,
    pub samples: usize,
    pub distinct_queries: usize,
    pub profile_chi2: f64,
    pub profile_dof: usize,
    pub profile_p_value: f64,
    pub independence_chi2: f64,
    pub independence_dof: usize,
    pub independence_p_value: f64,
}

impl std::fmt::Display for MonteCarloReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "monte carlo posterior diagnostic: K={} D={} M={} samples={}",
            self.k, self.d, self.m_side, self.samples
        )?;
        writeln!(
            f,
            "  distinct canonical queries seen: {}",
            self.distinct_queries
        )?;
        writeln!(
            f,
            "  demand-profile fit:    chi2 = {:.3} (dof {}), p = {:.4}",
            self.profile_chi2, self.profile_dof, self.profile_p_value
        )?;
        write!(
            f,
            "  demand/query feature independence: chi2 = {:.3} (dof {}), p = {:.4}",
            self.independence_chi2, self.independence_dof, self.independence_p_value
        )
    }
}

fn chi_square_p_value(chi2: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("dof > 0");
    1.0 - dist.cdf(chi2)
}

/// Where the probe indices 1 and 2 sit in a partition, as a small
/// query-only feature for the independence test.
fn probe_feature(blocks: &[std::collections::BTreeSet<usize>]) -> u8 {
    let locate = |idx: usize| blocks.iter().position(|b| b.contains(&idx)).unwrap();
    let b1 = locate(1);
    let b2 = locate(2);
    match (b1 == b2, b1 == 0, b2 == 0) {
        (true, true, _) => 0,  // together in the leftover block
        (true, false, _) => 1, // together in a full block
        (false, true, false) => 2,
        (false, false, true) => 3,
        (false, false, false) => 4,
        (false, true, true) => unreachable!("distinct blocks cannot both be block 0"),
    }
}

/// Samples `samples` protocol runs with uniform (W, S) and reports the
/// two chi-square statistics. Deterministic for a fixed seed.
pub fn monte_carlo_posterior_check(
    k: usize,
    d: usize,
    m_side: usize,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloReport> {
    if samples == 0 {
        return Err(Error::InvalidInstance("need at least one sample".into()));
    }
    if k < 2 {
        return Err(Error::InvalidInstance(
            "the probe feature needs K >= 2".into(),
        ));
    }
    let params = gpc_params(k, d, m_side)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut profile_counts: BTreeMap<DemandCounts, usize> = BTreeMap::new();
    let mut contingency: BTreeMap<(Vec<usize>, u8), usize> = BTreeMap::new();
    let mut demand_marginal: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut feature_marginal: BTreeMap<u8, usize> = BTreeMap::new();
    let mut seen_queries: std::collections::BTreeSet<Vec<Vec<usize>>> =
        std::collections::BTreeSet::new();

    let mut indices: Vec<usize> = (1..=k).collect();
    for _ in 0..samples {
        indices.shuffle(&mut rng);
        let demand: std::collections::BTreeSet<usize> = indices[..d].iter().copied().collect();
        let side: std::collections::BTreeSet<usize> =
            indices[d..d + m_side].iter().copied().collect();
        let trace = gpc_partition(&demand, &side, &params, &mut rng)?;

        let profile = DemandCounts::from_block_counts(&trace.demand_placement);
        *profile_counts.entry(profile).or_insert(0) += 1;

        let feature = probe_feature(&trace.blocks);
        let demand_key: Vec<usize> = demand.iter().copied().collect();
        *contingency
            .entry((demand_key.clone(), feature))
            .or_insert(0) += 1;
        *demand_marginal.entry(demand_key).or_insert(0) += 1;
        *feature_marginal.entry(feature).or_insert(0) += 1;

        seen_queries.insert(crate::gpc::canonical_blocks(&trace.blocks));
    }

    // goodness of fit against the closed-form P(N)
    let mut profile_chi2 = 0.0;
    let mut profile_cells = 0usize;
    for counts in enumerate_demand_counts(&params) {
        let p = closed_form_p_n(&params, &counts)?
            .to_f64()
            .expect("probability fits in f64");
        let expected = p * samples as f64;
        if expected == 0.0 {
            continue;
        }
        let observed = profile_counts.get(&counts).copied().unwrap_or(0) as f64;
        profile_chi2 += (observed - expected).powi(2) / expected;
        profile_cells += 1;
    }
    let profile_dof = profile_cells.saturating_sub(1);

    // contingency chi-square for W x feature
    let demands: Vec<&Vec<usize>> = demand_marginal.keys().collect();
    let features: Vec<u8> = feature_marginal.keys().copied().collect();
    let mut independence_chi2 = 0.0;
    for w in &demands {
        for &g in &features {
            let expected =
                demand_marginal[*w] as f64 * feature_marginal[&g] as f64 / samples as f64;
            if expected == 0.0 {
                continue;
            }
            let observed = contingency.get(&((*w).clone(), g)).copied().unwrap_or(0) as f64;
            independence_chi2 += (observed - expected).powi(2) / expected;
        }
    }
    let independence_dof = demands.len().saturating_sub(1) * features.len().saturating_sub(1);

    Ok(MonteCarloReport {
        k,
        d,
        m_side,
        samples,
        distinct_queries: seen_queries.len(),
        profile_chi2,
        profile_dof,
        profile_p_value: chi_square_p_value(profile_chi2, profile_dof),
        independence_chi2,
        independence_dof,
        independence_p_value: chi_square_p_value(independence_chi2, independence_dof),
    })
}
