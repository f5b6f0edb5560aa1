//! Exact verification of the privacy and recoverability claims.
//!
//! Three layers, from ground truth upward:
//!
//! * `enumeration` walks every random choice the GPC construction can make
//!   and aggregates exact rational probabilities per canonical query — the
//!   oracle everything else is checked against, and the basis for exact
//!   posterior computation.
//! * `closed_form` evaluates the combinatorial formulas for P(N),
//!   P(Q|W,S,N), P(Q), P(W|N,Q) and the compliance counts T_1, T_2; the
//!   test suite requires them to match enumeration exactly.
//! * `audit` linearizes protocol answers into coefficient matrices and
//!   runs the converse-side checks (a witness side-information set must
//!   exist for every candidate demand; full recovery for D > M) as exact
//!   rank/span computations.
//!
//! A seeded Monte Carlo estimator (`montecarlo`) covers instances too
//! large for enumeration; it is diagnostic only.
//!
//! Probabilities are `BigRational`s throughout, so every acceptance check
//! is an equality. Enumeration could parallelize across (W, S) pairs —
//! each pair's sub-enumeration is independent and results merge by
//! rational addition — but desk-scale instances finish in milliseconds
//! single-threaded.

pub mod audit;
pub mod closed_form;
pub mod enumeration;
pub mod montecarlo;

pub use audit::{audit_full_recovery, audit_necessary_condition, linearize, AnswerMatrix};
pub use closed_form::{
    closed_form_p_n, closed_form_p_q, closed_form_p_q_given_wsn, closed_form_posterior,
    closed_form_w_given_nq, designation_count, partition_count, t1_count, t2_count,
};
pub use enumeration::{
    enumerate_distribution, enumerate_distribution_with_bound, enumerate_traces, posterior,
    QueryDistribution, QueryStats, DEFAULT_ENUMERATION_BOUND,
};
pub use montecarlo::{monte_carlo_posterior_check, MonteCarloReport};

use num::BigInt;
use num::One;

use crate::error::{Error, Result};
use crate::gpc::GpcParams;

pub(crate) fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, v| acc * BigInt::from(v))
}

/// Falling factorial n * (n-1) * ... * (n-k+1).
pub(crate) fn perm(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::from(0);
    }
    ((n - k + 1)..=n).fold(BigInt::one(), |acc, v| acc * BigInt::from(v))
}

pub(crate) fn binom(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::from(0);
    }
    perm(n, k) / factorial(k)
}

/// The demand-count profile N of a (query, demand) pair: how many demand
/// indices sit in Q_0 and the multiset of nonzero counts over the full
/// blocks. Orderings of same-count full blocks are interchangeable, so
/// the profile — not the per-block vector — is what the closed forms are
/// stated over.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DemandCounts {
    /// n_0: demands in the leftover block Q_0.
    pub n0: usize,
    /// Nonzero demand counts among the full blocks, sorted descending.
    pub full_block_counts: Vec<usize>,
}

impl DemandCounts {
    /// Builds the profile from per-block counts in block order
    /// (index 0 = Q_0).
    pub fn from_block_counts(counts: &[usize]) -> Self {
        let mut full: Vec<usize> = counts[1..].iter().copied().filter(|&n| n > 0).collect();
        full.sort_unstable_by(|a, b| b.cmp(a));
        DemandCounts {
            n0: counts[0],
            full_block_counts: full,
        }
    }

    /// Builds the profile for a canonical partition and a demand set.
    pub fn from_blocks(blocks: &[Vec<usize>], demand: &std::collections::BTreeSet<usize>) -> Self {
        let counts: Vec<usize> = blocks
            .iter()
            .map(|b| b.iter().filter(|idx| demand.contains(idx)).count())
            .collect();
        DemandCounts::from_block_counts(&counts)
    }

    /// lambda: number of demand-bearing full blocks.
    pub fn lambda(&self) -> usize {
        self.full_block_counts.len()
    }

    pub fn total(&self) -> usize {
        self.n0 + self.full_block_counts.iter().sum::<usize>()
    }

    /// Product of m_j! over j = 1..D, where m_j is the multiplicity of j
    /// among the full-block counts and defaults to 1 elsewhere.
    pub(crate) fn multiplicity_factorial_product(&self) -> BigInt {
        let mut product = BigInt::one();
        let mut i = 0;
        while i < self.full_block_counts.len() {
            let j = self.full_block_counts[i];
            let mut mult = 0;
            while i < self.full_block_counts.len() && self.full_block_counts[i] == j {
                mult += 1;
                i += 1;
            }
            product *= factorial(mult);
        }
        product
    }

    /// Checks consistency against the instance parameters.
    pub fn validate(&self, params: &GpcParams) -> Result<()> {
        if self.total() != params.d {
            return Err(Error::InvalidCounts(format!(
                "counts sum to {}, expected D = {}",
                self.total(),
                params.d
            )));
        }
        if self.n0 > params.rho.min(params.d) {
            return Err(Error::InvalidCounts(format!(
                "n_0 = {} exceeds the Q_0 capacity",
                self.n0
            )));
        }
        if self.lambda() > params.gamma {
            return Err(Error::InvalidCounts(format!(
                "{} demand-bearing full blocks, only gamma = {} exist",
                self.lambda(),
                params.gamma
            )));
        }
        if self
            .full_block_counts
            .iter()
            .any(|&n| n == 0 || n > params.d)
        {
            return Err(Error::InvalidCounts(
                "full-block counts must lie in 1..=D".into(),
            ));
        }
        Ok(())
    }
}

/// All demand-count profiles an instance can produce: partitions of D into
/// n_0 <= min(rho, D) plus at most gamma nonzero block counts.
pub fn enumerate_demand_counts(params: &GpcParams) -> Vec<DemandCounts> {
    fn parts(total: usize, max_part: usize, max_count: usize) -> Vec<Vec<usize>> {
        if total == 0 {
            return vec![Vec::new()];
        }
        if max_count == 0 || max_part == 0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for first in (1..=total.min(max_part)).rev() {
            for mut rest in parts(total - first, first, max_count - 1) {
                let mut v = vec![first];
                v.append(&mut rest);
                out.push(v);
            }
        }
        out
    }
    let mut out = Vec::new();
    for n0 in 0..=params.d.min(params.rho) {
        for full in parts(params.d - n0, params.d.min(params.beta), params.gamma) {
            out.push(DemandCounts {
                n0,
                full_block_counts: full,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::Zero;

    #[test]
    fn combinatorics_helpers() {
        assert_eq!(factorial(0), BigInt::one());
        assert_eq!(factorial(5), BigInt::from(120));
        assert_eq!(binom(10, 3), BigInt::from(120));
        assert_eq!(binom(3, 5), BigInt::zero());
        assert_eq!(perm(5, 2), BigInt::from(20));
    }

    #[test]
    fn demand_counts_profile() {
        let c = DemandCounts::from_block_counts(&[0, 1, 0, 1]);
        assert_eq!(c.n0, 0);
        assert_eq!(c.full_block_counts, vec![1, 1]);
        assert_eq!(c.lambda(), 2);
        // m_1 = 2, everything else defaults to 1: product of m_j! = 2
        assert_eq!(c.multiplicity_factorial_product(), BigInt::from(2));

        let c = DemandCounts::from_block_counts(&[1, 2, 0]);
        assert_eq!(c.n0, 1);
        assert_eq!(c.full_block_counts, vec![2]);
        assert_eq!(c.multiplicity_factorial_product(), BigInt::one());
    }

    #[test]
    fn demand_count_enumeration_covers_instance() {
        let params = crate::gpc::gpc_params(10, 2, 2).unwrap();
        let all = enumerate_demand_counts(&params);
        // D = 2 over rho = 1, gamma = 3: (n0=1, [1]), (n0=0, [2]), (n0=0, [1,1])
        assert_eq!(all.len(), 3);
        for c in &all {
            c.validate(&params).unwrap();
        }
    }
}
