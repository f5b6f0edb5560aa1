//! Closed-form combinatorics of the GPC privacy argument.
//!
//! Everything here is an exact rational in the instance parameters and a
//! demand-count profile N = (n_0, {n_1..n_lambda}); the test suite requires
//! each formula to agree with the enumeration oracle on every instance it
//! covers.
//!
//! Two conventions matter and are worth stating once:
//!
//! * the multiplicities m_j count repeated values among the full-block
//!   demand counts n_1..n_lambda only — n_0 belongs to the leftover block,
//!   which is never interchangeable with a full block;
//! * the sigma-sized side-information draw for Q_0 happens only when Q_0
//!   actually carries a demand, so sigma enters the factorial bookkeeping
//!   through sigma_eff = sigma * [n_0 > 0].
//!
//! Both conventions are forced by the oracle: the alternatives fail the
//! exact-equality cross-check on instances with n_0 > 0 (the first) or
//! sigma > 0 (the second).

use std::collections::BTreeSet;

use num::{BigInt, BigRational, One};

use crate::error::{Error, Result};
use crate::gpc::GpcParams;
use crate::privacy::{binom, factorial, DemandCounts};

fn ratio(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

/// P(N): probability that the demand-count profile comes out as `counts`.
///
/// ```text
/// C(gamma, lambda) * lambda!/prod m_j! * C(rho, n_0) * prod C(beta, n_i)
/// -----------------------------------------------------------------------
///                               C(K, D)
/// ```
pub fn closed_form_p_n(params: &GpcParams, counts: &DemandCounts) -> Result<BigRational> {
    counts.validate(params)?;
    let lambda = counts.lambda();
    let mut num = binom(params.gamma, lambda);
    num *= factorial(lambda) / counts.multiplicity_factorial_product();
    num *= binom(params.rho, counts.n0);
    for &n_i in &counts.full_block_counts {
        num *= binom(params.beta, n_i);
    }
    Ok(ratio(num, binom(params.k, params.d)))
}

/// P(Q | W, S, N) for one deliberate-placement designation: the
/// probability that the construction, conditioned on the profile N,
/// produces one specific final partition via one specific choice of
/// deliberately placed side-information indices.
pub fn closed_form_p_q_given_wsn(params: &GpcParams, counts: &DemandCounts) -> Result<BigRational> {
    counts.validate(params)?;
    let d = params.d;
    let m = params.m_side;
    let alpha = params.alpha;
    let beta = params.beta;
    let gamma = params.gamma;
    let rho = params.rho;
    let lambda = counts.lambda();
    let sigma_eff = if counts.n0 > 0 { params.sigma } else { 0 };

    // distinct demand placements with profile N
    let mut num = counts.multiplicity_factorial_product() * factorial(counts.n0);
    for &n_i in &counts.full_block_counts {
        num *= factorial(n_i);
    }
    let mut den = factorial(d);

    // side-information selection and grouping
    num *= factorial(m - sigma_eff - lambda * alpha)
        * factorial(sigma_eff)
        * factorial(alpha).pow(lambda as u32);
    den *= factorial(m);

    // scatter of the remaining indices
    num *= factorial(gamma - lambda)
        * factorial(rho - sigma_eff - counts.n0)
        * factorial(beta).pow((gamma - lambda) as u32);
    for &n_i in &counts.full_block_counts {
        num *= factorial(beta - alpha - n_i);
    }
    den *= factorial(params.k - d - sigma_eff - lambda * alpha);

    Ok(ratio(num, den))
}

/// P(Q): every canonical partition is equally likely,
/// gamma! * rho! * (beta!)^gamma / K!.
pub fn closed_form_p_q(params: &GpcParams) -> BigRational {
    let num = factorial(params.gamma)
        * factorial(params.rho)
        * factorial(params.beta).pow(params.gamma as u32);
    ratio(num, factorial(params.k))
}

/// Number of distinct canonical partitions, the reciprocal of
/// [`closed_form_p_q`].
pub fn partition_count(params: &GpcParams) -> BigInt {
    factorial(params.k)
        / (factorial(params.gamma)
            * factorial(params.rho)
            * factorial(params.beta).pow(params.gamma as u32))
}

/// P(W | N, Q): given the query and the count profile, all demand sets
/// with that profile are equally likely —
/// 1 / (C(gamma,lambda) * lambda!/prod m_j! * C(rho,n_0) * prod C(beta,n_i)).
pub fn closed_form_w_given_nq(params: &GpcParams, counts: &DemandCounts) -> Result<BigRational> {
    counts.validate(params)?;
    let lambda = counts.lambda();
    let mut den = binom(params.gamma, lambda);
    den *= factorial(lambda) / counts.multiplicity_factorial_product();
    den *= binom(params.rho, counts.n0);
    for &n_i in &counts.full_block_counts {
        den *= binom(params.beta, n_i);
    }
    Ok(ratio(BigInt::one(), den))
}

/// T_2: the number of (side-information set, deliberate designation)
/// choices that comply with a query for a fixed demand set, given the
/// profile N.
pub fn t2_count(params: &GpcParams, counts: &DemandCounts) -> Result<BigInt> {
    counts.validate(params)?;
    let lambda = counts.lambda();
    let alpha = params.alpha;
    let sigma_eff = if counts.n0 > 0 { params.sigma } else { 0 };
    let mut t2 = if counts.n0 > 0 {
        binom(params.rho - counts.n0, params.sigma)
    } else {
        BigInt::one()
    };
    for &n_i in &counts.full_block_counts {
        t2 *= binom(params.beta - n_i, alpha);
    }
    t2 *= binom(
        params.k - params.d - sigma_eff - lambda * alpha,
        params.m_side - sigma_eff - lambda * alpha,
    );
    Ok(t2)
}

/// T_1: the number of (W, S, designation) triples that comply with a
/// query and produce the profile N.
pub fn t1_count(params: &GpcParams, counts: &DemandCounts) -> Result<BigInt> {
    counts.validate(params)?;
    let lambda = counts.lambda();
    let mut w_choices = binom(params.rho, counts.n0) * binom(params.gamma, lambda);
    w_choices *= factorial(lambda) / counts.multiplicity_factorial_product();
    for &n_i in &counts.full_block_counts {
        w_choices *= binom(params.beta, n_i);
    }
    Ok(w_choices * t2_count(params, counts)?)
}

/// The number of deliberate-placement designations a concrete (W, S) pair
/// admits for a concrete canonical query: a product of binomials over the
/// demand-bearing blocks. Zero means (W, S) cannot produce the query at
/// all — this is the compliance test.
pub fn designation_count(
    params: &GpcParams,
    blocks: &[Vec<usize>],
    demand: &BTreeSet<usize>,
    side: &BTreeSet<usize>,
) -> BigInt {
    let mut count = BigInt::one();
    for (b, block) in blocks.iter().enumerate() {
        let n_b = block.iter().filter(|idx| demand.contains(idx)).count();
        if n_b == 0 {
            continue;
        }
        let side_in_block = block.iter().filter(|idx| side.contains(idx)).count();
        count *= binom(side_in_block, params.side_quota(b));
    }
    count
}

/// The exact posterior P(W | Q) assembled from the closed forms:
/// P(N | Q) * P(W | N, Q) with N read off (Q, W). The privacy condition
/// says this is identically 1 / C(K, D); the function computes it rather
/// than asserting it, so tests can check the identity.
pub fn closed_form_posterior(
    params: &GpcParams,
    blocks: &[Vec<usize>],
    demand: &BTreeSet<usize>,
) -> Result<BigRational> {
    if demand.len() != params.d {
        return Err(Error::NotCompliant);
    }
    let sizes = params.block_sizes();
    if blocks.len() != sizes.len() || blocks.iter().zip(&sizes).any(|(b, &s)| b.len() != s) {
        return Err(Error::NotCompliant);
    }
    let members: BTreeSet<usize> = blocks.iter().flatten().copied().collect();
    if !demand.iter().all(|idx| members.contains(idx)) {
        return Err(Error::NotCompliant);
    }
    let counts = DemandCounts::from_blocks(blocks, demand);
    // P(N | Q) = P(N) by the independence of Q and N
    Ok(closed_form_p_n(params, &counts)? * closed_form_w_given_nq(params, &counts)?)
}
