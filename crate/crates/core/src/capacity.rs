//! Capacity formulas and the protocol planner.
//!
//! Rates and capacities are exact rationals end to end, so every check in
//! the test suite is an equality, never a tolerance. The formulas here are
//! evaluated directly from (K, D, M) integer arithmetic — independently of
//! the protocol modules — and the planner's achieved rate is required to
//! meet them exactly.

use num::{BigInt, BigRational};

use crate::error::{Error, Result};
use crate::gpc::gpc_params;
use crate::validate_instance;

/// Exact rational with arbitrary-precision integers; always reduced, with
/// a positive denominator.
pub type Rational = BigRational;

/// Builds D / n as an exact rational.
pub fn rat(num: usize, den: usize) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Whether a capacity value is exact or only a lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Exact,
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacityValue {
    pub value: Rational,
    pub kind: BoundKind,
}

/// The capacity of an instance: exact D/(K-M) for D > M, and for D <= M
/// the best known lower bound
///
/// ```text
/// max{ D/(K-M), D/(K - floor(M/D) * floor(K/beta)) }   if (K-D)/beta <= floor(K/beta)
/// max{ D/(K-M), 1/ceil(K/beta) }                        otherwise
/// ```
///
/// with beta = D + floor(M/D).
pub fn capacity_value(k: usize, d: usize, m_side: usize) -> Result<CapacityValue> {
    validate_instance(k, d, m_side)?;
    if d > m_side {
        return Ok(CapacityValue {
            value: rat(d, k - m_side),
            kind: BoundKind::Exact,
        });
    }
    let alpha = m_side / d;
    let beta = d + alpha;
    let gamma = k / beta;
    // (K - D)/beta <= floor(K/beta), kept in integer form
    let first_branch = k - d <= beta * gamma;
    let gpc_rate = if first_branch {
        rat(d, k - alpha * gamma)
    } else {
        rat(1, k.div_ceil(beta))
    };
    let grs_rate = rat(d, k - m_side);
    Ok(CapacityValue {
        value: grs_rate.max(gpc_rate),
        kind: BoundKind::LowerBound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    Grs,
    Gpc,
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Protocol::Grs => write!(f, "grs"),
            Protocol::Gpc => write!(f, "gpc"),
        }
    }
}

/// The planner's choice for an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub protocol: Protocol,
    pub download_symbols: usize,
    pub rate: Rational,
}

/// Picks the protocol that downloads fewer symbols. For D > M only the
/// GRS protocol exists; for D <= M the GPC download count is compared
/// against K - M, with ties broken toward GRS (its deterministic query
/// additionally hides the side-information set).
pub fn plan(k: usize, d: usize, m_side: usize) -> Result<Plan> {
    validate_instance(k, d, m_side)?;
    let grs_symbols = k - m_side;
    let (protocol, download_symbols) = if d > m_side {
        (Protocol::Grs, grs_symbols)
    } else {
        let params = gpc_params(k, d, m_side)?;
        let gpc_symbols = params.download_symbols();
        if gpc_symbols < grs_symbols {
            (Protocol::Gpc, gpc_symbols)
        } else {
            (Protocol::Grs, grs_symbols)
        }
    };
    Ok(Plan {
        protocol,
        download_symbols,
        rate: rat(d, download_symbols),
    })
}

/// The premise the single-demand floor/ceiling identity needs:
/// (K-1)/(M+1) <= floor(K/(M+1)).
pub fn appendix_premise(k: usize, m_side: usize) -> bool {
    k > m_side && k - 1 <= (m_side + 1) * (k / (m_side + 1))
}

/// Does K - M*floor(K/(M+1)) = ceil(K/(M+1)) hold? Under
/// [`appendix_premise`] this is an identity (for all K, M); it is what
/// collapses the two D = 1 lower bounds into 1/ceil(K/(M+1)).
pub fn appendix_identity(k: usize, m_side: usize) -> bool {
    k - m_side * (k / (m_side + 1)) == k.div_ceil(m_side + 1)
}

/// Simplified lower bound max{D/(K-M), (D + M/D)/K}, valid when D divides
/// M and D + M/D divides K.
pub fn remark3_simplification(k: usize, d: usize, m_side: usize) -> Result<Rational> {
    validate_instance(k, d, m_side)?;
    if d == 0 || !m_side.is_multiple_of(d) {
        return Err(Error::DivisibilityNotSatisfied);
    }
    let beta = d + m_side / d;
    if !k.is_multiple_of(beta) {
        return Err(Error::DivisibilityNotSatisfied);
    }
    Ok(rat(d, k - m_side).max(rat(beta, k)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_examples() {
        let c = capacity_value(10, 2, 2).unwrap();
        assert_eq!(c.kind, BoundKind::LowerBound);
        assert_eq!(c.value, rat(2, 7)); // GPC 2/7 beats GRS 2/8

        let c = capacity_value(5, 2, 2).unwrap();
        assert_eq!(c.kind, BoundKind::LowerBound);
        assert_eq!(c.value, rat(2, 3)); // GRS 2/3 beats GPC 1/2

        let c = capacity_value(5, 2, 1).unwrap();
        assert_eq!(c.kind, BoundKind::Exact);
        assert_eq!(c.value, rat(2, 4));

        let c = capacity_value(7, 1, 2).unwrap();
        assert_eq!(c.value, rat(1, 3)); // ceil(7/3) = 3
    }

    #[test]
    fn plan_examples() {
        let p = plan(10, 2, 2).unwrap();
        assert_eq!((p.protocol, p.download_symbols), (Protocol::Gpc, 7));
        assert_eq!(p.rate, rat(2, 7));

        let p = plan(5, 2, 2).unwrap();
        assert_eq!((p.protocol, p.download_symbols), (Protocol::Grs, 3));

        let p = plan(4, 2, 1).unwrap();
        assert_eq!((p.protocol, p.download_symbols), (Protocol::Grs, 3));

        // tie broken toward GRS
        let p = plan(6, 2, 2).unwrap();
        assert_eq!((p.protocol, p.download_symbols), (Protocol::Grs, 4));
    }

    #[test]
    fn plan_meets_capacity_bound_on_small_grid() {
        for k in 1..=40usize {
            for d in 1..=k {
                for m_side in 0..=k - d {
                    let c = capacity_value(k, d, m_side).unwrap();
                    let p = plan(k, d, m_side).unwrap();
                    assert_eq!(p.rate, c.value, "K={k} D={d} M={m_side}");
                    if d > m_side {
                        assert_eq!(c.kind, BoundKind::Exact);
                        assert_eq!(p.download_symbols, k - m_side);
                    }
                }
            }
        }
    }

    #[test]
    fn single_demand_capacity_is_ceiling_inverse() {
        for k in 1..=60usize {
            for m_side in 0..k {
                let c = capacity_value(k, 1, m_side).unwrap();
                assert_eq!(c.value, rat(1, k.div_ceil(m_side + 1)), "K={k} M={m_side}");
            }
        }
    }

    #[test]
    fn capacity_monotone_in_side_information() {
        for k in 1..=30usize {
            for d in 1..=k {
                let mut prev = None;
                for m_side in 0..=k - d {
                    let c = capacity_value(k, d, m_side).unwrap().value;
                    if let Some(p) = prev {
                        assert!(c >= p, "K={k} D={d} M={m_side}");
                    }
                    prev = Some(c);
                }
            }
        }
    }

    #[test]
    fn appendix_identity_examples_and_sweep() {
        assert!(appendix_premise(6, 2) && appendix_identity(6, 2)); // 6-4 = 2 = ceil(6/3)
        assert!(appendix_premise(7, 2) && appendix_identity(7, 2)); // 7-4 = 3 = ceil(7/3)
        assert!(appendix_premise(5, 1) && appendix_identity(5, 1)); // 5-2 = 3 = ceil(5/2)
        for k in 1..=500usize {
            for m_side in 0..k {
                if appendix_premise(k, m_side) {
                    assert!(appendix_identity(k, m_side), "K={k} M={m_side}");
                }
            }
        }
    }

    #[test]
    fn remark3_examples_and_equality_sweep() {
        assert_eq!(remark3_simplification(12, 2, 4).unwrap(), rat(1, 3));
        assert_eq!(remark3_simplification(6, 2, 2).unwrap(), rat(1, 2));
        assert!(matches!(
            remark3_simplification(9, 3, 3),
            Err(Error::DivisibilityNotSatisfied)
        ));

        for k in 1..=60usize {
            for d in 1..=k {
                for m_side in 0..=k - d {
                    if m_side % d != 0 || k % (d + m_side / d) != 0 {
                        continue;
                    }
                    let simplified = remark3_simplification(k, d, m_side).unwrap();
                    let full = capacity_value(k, d, m_side).unwrap().value;
                    assert_eq!(simplified, full, "K={k} D={d} M={m_side}");
                    // the GPC branch wins exactly when M <= K - D^2
                    if m_side >= d {
                        let beta_rate = rat(d + m_side / d, k);
                        let grs_rate = rat(d, k - m_side);
                        if k >= d * d && m_side <= k - d * d {
                            assert!(beta_rate >= grs_rate);
                        } else {
                            assert!(grs_rate >= beta_rate);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sigma_branch_condition_equivalence() {
        // sigma = 0 iff (K-D)/beta <= floor(K/beta) iff rho <= D
        for k in 1..=40usize {
            for d in 1..=k {
                for m_side in d..=k.saturating_sub(d) {
                    let p = crate::gpc::gpc_params(k, d, m_side).unwrap();
                    let branch = k - d <= p.beta * p.gamma;
                    assert_eq!(p.sigma == 0, branch, "K={k} D={d} M={m_side}");
                    assert_eq!(p.sigma == 0, p.rho <= d, "K={k} D={d} M={m_side}");
                }
            }
        }
    }
}
