//! Single-server multi-message private information retrieval with side
//! information (PIR-SI).
//!
//! A client wants D messages out of a database of K, already holds M other
//! messages, and must not reveal which D it wants. This crate implements
//! the two protocols that make that possible over a single server — the
//! deterministic GRS Code protocol and the randomized Generalized
//! Partition and Code (GPC) protocol — together with a capacity planner
//! that picks between them, and an auditor that verifies the privacy and
//! recoverability claims by exact computation at desk scale.
//!
//! Everything is exact: field arithmetic over F_q, message vectors over
//! F_{q^m}, and probabilities/rates as arbitrary-precision rationals.
//! Message indices are 1-based throughout the public API, matching the
//! wire and file formats.

pub mod capacity;
pub mod error;
pub mod gf;
pub mod gpc;
pub mod grs;
pub mod io;
pub mod linalg;
pub mod privacy;

pub use error::{Error, Result};
pub use gf::{FieldParams, Fq, Message};

use std::collections::BTreeSet;

/// One problem instance: database size K, demand size D, side-information
/// size M, and the field the messages live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceParams {
    pub k: usize,
    pub d: usize,
    pub m_side: usize,
    pub fp: FieldParams,
}

impl InstanceParams {
    pub fn new(k: usize, d: usize, m_side: usize, fp: FieldParams) -> Result<Self> {
        validate_instance(k, d, m_side)?;
        Ok(InstanceParams { k, d, m_side, fp })
    }
}

/// Checks 1 <= D and D + M <= K.
pub fn validate_instance(k: usize, d: usize, m_side: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidInstance("demand size D must be >= 1".into()));
    }
    if d + m_side > k {
        return Err(Error::InvalidInstance(format!(
            "need D + M <= K, got D = {d}, M = {m_side}, K = {k}"
        )));
    }
    Ok(())
}

/// Checks that `demand` and `side` are valid index sets for an instance:
/// 1-based, inside [K], disjoint, with the expected cardinalities.
pub fn validate_index_sets(
    k: usize,
    d: usize,
    m_side: usize,
    demand: &BTreeSet<usize>,
    side: &BTreeSet<usize>,
) -> Result<()> {
    validate_instance(k, d, m_side)?;
    if demand.len() != d {
        return Err(Error::InvalidInstance(format!(
            "demand set has {} indices, expected D = {d}",
            demand.len()
        )));
    }
    if side.len() != m_side {
        return Err(Error::InvalidInstance(format!(
            "side-information set has {} indices, expected M = {m_side}",
            side.len()
        )));
    }
    if !demand.is_disjoint(side) {
        return Err(Error::InvalidInstance(
            "demand and side-information sets overlap".into(),
        ));
    }
    for &idx in demand.iter().chain(side.iter()) {
        if idx == 0 || idx > k {
            return Err(Error::InvalidInstance(format!(
                "index {idx} out of range 1..={k}"
            )));
        }
    }
    Ok(())
}

/// A protocol query, either flavor. The wire layer and the auditor both
/// work over this union.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtocolQuery {
    Grs(grs::GrsQuery),
    Gpc(gpc::GpcQuery),
}

impl ProtocolQuery {
    pub fn fp(&self) -> FieldParams {
        match self {
            ProtocolQuery::Grs(q) => q.fp(),
            ProtocolQuery::Gpc(q) => q.fp(),
        }
    }

    /// Database size the query addresses.
    pub fn k(&self) -> usize {
        match self {
            ProtocolQuery::Grs(q) => q.k(),
            ProtocolQuery::Gpc(q) => q.k(),
        }
    }

    /// Total number of symbols the answer will carry.
    pub fn download_symbols(&self) -> usize {
        match self {
            ProtocolQuery::Grs(q) => q.num_rows(),
            ProtocolQuery::Gpc(q) => q.download_symbols(),
        }
    }
}

/// A protocol answer, either flavor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtocolAnswer {
    Grs(grs::GrsAnswer),
    Gpc(gpc::GpcAnswer),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_validation() {
        let fp = FieldParams::new(5, 1).unwrap();
        assert!(InstanceParams::new(10, 2, 2, fp).is_ok());
        assert!(matches!(
            InstanceParams::new(3, 2, 2, fp),
            Err(Error::InvalidInstance(_))
        ));
        assert!(matches!(
            InstanceParams::new(3, 0, 1, fp),
            Err(Error::InvalidInstance(_))
        ));
    }

    #[test]
    fn index_set_validation() {
        let demand: BTreeSet<usize> = [3, 4].into_iter().collect();
        let side: BTreeSet<usize> = [5, 8].into_iter().collect();
        assert!(validate_index_sets(10, 2, 2, &demand, &side).is_ok());
        let overlap: BTreeSet<usize> = [4, 5].into_iter().collect();
        assert!(validate_index_sets(10, 2, 2, &demand, &overlap).is_err());
        let out_of_range: BTreeSet<usize> = [5, 11].into_iter().collect();
        assert!(validate_index_sets(10, 2, 2, &demand, &out_of_range).is_err());
        assert!(validate_index_sets(10, 1, 2, &demand, &side).is_err());
    }
}
