//! Recoverability audits on linear answer maps.
//!
//! Both protocols answer with F_q-linear combinations of the database, so
//! the entire answer is one coefficient matrix (rows = downloaded symbols,
//! columns = messages) and every entropy condition on a linear protocol
//! becomes an exact span condition on that matrix:
//!
//! * necessary condition — for each candidate demand set W* there must be
//!   some witness side-information set S* from which X_{W*} is
//!   recoverable, or the server could rule W* out and privacy would fail;
//! * full recovery — with the actual side information S, the whole
//!   complement of S is recoverable. Forced for D > M; genuinely violated
//!   by GPC runs whose blocks carry no side information, which is exactly
//!   what lets GPC beat K - M downloads.

use std::collections::BTreeSet;

use itertools::Itertools;

use crate::gpc::GpcQuery;
use crate::grs::GrsQuery;
use crate::linalg::{units_in_span, MatrixFq};
use crate::ProtocolQuery;

/// The coefficient matrix of a protocol answer: entry (r, k) is the
/// coefficient of message k in downloaded symbol r.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerMatrix {
    matrix: MatrixFq,
}

impl AnswerMatrix {
    pub fn new(matrix: MatrixFq) -> Self {
        AnswerMatrix { matrix }
    }

    pub fn matrix(&self) -> &MatrixFq {
        &self.matrix
    }

    pub fn download_symbols(&self) -> usize {
        self.matrix.rows()
    }

    pub fn k(&self) -> usize {
        self.matrix.cols()
    }
}

fn linearize_grs(query: &GrsQuery) -> AnswerMatrix {
    AnswerMatrix::new(query.coefficient_matrix())
}

fn linearize_gpc(query: &GpcQuery) -> AnswerMatrix {
    let k = query.k();
    let q = query.fp().q();
    let mut rows: Vec<Vec<u64>> = Vec::with_capacity(query.download_symbols());
    for (b, block) in query.blocks().iter().enumerate() {
        let (row_count, coeffs) = if b == 0 {
            (query.rows0(), query.qprime())
        } else {
            (query.rowsi(), query.qdprime())
        };
        for j in 0..row_count {
            let mut row = vec![0u64; k];
            for (l, &idx) in block.iter().enumerate() {
                row[idx - 1] = coeffs.get_raw(j, l);
            }
            rows.push(row);
        }
    }
    AnswerMatrix::new(MatrixFq::from_rows(&rows, k, q).expect("rows built with width k"))
}

/// Expresses a query's answer map as a coefficient matrix. The GPC blocks
/// occupy disjoint column supports.
pub fn linearize(query: &ProtocolQuery) -> AnswerMatrix {
    match query {
        ProtocolQuery::Grs(q) => linearize_grs(q),
        ProtocolQuery::Gpc(q) => linearize_gpc(q),
    }
}

/// Audit outcome for one candidate demand set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandWitness {
    pub demand: Vec<usize>,
    /// The first witness side-information set that recovers the demand,
    /// if any.
    pub witness: Option<Vec<usize>>,
}

/// Report of the necessary-condition audit over every candidate demand.
#[derive(Debug, Clone)]
pub struct NecessaryConditionReport {
    pub d: usize,
    pub m_side: usize,
    pub entries: Vec<DemandWitness>,
}

impl NecessaryConditionReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.witness.is_some())
    }

    pub fn failures(&self) -> impl Iterator<Item = &DemandWitness> {
        self.entries.iter().filter(|e| e.witness.is_none())
    }
}

/// For every candidate demand set W* of size D, searches for a witness
/// S* of size M (disjoint from W*) such that X_{W*} is recoverable from
/// the answer plus X_{S*}. Report-only: a protocol-generated matrix that
/// fails any entry has a correctness bug.
pub fn audit_necessary_condition(
    mat: &AnswerMatrix,
    d: usize,
    m_side: usize,
) -> NecessaryConditionReport {
    let k = mat.k();
    let mut entries = Vec::new();
    for demand in (1..=k).combinations(d) {
        let demand_set: BTreeSet<usize> = demand.iter().copied().collect();
        let witness = (1..=k)
            .filter(|idx| !demand_set.contains(idx))
            .combinations(m_side)
            .find(|candidate| {
                let side: BTreeSet<usize> = candidate.iter().copied().collect();
                units_in_span(mat.matrix(), &side, &demand_set).expect("indices generated in range")
            });
        entries.push(DemandWitness { demand, witness });
    }
    NecessaryConditionReport { d, m_side, entries }
}

/// Is every message outside `side` recoverable from the answer plus
/// X_side? True for every GRS run; for GPC runs with D <= M this can be
/// false — blocks without side information have more unknowns than
/// equations — which is precisely why those instances escape the
/// download-everything converse.
pub fn audit_full_recovery(mat: &AnswerMatrix, side: &BTreeSet<usize>) -> bool {
    let complement: BTreeSet<usize> = (1..=mat.k()).filter(|idx| !side.contains(idx)).collect();
    units_in_span(mat.matrix(), side, &complement).expect("indices generated in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::FieldParams;
    use crate::gpc::{gpc_params, gpc_query, PartitionTrace};
    use crate::grs::grs_query;
    use crate::linalg::rank;

    fn fp(q: u64) -> FieldParams {
        FieldParams::new(q, 1).unwrap()
    }

    fn set(indices: &[usize]) -> BTreeSet<usize> {
        indices.iter().copied().collect()
    }

    fn k10_query() -> ProtocolQuery {
        let params = gpc_params(10, 2, 2).unwrap();
        let trace = PartitionTrace {
            blocks: vec![
                set(&[2]),
                set(&[4, 6, 8]),
                set(&[3, 5, 7]),
                set(&[1, 9, 10]),
            ],
            demand_placement: vec![0, 1, 1, 0],
            placed_side_info: vec![set(&[]), set(&[8]), set(&[5]), set(&[])],
        };
        ProtocolQuery::Gpc(gpc_query(&trace, &params, fp(5)).unwrap())
    }

    #[test]
    fn linearize_grs_is_the_vandermonde() {
        let query = grs_query(3, 1, fp(5)).unwrap();
        let mat = linearize(&ProtocolQuery::Grs(query));
        assert_eq!(mat.download_symbols(), 2);
        assert_eq!(mat.matrix().row_values(0), &[1, 1, 1]);
        assert_eq!(mat.matrix().row_values(1), &[0, 1, 2]);
    }

    #[test]
    fn linearize_gpc_worked_example_rows() {
        // K = 5 partition {3,5} | {1,2,4}: rows e3+e5, e5, e1+e2+e4, e2+2e4
        let params = gpc_params(5, 2, 2).unwrap();
        let trace = PartitionTrace {
            blocks: vec![set(&[3, 5]), set(&[1, 2, 4])],
            demand_placement: vec![1, 1],
            placed_side_info: vec![set(&[]), set(&[1])],
        };
        let query = ProtocolQuery::Gpc(gpc_query(&trace, &params, fp(5)).unwrap());
        let mat = linearize(&query);
        assert_eq!(mat.download_symbols(), 4);
        assert_eq!(mat.matrix().row_values(0), &[0, 0, 1, 0, 1]);
        assert_eq!(mat.matrix().row_values(1), &[0, 0, 0, 0, 1]);
        assert_eq!(mat.matrix().row_values(2), &[1, 1, 0, 1, 0]);
        assert_eq!(mat.matrix().row_values(3), &[0, 1, 0, 2, 0]);

        // zero database maps to a zero answer under the matrix
        let f = FieldParams::new(5, 1).unwrap();
        let zeros = vec![f.zero_message(); 5];
        let symbols = mat.matrix().apply(&zeros).unwrap();
        assert!(symbols.iter().all(|s| s.values() == vec![0]));
    }

    #[test]
    fn necessary_condition_passes_for_grs() {
        for (k, m_side, d) in [(4usize, 1usize, 2usize), (5, 2, 3), (6, 2, 2)] {
            let query = grs_query(k, m_side, fp(7)).unwrap();
            let mat = linearize(&ProtocolQuery::Grs(query));
            assert_eq!(rank(mat.matrix()), k - m_side);
            let report = audit_necessary_condition(&mat, d, m_side);
            assert!(report.all_pass(), "K={k} M={m_side} D={d}");
        }
    }

    #[test]
    fn necessary_condition_passes_for_the_k10_example() {
        let mat = linearize(&k10_query());
        let report = audit_necessary_condition(&mat, 2, 2);
        assert!(report.all_pass());
        assert_eq!(report.entries.len(), 45);
    }

    #[test]
    fn empty_answer_fails_everything() {
        // downloading nothing with M = 0 cannot satisfy the condition
        let mat = AnswerMatrix::new(MatrixFq::zero(0, 4, 5));
        let report = audit_necessary_condition(&mat, 1, 0);
        assert!(!report.all_pass());
        assert!(report.failures().count() == 4);
    }

    #[test]
    fn full_recovery_for_grs_and_identity() {
        use itertools::Itertools;
        let query = grs_query(5, 2, fp(7)).unwrap();
        let mat = linearize(&ProtocolQuery::Grs(query));
        for s in (1..=5usize).combinations(2) {
            let side: BTreeSet<usize> = s.into_iter().collect();
            assert!(audit_full_recovery(&mat, &side));
        }

        let id_rows: Vec<Vec<u64>> = (0..4)
            .map(|i| (0..4).map(|j| u64::from(i == j)).collect())
            .collect();
        let id = AnswerMatrix::new(MatrixFq::from_rows(&id_rows, 4, 5).unwrap());
        for s in (1..=4usize).combinations(1) {
            let side: BTreeSet<usize> = s.into_iter().collect();
            assert!(audit_full_recovery(&id, &side));
        }
    }

    #[test]
    fn full_recovery_fails_for_gpc_with_empty_side_blocks() {
        // the K = 10 run with S = {5, 8}: block {1, 9, 10} has two
        // equations and three unknowns, so X_1, X_9, X_10 stay hidden
        let mat = linearize(&k10_query());
        assert!(!audit_full_recovery(&mat, &set(&[5, 8])));
    }
}
