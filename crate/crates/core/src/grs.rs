//! The GRS Code protocol: a deterministic coded-download scheme.
//!
//! The client asks for the K-M rows of a Vandermonde code applied to the
//! whole database; after subtracting its M side-information messages it is
//! left with a square Vandermonde system over the K-M messages it does not
//! hold, and recovers all of them. The query depends only on (K, M, q) —
//! never on which messages are wanted or held — which is the entire privacy
//! argument: every client with the same instance parameters sends the same
//! bytes.
//!
//! Applicable whenever q >= K; it downloads K-M symbols for any demand
//! size D, which is optimal when D > M.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::gf::{FieldParams, Fq, Message};
use crate::linalg::{solve_square, vandermonde, MatrixFq};

/// The deterministic GRS query: evaluation points 0, 1, ..., K-1 and the
/// row count K-M.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrsQuery {
    fp: FieldParams,
    k: usize,
    m_side: usize,
    omegas: Vec<Fq>,
}

impl GrsQuery {
    pub fn fp(&self) -> FieldParams {
        self.fp
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m_side(&self) -> usize {
        self.m_side
    }

    /// Number of downloaded symbols, K - M.
    pub fn num_rows(&self) -> usize {
        self.k - self.m_side
    }

    pub fn omegas(&self) -> &[Fq] {
        &self.omegas
    }

    /// The (K-M) x K coefficient matrix behind the answer.
    pub fn coefficient_matrix(&self) -> MatrixFq {
        vandermonde(&self.omegas, self.num_rows()).expect("canonical points are distinct")
    }
}

/// The server's answer: K-M coded symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrsAnswer {
    pub symbols: Vec<Message>,
}

/// Builds the query for a database of `k` messages when the client holds
/// `m_side` of them. The evaluation points are fixed to 0..K-1, so the
/// query is a pure function of (K, M, q): byte equality across all
/// (demand, side-information) pairs is checkable directly.
pub fn grs_query(k: usize, m_side: usize, fp: FieldParams) -> Result<GrsQuery> {
    if k == 0 || m_side >= k {
        return Err(Error::InvalidInstance(format!(
            "need 0 <= M < K, got K = {k}, M = {m_side}"
        )));
    }
    if fp.q() < k as u64 {
        return Err(Error::FieldTooSmall {
            q: fp.q(),
            needed: k as u64,
        });
    }
    let single = FieldParams::new(fp.q(), 1)?;
    let omegas: Vec<Fq> = (0..k as u64).map(|v| single.elem(v)).collect();
    Ok(GrsQuery {
        fp,
        k,
        m_side,
        omegas,
    })
}

/// Server side: symbol i is the omega^(i-1)-weighted sum of the whole
/// database.
pub fn grs_answer(query: &GrsQuery, db: &[Message]) -> Result<GrsAnswer> {
    if db.len() != query.k {
        return Err(Error::DimensionMismatch(format!(
            "query is for K = {}, database has {} messages",
            query.k,
            db.len()
        )));
    }
    let mat = query.coefficient_matrix();
    let symbols = mat.apply(db)?;
    Ok(GrsAnswer { symbols })
}

/// Client side: subtracts the side-information contribution from every
/// symbol and solves the remaining square Vandermonde system.
///
/// Returns every message outside the side information — the full
/// complement [K] \ S, not only the demand. `side_info` maps 1-based
/// message indices to their values and must have exactly M entries.
///
/// A singular system here is impossible (any square submatrix of the
/// Vandermonde with distinct points is invertible), so that case aborts.
pub fn grs_decode(
    query: &GrsQuery,
    answer: &GrsAnswer,
    side_info: &BTreeMap<usize, Message>,
) -> Result<BTreeMap<usize, Message>> {
    if side_info.len() != query.m_side {
        return Err(Error::DimensionMismatch(format!(
            "expected {} side-information messages, got {}",
            query.m_side,
            side_info.len()
        )));
    }
    if answer.symbols.len() != query.num_rows() {
        return Err(Error::DimensionMismatch(format!(
            "expected {} answer symbols, got {}",
            query.num_rows(),
            answer.symbols.len()
        )));
    }
    for (&idx, msg) in side_info {
        if idx == 0 || idx > query.k {
            return Err(Error::DimensionMismatch(format!(
                "side-information index {} out of range 1..={}",
                idx, query.k
            )));
        }
        if msg.len() != query.fp.m() {
            return Err(Error::DimensionMismatch(
                "side-information message has the wrong length".into(),
            ));
        }
    }

    let unknown: Vec<usize> = (1..=query.k)
        .filter(|idx| !side_info.contains_key(idx))
        .collect();
    debug_assert_eq!(unknown.len(), query.num_rows());

    // rhs_i = A_i - sum_{j in S} omega_j^(i-1) X_j
    let mut rhs = Vec::with_capacity(query.num_rows());
    for (i, symbol) in answer.symbols.iter().enumerate() {
        let mut acc = symbol.clone();
        for (&idx, msg) in side_info {
            let coeff = query.omegas[idx - 1].pow(i as u64);
            acc = acc.sub(&msg.scale(&coeff)?)?;
        }
        rhs.push(acc);
    }

    let sub_rows: Vec<Vec<u64>> = (0..query.num_rows())
        .map(|i| {
            unknown
                .iter()
                .map(|&idx| query.omegas[idx - 1].pow(i as u64).value())
                .collect()
        })
        .collect();
    let sub = MatrixFq::from_rows(&sub_rows, unknown.len(), query.fp.q())?;
    let solved = solve_square(&sub, &rhs)
        .expect("Vandermonde submatrix with distinct points cannot be singular");

    Ok(unknown.into_iter().zip(solved).collect())
}

/// The demand set is recoverable whenever it avoids the side information;
/// helper used by tests and the experiment runner.
pub fn demand_is_recoverable(demand: &BTreeSet<usize>, side: &BTreeSet<usize>) -> bool {
    demand.is_disjoint(side)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(q: u64, m: usize) -> FieldParams {
        FieldParams::new(q, m).unwrap()
    }

    #[test]
    fn query_construction_examples() {
        let q = grs_query(3, 1, fp(5, 1)).unwrap();
        assert_eq!(q.num_rows(), 2);
        assert_eq!(
            q.omegas().iter().map(Fq::value).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );

        let degenerate = grs_query(1, 0, fp(2, 1)).unwrap();
        let mat = degenerate.coefficient_matrix();
        assert_eq!(mat.rows(), 1);
        assert_eq!(mat.row_values(0), &[1]);

        let wide = grs_query(10, 2, fp(11, 1)).unwrap();
        assert_eq!(wide.num_rows(), 8); // download count K - M
        assert_eq!(wide.coefficient_matrix().rows(), 8);

        assert!(matches!(
            grs_query(10, 2, fp(5, 1)),
            Err(Error::FieldTooSmall { q: 5, needed: 10 })
        ));
    }

    /// Direct evaluation oracle: A_i = sum_j j^(i-1) X_j with plain loops.
    fn answer_oracle(qmod: u64, db: &[u64], num_rows: usize) -> Vec<u64> {
        (0..num_rows)
            .map(|i| {
                db.iter()
                    .enumerate()
                    .map(|(j, &x)| {
                        crate::gf::mod_mul(crate::gf::mod_pow(j as u64, i as u64, qmod), x, qmod)
                    })
                    .fold(0, |acc, v| crate::gf::mod_add(acc, v, qmod))
            })
            .collect()
    }

    #[test]
    fn answer_matches_direct_evaluation() {
        let f = fp(5, 1);
        let db = vec![
            f.message(&[4]).unwrap(),
            f.message(&[1]).unwrap(),
            f.message(&[3]).unwrap(),
        ];
        let query = grs_query(3, 1, f).unwrap();
        let answer = grs_answer(&query, &db).unwrap();
        let expect = answer_oracle(5, &[4, 1, 3], 2);
        assert_eq!(expect, vec![3, 2]); // 4+1+3 = 8 = 3; 0*4 + 1 + 2*3 = 7 = 2
        let got: Vec<u64> = answer.symbols.iter().map(|s| s.values()[0]).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn answer_identity_and_zero_cases() {
        let f = fp(2, 3);
        let db = vec![f.message(&[1, 0, 1]).unwrap()];
        let query = grs_query(1, 0, f).unwrap();
        let answer = grs_answer(&query, &db).unwrap();
        assert_eq!(answer.symbols, db);

        let f5 = fp(5, 2);
        let zeros = vec![f5.zero_message(); 4];
        let query = grs_query(4, 1, f5).unwrap();
        let answer = grs_answer(&query, &zeros).unwrap();
        assert!(answer.symbols.iter().all(|s| s.values() == vec![0, 0]));
    }

    #[test]
    fn decode_hand_example() {
        // From A = (3, 2) and X_1 = 4 recover X_2 = 1, X_3 = 3.
        let f = fp(5, 1);
        let db = vec![
            f.message(&[4]).unwrap(),
            f.message(&[1]).unwrap(),
            f.message(&[3]).unwrap(),
        ];
        let query = grs_query(3, 1, f).unwrap();
        let answer = grs_answer(&query, &db).unwrap();
        let side: BTreeMap<usize, Message> = [(1usize, db[0].clone())].into_iter().collect();
        let recovered = grs_decode(&query, &answer, &side).unwrap();
        assert_eq!(recovered.len(), 2);
        assert_eq!(recovered[&2], db[1]);
        assert_eq!(recovered[&3], db[2]);
    }

    #[test]
    fn decode_with_no_side_info_returns_whole_database() {
        let f = fp(7, 1);
        let db: Vec<Message> = [3u64, 0, 6, 2]
            .iter()
            .map(|&v| f.message(&[v]).unwrap())
            .collect();
        let query = grs_query(4, 0, f).unwrap();
        let answer = grs_answer(&query, &db).unwrap();
        assert_eq!(answer.symbols.len(), 4); // downloads all K units
        let recovered = grs_decode(&query, &answer, &BTreeMap::new()).unwrap();
        for (idx, msg) in db.iter().enumerate() {
            assert_eq!(&recovered[&(idx + 1)], msg);
        }
    }

    #[test]
    fn decode_round_trip_all_small_instances() {
        use itertools::Itertools;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for k in 1..=6usize {
            for m_side in 0..k {
                let q = [2u64, 3, 5, 7, 7, 7, 7][k];
                let f = fp(q, 2);
                let db: Vec<Message> = (0..k)
                    .map(|_| {
                        f.message(&[rng.random_range(0..q), rng.random_range(0..q)])
                            .unwrap()
                    })
                    .collect();
                let query = grs_query(k, m_side, f).unwrap();
                let answer = grs_answer(&query, &db).unwrap();
                // every S of size M recovers the full complement
                for s in (1..=k).combinations(m_side) {
                    let side: BTreeMap<usize, Message> =
                        s.iter().map(|&idx| (idx, db[idx - 1].clone())).collect();
                    let recovered = grs_decode(&query, &answer, &side).unwrap();
                    assert_eq!(recovered.len(), k - m_side);
                    for (idx, msg) in recovered {
                        assert_eq!(msg, db[idx - 1]);
                    }
                }
            }
        }
    }
}
