//! The Generalized Partition and Code (GPC) protocol.
//!
//! The client partitions the K message indices into one block of size
//! rho = K - beta*gamma and gamma blocks of size beta = D + floor(M/D),
//! hiding each demanded index among deliberately co-located side
//! information inside its block. The server returns a short Vandermonde
//! code per block; demand-bearing blocks decode locally after the known
//! side information is subtracted. Randomizing the construction makes
//! every partition equally likely regardless of the demand, which is the
//! privacy argument — verified exactly by the `privacy` module.
//!
//! Offered only for D <= M (the planner uses the GRS protocol otherwise);
//! it downloads (rho - sigma) + gamma*D symbols, fewer than K - M for many
//! instances.
//!
//! All randomness flows through one caller-supplied seedable generator;
//! integer draws are exactly uniform, so the trace distribution is
//! enumerable with exact probabilities (see `privacy::enumeration`).

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gf::{FieldParams, Message};
use crate::linalg::{canonical_vandermonde, solve_square, MatrixFq};
use crate::validate_index_sets;

/// Derived parameters of a GPC instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GpcParams {
    pub k: usize,
    pub d: usize,
    pub m_side: usize,
    /// alpha = floor(M / D): side-information indices placed next to the
    /// demands in each demand-bearing block.
    pub alpha: usize,
    /// beta = D + alpha: size of each of the gamma blocks.
    pub beta: usize,
    /// gamma = floor(K / beta): number of full blocks.
    pub gamma: usize,
    /// rho = K - beta * gamma: size of the leftover block Q_0.
    pub rho: usize,
    /// sigma = max(rho - D, 0): side-information count for Q_0 when it
    /// carries a demand.
    pub sigma: usize,
}

/// Computes alpha, beta, gamma, rho, sigma for an instance with D <= M.
pub fn gpc_params(k: usize, d: usize, m_side: usize) -> Result<GpcParams> {
    if d == 0 {
        return Err(Error::InvalidInstance("demand size D must be >= 1".into()));
    }
    if d > m_side {
        return Err(Error::UseGrsInstead);
    }
    if m_side > k.saturating_sub(d) {
        return Err(Error::InvalidInstance(format!(
            "need M <= K - D, got K = {k}, D = {d}, M = {m_side}"
        )));
    }
    let alpha = m_side / d;
    let beta = d + alpha;
    let gamma = k / beta;
    let rho = k - beta * gamma;
    let sigma = rho.saturating_sub(d);
    debug_assert!(rho < beta);
    debug_assert!(sigma == 0 || sigma < alpha);
    debug_assert_eq!(sigma > 0, rho > d);
    Ok(GpcParams {
        k,
        d,
        m_side,
        alpha,
        beta,
        gamma,
        rho,
        sigma,
    })
}

impl GpcParams {
    /// Total downloaded symbols: (rho - sigma) + gamma * D.
    pub fn download_symbols(&self) -> usize {
        (self.rho - self.sigma) + self.gamma * self.d
    }

    /// Block sizes in construction order: rho, then gamma copies of beta.
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.rho];
        sizes.extend(std::iter::repeat_n(self.beta, self.gamma));
        sizes
    }

    /// How many side-information indices a demand-bearing block receives:
    /// sigma for Q_0, alpha for the others.
    pub fn side_quota(&self, block: usize) -> usize {
        if block == 0 {
            self.sigma
        } else {
            self.alpha
        }
    }
}

/// Full record of one randomized partition: final block contents plus the
/// two pieces of construction state the client needs to reason about it —
/// how many demands landed in each block and which side-information
/// indices were placed deliberately. The trace never leaves the client;
/// only the canonicalized partition goes on the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionTrace {
    /// blocks[0] = Q_0 (rho indices), blocks[i] = Q_i (beta indices each),
    /// in construction order.
    pub blocks: Vec<BTreeSet<usize>>,
    /// demand_placement[b] = n_b, demands placed into block b.
    pub demand_placement: Vec<usize>,
    /// placed_side_info[b] = side-information indices deliberately placed
    /// into block b (sigma or alpha of them when n_b > 0, none otherwise).
    pub placed_side_info: Vec<BTreeSet<usize>>,
}

impl PartitionTrace {
    /// Number of demand-bearing blocks among Q_1..Q_gamma.
    pub fn lambda(&self) -> usize {
        self.demand_placement[1..]
            .iter()
            .filter(|&&n| n > 0)
            .count()
    }

    /// Checks every structural invariant against the instance.
    pub fn validate(
        &self,
        params: &GpcParams,
        demand: &BTreeSet<usize>,
        side: &BTreeSet<usize>,
    ) -> Result<()> {
        let sizes = params.block_sizes();
        if self.blocks.len() != sizes.len()
            || self.demand_placement.len() != sizes.len()
            || self.placed_side_info.len() != sizes.len()
        {
            return Err(Error::InvalidInstance("trace has wrong block count".into()));
        }
        let mut seen = BTreeSet::new();
        for (block, &size) in self.blocks.iter().zip(&sizes) {
            if block.len() != size {
                return Err(Error::InvalidInstance("block has wrong size".into()));
            }
            for &idx in block {
                if idx == 0 || idx > params.k || !seen.insert(idx) {
                    return Err(Error::InvalidInstance(
                        "blocks do not partition the index set".into(),
                    ));
                }
            }
        }
        if seen.len() != params.k {
            return Err(Error::InvalidInstance(
                "blocks do not cover the index set".into(),
            ));
        }
        if self.demand_placement.iter().sum::<usize>() != params.d {
            return Err(Error::InvalidInstance(
                "demand counts do not sum to D".into(),
            ));
        }
        if self.demand_placement[0] > params.rho - params.sigma {
            return Err(Error::InvalidInstance("n_0 exceeds rho - sigma".into()));
        }
        let mut deliberate_total = 0;
        for (b, block) in self.blocks.iter().enumerate() {
            let n_b = self.demand_placement[b];
            if block.intersection(demand).count() != n_b {
                return Err(Error::InvalidInstance(
                    "demand placement disagrees with block contents".into(),
                ));
            }
            let placed = &self.placed_side_info[b];
            let quota = if n_b > 0 { params.side_quota(b) } else { 0 };
            if placed.len() != quota {
                return Err(Error::InvalidInstance(
                    "deliberate side-information count is off-quota".into(),
                ));
            }
            if !placed.is_subset(side) || !placed.is_subset(block) {
                return Err(Error::InvalidInstance(
                    "deliberate side information outside S or outside its block".into(),
                ));
            }
            deliberate_total += placed.len();
        }
        if deliberate_total > params.m_side {
            return Err(Error::InvalidInstance(
                "deliberate placements exceed M".into(),
            ));
        }
        Ok(())
    }
}

fn draw_distinct<R: Rng + ?Sized>(
    pool: &mut Vec<usize>,
    count: usize,
    rng: &mut R,
) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for _ in 0..count {
        let j = rng.random_range(0..pool.len());
        out.insert(pool.swap_remove(j));
    }
    out
}

/// Runs the randomized partition construction.
///
/// (a) D of the K position slots are chosen uniformly without replacement
/// and the demand indices are placed into them; (b) each demand-bearing
/// block draws its side-information quota (sigma for Q_0, alpha otherwise)
/// uniformly from the not-yet-placed part of S; (c) every remaining index
/// is scattered uniformly over the remaining slots.
pub fn gpc_partition<R: Rng + ?Sized>(
    demand: &BTreeSet<usize>,
    side: &BTreeSet<usize>,
    params: &GpcParams,
    rng: &mut R,
) -> Result<PartitionTrace> {
    validate_index_sets(params.k, params.d, params.m_side, demand, side)?;

    let sizes = params.block_sizes();
    let num_blocks = sizes.len();

    // Slot b-values: rho slots of block 0, then beta slots per block.
    let slot_block: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();

    // (a) choose D slots uniformly, then place the demands (sorted) into
    // them; the composite is a uniform injection of W into the slots.
    let mut slot_order: Vec<usize> = (0..params.k).collect();
    for i in 0..params.d {
        let j = rng.random_range(i..params.k);
        slot_order.swap(i, j);
    }
    let mut blocks: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); num_blocks];
    let mut demand_placement = vec![0usize; num_blocks];
    for (w, &slot) in demand.iter().zip(&slot_order[..params.d]) {
        let b = slot_block[slot];
        blocks[b].insert(*w);
        demand_placement[b] += 1;
    }

    // (b) deliberate side-information placement per demand-bearing block.
    let mut side_pool: Vec<usize> = side.iter().copied().collect();
    let mut placed_side_info: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); num_blocks];
    for b in 0..num_blocks {
        if demand_placement[b] > 0 {
            let drawn = draw_distinct(&mut side_pool, params.side_quota(b), rng);
            blocks[b].extend(drawn.iter().copied());
            placed_side_info[b] = drawn;
        }
    }

    // (c) scatter everything else uniformly over the remaining slots.
    let placed: BTreeSet<usize> = blocks.iter().flatten().copied().collect();
    let mut rest: Vec<usize> = (1..=params.k).filter(|idx| !placed.contains(idx)).collect();
    rest.shuffle(rng);
    let mut cursor = 0;
    for (b, &size) in sizes.iter().enumerate() {
        let free = size - blocks[b].len();
        blocks[b].extend(rest[cursor..cursor + free].iter().copied());
        cursor += free;
    }
    debug_assert_eq!(cursor, rest.len());

    let trace = PartitionTrace {
        blocks,
        demand_placement,
        placed_side_info,
    };
    debug_assert!(trace.validate(params, demand, side).is_ok());
    Ok(trace)
}

/// The canonical query sent to the server: the partition with blocks in
/// canonical order plus the two Vandermonde coefficient collections. It
/// carries nothing derived from the demand or the side information.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GpcQuery {
    fp: FieldParams,
    /// blocks[0] = Q_0 (possibly empty), ascending inside each block, and
    /// Q_1..Q_gamma ordered by minimum element.
    blocks: Vec<Vec<usize>>,
    /// rho - sigma rows for the Q_0 code.
    rows0: usize,
    /// D rows for each full-block code.
    rowsi: usize,
    /// (rho - sigma) x rho Vandermonde on 0..rho-1.
    qprime: MatrixFq,
    /// D x beta Vandermonde on 0..beta-1.
    qdprime: MatrixFq,
}

impl GpcQuery {
    pub fn fp(&self) -> FieldParams {
        self.fp
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn rows0(&self) -> usize {
        self.rows0
    }

    pub fn rowsi(&self) -> usize {
        self.rowsi
    }

    pub fn qprime(&self) -> &MatrixFq {
        &self.qprime
    }

    pub fn qdprime(&self) -> &MatrixFq {
        &self.qdprime
    }

    pub fn k(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn num_full_blocks(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn download_symbols(&self) -> usize {
        self.rows0 + self.num_full_blocks() * self.rowsi
    }

    /// Assembles a query directly from canonical parts (wire decoding).
    /// Validates that the blocks partition [1..=K], that blocks 1..
    /// share one size, and that the row counts fit the block sizes.
    pub fn from_parts(
        fp: FieldParams,
        blocks: Vec<Vec<usize>>,
        rows0: usize,
        rowsi: usize,
    ) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInstance("query has no blocks".into()));
        }
        let k: usize = blocks.iter().map(Vec::len).sum();
        let mut seen = BTreeSet::new();
        for block in &blocks {
            for &idx in block {
                if idx == 0 || idx > k || !seen.insert(idx) {
                    return Err(Error::InvalidInstance(
                        "blocks do not partition the index set".into(),
                    ));
                }
            }
        }
        let rho = blocks[0].len();
        let beta = blocks.get(1).map(Vec::len).unwrap_or(0);
        for block in &blocks[1..] {
            if block.len() != beta {
                return Err(Error::InvalidInstance(
                    "full blocks must share one size".into(),
                ));
            }
        }
        if rows0 > rho {
            return Err(Error::InvalidInstance(format!(
                "rows0 = {rows0} exceeds |Q_0| = {rho}"
            )));
        }
        if blocks.len() > 1 && (rowsi == 0 || rowsi > beta) {
            return Err(Error::InvalidInstance(format!(
                "rowsi = {rowsi} out of range 1..={beta}"
            )));
        }
        let largest = rho.max(beta);
        if fp.q() < largest as u64 {
            return Err(Error::FieldTooSmall {
                q: fp.q(),
                needed: largest as u64,
            });
        }
        let qprime = if rows0 == 0 {
            MatrixFq::zero(0, rho, fp.q())
        } else {
            canonical_vandermonde(fp.q(), rho, rows0)?
        };
        let qdprime = if blocks.len() > 1 {
            canonical_vandermonde(fp.q(), beta, rowsi)?
        } else {
            MatrixFq::zero(0, 0, fp.q())
        };
        let mut canonical: Vec<Vec<usize>> = blocks
            .into_iter()
            .map(|b| {
                let mut b = b;
                b.sort_unstable();
                b
            })
            .collect();
        canonical[1..].sort_by_key(|b| b.first().copied().unwrap_or(usize::MAX));
        Ok(GpcQuery {
            fp,
            blocks: canonical,
            rows0,
            rowsi,
            qprime,
            qdprime,
        })
    }
}

/// Canonical block rendering shared by the query and the enumeration
/// oracle: ascending inside each block, Q_0 first, the rest ordered by
/// minimum element. The transmitted query is a function of the unordered
/// partition only, so construction order cannot leak.
pub fn canonical_blocks(blocks: &[BTreeSet<usize>]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = blocks.iter().map(|b| b.iter().copied().collect()).collect();
    out[1..].sort_by_key(|b: &Vec<usize>| b.first().copied().unwrap_or(usize::MAX));
    out
}

/// Canonicalizes a trace into the query for the wire: the demand counts
/// and deliberate placements are dropped — the server must never see them.
pub fn gpc_query(trace: &PartitionTrace, params: &GpcParams, fp: FieldParams) -> Result<GpcQuery> {
    if fp.q() < params.beta as u64 {
        return Err(Error::FieldTooSmall {
            q: fp.q(),
            needed: params.beta as u64,
        });
    }
    GpcQuery::from_parts(
        fp,
        canonical_blocks(&trace.blocks),
        params.rho - params.sigma,
        params.d,
    )
}

/// The server's answer: rho - sigma symbols for Q_0 and D symbols per full
/// block, in canonical block order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GpcAnswer {
    pub a0: Vec<Message>,
    pub ai: Vec<Vec<Message>>,
}

impl GpcAnswer {
    pub fn total_symbols(&self) -> usize {
        self.a0.len() + self.ai.iter().map(Vec::len).sum::<usize>()
    }

    /// All symbols flattened in block order (the wire layout).
    pub fn flat_symbols(&self) -> Vec<Message> {
        let mut out = self.a0.clone();
        for block in &self.ai {
            out.extend(block.iter().cloned());
        }
        out
    }
}

/// Server side: applies each block's Vandermonde rows to the block's
/// messages in ascending index order (position l gets omega_l = l - 1).
pub fn gpc_answer(query: &GpcQuery, db: &[Message]) -> Result<GpcAnswer> {
    if db.len() != query.k() {
        return Err(Error::DimensionMismatch(format!(
            "query is for K = {}, database has {} messages",
            query.k(),
            db.len()
        )));
    }
    let block_messages = |block: &[usize]| -> Vec<Message> {
        block.iter().map(|&idx| db[idx - 1].clone()).collect()
    };
    let a0 = if query.rows0 == 0 {
        Vec::new()
    } else {
        query.qprime.apply(&block_messages(&query.blocks[0]))?
    };
    let ai = query.blocks[1..]
        .iter()
        .map(|block| query.qdprime.apply(&block_messages(block)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GpcAnswer { a0, ai })
}

/// Client side: for every demand-bearing block, subtracts enough known
/// side-information contributions to square the system, then solves it.
///
/// Each block of size `s` comes with `rows` equations; subtracting
/// `s - rows` known messages (sigma for Q_0, alpha for full blocks) leaves
/// a square Vandermonde system whose solution includes the demands. Any
/// admissible subset of the block's side information works, so the decoder
/// deterministically takes the smallest indices — the construction trace is
/// not needed. The remaining unknowns of those blocks solve for free;
/// `include_block_extras` exposes them for the auditor.
pub fn gpc_decode(
    query: &GpcQuery,
    answer: &GpcAnswer,
    demand: &BTreeSet<usize>,
    side_info: &BTreeMap<usize, Message>,
    include_block_extras: bool,
) -> Result<BTreeMap<usize, Message>> {
    if answer.a0.len() != query.rows0 {
        return Err(Error::DimensionMismatch(format!(
            "A_0 carries {} symbols, expected {}",
            answer.a0.len(),
            query.rows0
        )));
    }
    if answer.ai.len() != query.num_full_blocks()
        || answer.ai.iter().any(|a| a.len() != query.rowsi)
    {
        return Err(Error::DimensionMismatch(
            "per-block answer symbol counts disagree with the query".into(),
        ));
    }

    let q = query.fp.q();
    let single = FieldParams::new(q, 1)?;
    let mut recovered = BTreeMap::new();

    for (b, block) in query.blocks.iter().enumerate() {
        if !block.iter().any(|idx| demand.contains(idx)) {
            continue;
        }
        let (rows, symbols) = if b == 0 {
            (query.rows0, &answer.a0)
        } else {
            (query.rowsi, &answer.ai[b - 1])
        };
        let subtract_count = block.len() - rows;

        let known_positions: Vec<usize> = block
            .iter()
            .enumerate()
            .filter(|(_, idx)| side_info.contains_key(idx))
            .map(|(l, _)| l)
            .take(subtract_count)
            .collect();
        if known_positions.len() < subtract_count {
            return Err(Error::InvalidInstance(format!(
                "block {} needs {} side-information messages to decode, {} available",
                b,
                subtract_count,
                block
                    .iter()
                    .filter(|idx| side_info.contains_key(idx))
                    .count()
            )));
        }

        let mut rhs = Vec::with_capacity(rows);
        for (j, symbol) in symbols.iter().enumerate() {
            let mut acc = symbol.clone();
            for &l in &known_positions {
                let coeff = single.elem(l as u64).pow(j as u64);
                acc = acc.sub(&side_info[&block[l]].scale(&coeff)?)?;
            }
            rhs.push(acc);
        }

        let unknown_positions: Vec<usize> = (0..block.len())
            .filter(|l| !known_positions.contains(l))
            .collect();
        debug_assert_eq!(unknown_positions.len(), rows);
        let sub_rows: Vec<Vec<u64>> = (0..rows)
            .map(|j| {
                unknown_positions
                    .iter()
                    .map(|&l| single.elem(l as u64).pow(j as u64).value())
                    .collect()
            })
            .collect();
        let sub = MatrixFq::from_rows(&sub_rows, rows, q)?;
        let solved = solve_square(&sub, &rhs)
            .expect("Vandermonde submatrix with distinct points cannot be singular");

        for (l, value) in unknown_positions.into_iter().zip(solved) {
            let idx = block[l];
            if demand.contains(&idx) || include_block_extras {
                recovered.insert(idx, value);
            }
        }
    }

    for idx in demand {
        if !recovered.contains_key(idx) {
            return Err(Error::InvalidInstance(format!(
                "demand index {idx} was not recovered"
            )));
        }
    }
    Ok(recovered)
}
