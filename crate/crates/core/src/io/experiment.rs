//! The experiment runner behind the `bench` subcommand: runs a grid of
//! instances end to end in process, measures the achieved rate, and
//! compares it against the capacity value.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::capacity::{capacity_value, plan, rat, BoundKind, Protocol, Rational};
use crate::error::{Error, Result};
use crate::gf::{FieldParams, Message};
use crate::gpc::{gpc_answer, gpc_decode, gpc_params, gpc_partition, gpc_query};
use crate::grs::{grs_answer, grs_decode, grs_query};

/// TOML experiment configuration:
///
/// ```toml
/// q = 13
/// m = 1
/// trials = 5
/// seed = 42
/// instances = [[10, 2, 2], [5, 2, 2], [8, 3, 1]]
/// ```
#[derive(Debug, Clone, Deserialize)]
pub struct ExperimentConfig {
    pub q: u64,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    /// (K, D, M) triples.
    pub instances: Vec<[usize; 3]>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            line: 0,
            msg: format!("config: {e}"),
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentRow {
    pub k: usize,
    pub d: usize,
    pub m_side: usize,
    pub protocol: Protocol,
    pub symbols: usize,
    pub rate: Rational,
    pub capacity: Rational,
    pub capacity_kind: BoundKind,
    /// Achieved rate equals the capacity value exactly.
    pub matches: bool,
    /// Every trial decoded the demanded messages correctly.
    pub decode_ok: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<ExperimentRow>,
}

/// Runs every instance of the grid for `trials` seeded rounds each.
/// Deterministic for a fixed seed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let fp = FieldParams::new(config.q, config.m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rows = Vec::with_capacity(config.instances.len());

    for &[k, d, m_side] in &config.instances {
        let chosen = plan(k, d, m_side)?;
        let cap = capacity_value(k, d, m_side)?;
        let mut decode_ok = true;

        for _ in 0..config.trials {
            let db: Vec<Message> = (0..k)
                .map(|_| {
                    let coords: Vec<u64> = (0..config.m)
                        .map(|_| rng.random_range(0..config.q))
                        .collect();
                    fp.message(&coords).expect("coords in range")
                })
                .collect();
            let mut indices: Vec<usize> = (1..=k).collect();
            indices.shuffle(&mut rng);
            let demand: BTreeSet<usize> = indices[..d].iter().copied().collect();
            let side: BTreeSet<usize> = indices[d..d + m_side].iter().copied().collect();
            let side_info: BTreeMap<usize, Message> =
                side.iter().map(|&idx| (idx, db[idx - 1].clone())).collect();

            let recovered: BTreeMap<usize, Message> = match chosen.protocol {
                Protocol::Grs => {
                    let query = grs_query(k, m_side, fp)?;
                    let answer = grs_answer(&query, &db)?;
                    grs_decode(&query, &answer, &side_info)?
                }
                Protocol::Gpc => {
                    let params = gpc_params(k, d, m_side)?;
                    let trace = gpc_partition(&demand, &side, &params, &mut rng)?;
                    let query = gpc_query(&trace, &params, fp)?;
                    let answer = gpc_answer(&query, &db)?;
                    gpc_decode(&query, &answer, &demand, &side_info, false)?
                }
            };
            for &idx in &demand {
                if recovered.get(&idx) != Some(&db[idx - 1]) {
                    decode_ok = false;
                }
            }
        }

        let rate = rat(d, chosen.download_symbols);
        rows.push(ExperimentRow {
            k,
            d,
            m_side,
            protocol: chosen.protocol,
            symbols: chosen.download_symbols,
            matches: rate == cap.value,
            rate,
            capacity: cap.value,
            capacity_kind: cap.kind,
            decode_ok,
        });
    }
    Ok(ExperimentReport { rows })
}

impl ExperimentRow {
    fn cells(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            self.d.to_string(),
            self.m_side.to_string(),
            self.protocol.to_string(),
            self.symbols.to_string(),
            self.rate.to_string(),
            format!(
                "{}{}",
                self.capacity,
                match self.capacity_kind {
                    BoundKind::Exact => "",
                    BoundKind::LowerBound => " (lb)",
                }
            ),
            if self.matches { "match" } else { "below" }.to_string(),
            if self.decode_ok { "ok" } else { "FAIL" }.to_string(),
        ]
    }
}

const HEADERS: [&str; 9] = [
    "K", "D", "M", "protocol", "symbols", "rate", "capacity", "match", "decode",
];

impl ExperimentReport {
    /// Aligned text table.
    pub fn render_text(&self) -> String {
        let rows: Vec<Vec<String>> = self.rows.iter().map(ExperimentRow::cells).collect();
        let mut widths: Vec<usize> = HEADERS.iter().map(|h| h.len()).collect();
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let render = |cells: Vec<String>, widths: &[usize], out: &mut String| {
            let padded: Vec<String> = cells
                .iter()
                .zip(widths)
                .map(|(c, w)| format!("{c:>w$}", w = w))
                .collect();
            out.push_str(&padded.join("  "));
            out.push('\n');
        };
        render(
            HEADERS.iter().map(|s| s.to_string()).collect(),
            &widths,
            &mut out,
        );
        for row in rows {
            render(row, &widths, &mut out);
        }
        out
    }

    /// CSV with the same columns.
    pub fn render_csv(&self) -> String {
        let mut out = HEADERS.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.cells().join(","));
            out.push('\n');
        }
        out
    }
}
