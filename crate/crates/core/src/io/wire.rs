//! The wire protocol: newline-delimited JSON objects over TCP.
//!
//! Frames, one JSON object per line:
//!
//! ```text
//! {"type":"hello","q":5,"m":1,"K":10}
//! {"type":"query","protocol":"grs","q":5,"m":1,"K":3,"M":1}
//! {"type":"query","protocol":"gpc","q":5,"m":1,"blocks":[[3,5],[1,2,4]],"rows0":2,"rowsi":2}
//! {"type":"answer","symbols":[[3],[2]]}
//! {"type":"error","reason":"..."}
//! ```
//!
//! Encoding is canonical — fixed key order, no insignificant whitespace —
//! so byte equality of two encoded queries is meaningful. A GPC query
//! encodes the canonical partition and the two row counts only: there is
//! no field a demand or side-information set could leak through, and the
//! GRS query is a constant for fixed (K, M, q, m).
//!
//! Block lists use 1-based message indices; `blocks[0]` is the leftover
//! block and may be empty. Answer symbols appear flattened in block order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::FieldParams;
use crate::gpc::{GpcAnswer, GpcQuery};
use crate::grs::{grs_query, GrsAnswer};
use crate::{ProtocolAnswer, ProtocolQuery};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum WireMessage {
    Hello(HelloBody),
    Query(QueryBody),
    Answer(AnswerBody),
    Error(ErrorBody),
}

/// Server greeting: the database parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HelloBody {
    pub q: u64,
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "lowercase")]
pub enum QueryBody {
    Grs(GrsQueryBody),
    Gpc(GpcQueryBody),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrsQueryBody {
    pub q: u64,
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m_side: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GpcQueryBody {
    pub q: u64,
    pub m: usize,
    pub blocks: Vec<Vec<usize>>,
    pub rows0: usize,
    pub rowsi: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerBody {
    /// One entry per downloaded symbol, each a length-m coordinate vector.
    pub symbols: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub reason: String,
}

impl WireMessage {
    /// Canonical one-line JSON encoding (no trailing newline).
    pub fn encode(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("wire messages always serialize")
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::Wire(e.to_string()))
    }
}

/// Canonical bytes of a query. The encoding of a GPC query is a function
/// of the canonical partition (plus field and row parameters) only.
pub fn encode_query(query: &ProtocolQuery) -> Vec<u8> {
    let body = match query {
        ProtocolQuery::Grs(q) => QueryBody::Grs(GrsQueryBody {
            q: q.fp().q(),
            m: q.fp().m(),
            k: q.k(),
            m_side: q.m_side(),
        }),
        ProtocolQuery::Gpc(q) => QueryBody::Gpc(GpcQueryBody {
            q: q.fp().q(),
            m: q.fp().m(),
            blocks: q.blocks().to_vec(),
            rows0: q.rows0(),
            rowsi: q.rowsi(),
        }),
    };
    WireMessage::Query(body).encode()
}

/// Parses and validates a query frame back into a protocol query.
pub fn decode_query(bytes: &[u8]) -> Result<ProtocolQuery> {
    match WireMessage::decode(bytes)? {
        WireMessage::Query(body) => query_from_body(body),
        other => Err(Error::Wire(format!(
            "expected a query frame, got {:?}",
            frame_name(&other)
        ))),
    }
}

pub(crate) fn query_from_body(body: QueryBody) -> Result<ProtocolQuery> {
    match body {
        QueryBody::Grs(b) => {
            let fp = FieldParams::new(b.q, b.m).map_err(|e| Error::Wire(e.to_string()))?;
            let query = grs_query(b.k, b.m_side, fp).map_err(|e| Error::Wire(e.to_string()))?;
            Ok(ProtocolQuery::Grs(query))
        }
        QueryBody::Gpc(b) => {
            let fp = FieldParams::new(b.q, b.m).map_err(|e| Error::Wire(e.to_string()))?;
            let query = GpcQuery::from_parts(fp, b.blocks, b.rows0, b.rowsi)
                .map_err(|e| Error::Wire(e.to_string()))?;
            Ok(ProtocolQuery::Gpc(query))
        }
    }
}

fn frame_name(msg: &WireMessage) -> &'static str {
    match msg {
        WireMessage::Hello(_) => "hello",
        WireMessage::Query(_) => "query",
        WireMessage::Answer(_) => "answer",
        WireMessage::Error(_) => "error",
    }
}

/// Canonical bytes of an answer: symbols flattened in block order.
pub fn encode_answer(answer: &ProtocolAnswer) -> Vec<u8> {
    let symbols: Vec<Vec<u64>> = match answer {
        ProtocolAnswer::Grs(a) => a.symbols.iter().map(|s| s.values()).collect(),
        ProtocolAnswer::Gpc(a) => a.flat_symbols().iter().map(|s| s.values()).collect(),
    };
    WireMessage::Answer(AnswerBody { symbols }).encode()
}

/// Parses an answer frame, regrouping the flat symbol list according to
/// the query that produced it.
pub fn decode_answer(bytes: &[u8], query: &ProtocolQuery) -> Result<ProtocolAnswer> {
    let symbols = match WireMessage::decode(bytes)? {
        WireMessage::Answer(body) => body.symbols,
        WireMessage::Error(body) => return Err(Error::Fetch(body.reason)),
        other => {
            return Err(Error::Wire(format!(
                "expected an answer frame, got {:?}",
                frame_name(&other)
            )))
        }
    };
    answer_from_symbols(symbols, query)
}

pub(crate) fn answer_from_symbols(
    symbols: Vec<Vec<u64>>,
    query: &ProtocolQuery,
) -> Result<ProtocolAnswer> {
    let fp = query.fp();
    if symbols.len() != query.download_symbols() {
        return Err(Error::Wire(format!(
            "answer carries {} symbols, query expects {}",
            symbols.len(),
            query.download_symbols()
        )));
    }
    for coords in &symbols {
        if coords.len() != fp.m() {
            return Err(Error::Wire(format!(
                "symbol has {} coordinates, expected m = {}",
                coords.len(),
                fp.m()
            )));
        }
        if coords.iter().any(|&v| v >= fp.q()) {
            return Err(Error::Wire(format!(
                "symbol coordinate out of range [0, {})",
                fp.q()
            )));
        }
    }
    let mut messages = symbols
        .into_iter()
        .map(|coords| fp.message(&coords).expect("validated above"));
    match query {
        ProtocolQuery::Grs(_) => Ok(ProtocolAnswer::Grs(GrsAnswer {
            symbols: messages.collect(),
        })),
        ProtocolQuery::Gpc(q) => {
            let a0: Vec<_> = messages.by_ref().take(q.rows0()).collect();
            let mut ai = Vec::with_capacity(q.num_full_blocks());
            for _ in 0..q.num_full_blocks() {
                ai.push(messages.by_ref().take(q.rowsi()).collect());
            }
            Ok(ProtocolAnswer::Gpc(GpcAnswer { a0, ai }))
        }
    }
}
