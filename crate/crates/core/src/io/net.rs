//! Blocking TCP harness: one JSON line per message, one request per
//! connection.
//!
//! Connection flow: the server greets with a `hello` frame carrying the
//! database parameters, reads one query frame, replies with an `answer`
//! (or `error`) frame, and closes. Answers are pure functions of
//! (database, query), so the server is stateless across requests and the
//! sequential accept loop is correct by construction.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;

use crate::error::{Error, Result};
use crate::gf::{FieldParams, Message};
use crate::io::wire::{
    answer_from_symbols, encode_answer, encode_query, query_from_body, AnswerBody, ErrorBody,
    HelloBody, WireMessage,
};
use crate::{ProtocolAnswer, ProtocolQuery};

fn write_frame(stream: &mut TcpStream, bytes: &[u8]) -> std::io::Result<()> {
    stream.write_all(bytes)?;
    stream.write_all(b"\n")?;
    stream.flush()
}

fn answer_for(query: &ProtocolQuery, fp: &FieldParams, db: &[Message]) -> Result<ProtocolAnswer> {
    if query.fp() != *fp {
        return Err(Error::Wire(format!(
            "query is for F_{}^{}, database holds F_{}^{}",
            query.fp().q(),
            query.fp().m(),
            fp.q(),
            fp.m()
        )));
    }
    if query.k() != db.len() {
        return Err(Error::Wire(format!(
            "query is for K = {}, database has {} messages",
            query.k(),
            db.len()
        )));
    }
    match query {
        ProtocolQuery::Grs(q) => Ok(ProtocolAnswer::Grs(crate::grs::grs_answer(q, db)?)),
        ProtocolQuery::Gpc(q) => Ok(ProtocolAnswer::Gpc(crate::gpc::gpc_answer(q, db)?)),
    }
}

fn handle_connection(stream: &mut TcpStream, fp: &FieldParams, db: &[Message]) -> Result<()> {
    write_frame(
        stream,
        &WireMessage::Hello(HelloBody {
            q: fp.q(),
            m: fp.m(),
            k: db.len(),
        })
        .encode(),
    )?;

    let mut line = String::new();
    BufReader::new(stream.try_clone()?).read_line(&mut line)?;
    let reply = match WireMessage::decode(line.trim_end().as_bytes()) {
        Ok(WireMessage::Query(body)) => {
            match query_from_body(body).and_then(|query| answer_for(&query, fp, db)) {
                Ok(answer) => encode_answer(&answer),
                Err(e) => WireMessage::Error(ErrorBody {
                    reason: e.to_string(),
                })
                .encode(),
            }
        }
        Ok(other) => WireMessage::Error(ErrorBody {
            reason: format!("expected a query frame, got {other:?}"),
        })
        .encode(),
        Err(e) => WireMessage::Error(ErrorBody {
            reason: e.to_string(),
        })
        .encode(),
    };
    write_frame(stream, &reply)?;
    Ok(())
}

/// Serves `db` on an already-bound listener, forever. Per-connection
/// failures are reported on stderr and do not stop the loop.
pub fn serve_on(listener: TcpListener, fp: FieldParams, db: Vec<Message>) -> Result<()> {
    for stream in listener.incoming() {
        match stream {
            Ok(mut stream) => {
                if let Err(e) = handle_connection(&mut stream, &fp, &db) {
                    eprintln!("connection error: {e}");
                }
            }
            Err(e) => eprintln!("accept error: {e}"),
        }
    }
    Ok(())
}

/// Loads a database file and serves it on `addr` (host:port), blocking.
pub fn serve(db_path: &Path, addr: &str) -> Result<()> {
    let (fp, db) = crate::io::read_database(db_path)?;
    let listener = TcpListener::bind(addr)?;
    eprintln!(
        "serving {} messages over F_{}^{} on {}",
        db.len(),
        fp.q(),
        fp.m(),
        listener.local_addr()?
    );
    serve_on(listener, fp, db)
}

/// Sends one query to a server and returns the decoded answer.
///
/// The greeting is consumed but not trusted: validation happens
/// server-side so that a mismatched query produces the server's `error`
/// frame rather than a silent client-side drop.
pub fn fetch(addr: &str, query: &ProtocolQuery) -> Result<ProtocolAnswer> {
    let mut stream =
        TcpStream::connect(addr).map_err(|e| Error::Fetch(format!("connect {addr}: {e}")))?;
    let mut reader = BufReader::new(
        stream
            .try_clone()
            .map_err(|e| Error::Fetch(e.to_string()))?,
    );

    let mut hello_line = String::new();
    reader
        .read_line(&mut hello_line)
        .map_err(|e| Error::Fetch(format!("reading greeting: {e}")))?;
    match WireMessage::decode(hello_line.trim_end().as_bytes())? {
        WireMessage::Hello(_) => {}
        other => {
            return Err(Error::Fetch(format!(
                "expected a hello greeting, got {other:?}"
            )))
        }
    }

    write_frame(&mut stream, &encode_query(query)).map_err(|e| Error::Fetch(e.to_string()))?;

    let mut reply_line = String::new();
    reader
        .read_line(&mut reply_line)
        .map_err(|e| Error::Fetch(format!("reading answer: {e}")))?;
    if reply_line.is_empty() {
        return Err(Error::Fetch("connection closed without an answer".into()));
    }
    match WireMessage::decode(reply_line.trim_end().as_bytes())? {
        WireMessage::Answer(AnswerBody { symbols }) => answer_from_symbols(symbols, query),
        WireMessage::Error(ErrorBody { reason }) => Err(Error::Fetch(reason)),
        other => Err(Error::Fetch(format!(
            "expected an answer frame, got {other:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grs::{grs_answer, grs_query};
    use std::collections::BTreeMap;

    fn spawn_server(fp: FieldParams, db: Vec<Message>) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        std::thread::spawn(move || {
            let _ = serve_on(listener, fp, db);
        });
        addr
    }

    #[test]
    fn end_to_end_grs_full_complement() {
        let fp = FieldParams::new(7, 1).unwrap();
        let db: Vec<Message> = [3u64, 1, 4, 1, 5]
            .iter()
            .map(|&v| fp.message(&[v]).unwrap())
            .collect();
        let addr = spawn_server(fp, db.clone());

        let query = grs_query(5, 1, fp).unwrap();
        let answer = fetch(&addr, &ProtocolQuery::Grs(query.clone())).unwrap();
        let ProtocolAnswer::Grs(answer) = answer else {
            panic!("wrong answer flavor")
        };
        assert_eq!(answer, grs_answer(&query, &db).unwrap());
        assert_eq!(answer.symbols.len(), 4);

        let side: BTreeMap<usize, Message> = [(2usize, db[1].clone())].into_iter().collect();
        let recovered = crate::grs::grs_decode(&query, &answer, &side).unwrap();
        assert_eq!(recovered.len(), 4);
        for (idx, msg) in recovered {
            assert_eq!(msg, db[idx - 1]);
        }
    }

    #[test]
    fn end_to_end_gpc_plans_queries_and_decodes() {
        use crate::capacity::{plan, Protocol};
        use crate::gpc::{gpc_answer, gpc_decode, gpc_params, gpc_partition, gpc_query};
        use rand::SeedableRng;
        use std::collections::BTreeSet;

        // the client plans (10, 2, 2), sends a GPC query over the socket,
        // and decodes its two demands from 7 downloaded symbols
        let fp = FieldParams::new(5, 1).unwrap();
        let db: Vec<Message> = [4u64, 2, 1, 3, 0, 2, 4, 1, 3, 2]
            .iter()
            .map(|&v| fp.message(&[v]).unwrap())
            .collect();
        let addr = spawn_server(fp, db.clone());

        let chosen = plan(10, 2, 2).unwrap();
        assert_eq!(
            (chosen.protocol, chosen.download_symbols),
            (Protocol::Gpc, 7)
        );

        let demand: BTreeSet<usize> = [3, 4].into_iter().collect();
        let side: BTreeSet<usize> = [5, 8].into_iter().collect();
        let params = gpc_params(10, 2, 2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let trace = gpc_partition(&demand, &side, &params, &mut rng).unwrap();
        let query = gpc_query(&trace, &params, fp).unwrap();

        let answer = fetch(&addr, &ProtocolQuery::Gpc(query.clone())).unwrap();
        let ProtocolAnswer::Gpc(answer) = answer else {
            panic!("wrong answer flavor")
        };
        assert_eq!(answer.total_symbols(), 7);
        assert_eq!(answer, gpc_answer(&query, &db).unwrap());

        let side_info: BTreeMap<usize, Message> =
            side.iter().map(|&i| (i, db[i - 1].clone())).collect();
        let got = gpc_decode(&query, &answer, &demand, &side_info, false).unwrap();
        assert_eq!(got[&3], db[2]);
        assert_eq!(got[&4], db[3]);
    }

    #[test]
    fn mismatched_field_returns_error_frame() {
        let fp = FieldParams::new(5, 1).unwrap();
        let db: Vec<Message> = (0..5u64).map(|v| fp.message(&[v]).unwrap()).collect();
        let addr = spawn_server(fp, db);

        let fp7 = FieldParams::new(7, 1).unwrap();
        let query = ProtocolQuery::Grs(grs_query(5, 1, fp7).unwrap());
        match fetch(&addr, &query) {
            Err(Error::Fetch(reason)) => assert!(reason.contains("F_7"), "reason: {reason}"),
            other => panic!("expected a fetch error, got {other:?}"),
        }
    }
}
