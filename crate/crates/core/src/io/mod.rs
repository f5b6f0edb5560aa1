//! Persistence and interchange: the database file format, the
//! newline-delimited JSON wire protocol, the TCP serve/fetch harness, and
//! the experiment runner behind the `bench` subcommand.
//!
//! Database file format (UTF-8 text):
//!
//! ```text
//! q m K
//! <m space-separated symbols in [0, q)>   x K lines
//! ```

pub mod experiment;
pub mod net;
pub mod wire;

pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport};
pub use net::{fetch, serve, serve_on};
pub use wire::{decode_answer, decode_query, encode_answer, encode_query, WireMessage};

use std::path::Path;

use crate::error::{Error, Result};
use crate::gf::{FieldParams, Message};

/// Parses a database from its text form. Errors carry 1-based line
/// numbers.
pub fn parse_database(text: &str) -> Result<(FieldParams, Vec<Message>)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header must be \"q m K\", got {:?}", header),
        });
    }
    let parse_int = |s: &str, what: &str| -> Result<u64> {
        s.parse().map_err(|_| Error::Parse {
            line: 1,
            msg: format!("{what} is not a number: {s:?}"),
        })
    };
    let q = parse_int(fields[0], "q")?;
    let m = parse_int(fields[1], "m")? as usize;
    let k = parse_int(fields[2], "K")? as usize;
    let fp = FieldParams::new(q, m).map_err(|e| Error::Parse {
        line: 1,
        msg: e.to_string(),
    })?;

    let mut messages = Vec::with_capacity(k);
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if messages.len() == k {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("expected exactly {k} records, found more"),
            });
        }
        let mut coords = Vec::with_capacity(m);
        for tok in line.split_whitespace() {
            let v: u64 = tok.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("symbol is not a number: {tok:?}"),
            })?;
            if v >= q {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("symbol {v} out of range [0, {q})"),
                });
            }
            coords.push(v);
        }
        if coords.len() != m {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("record has {} symbols, expected m = {m}", coords.len()),
            });
        }
        messages.push(fp.message(&coords).expect("validated above"));
    }
    if messages.len() != k {
        return Err(Error::Parse {
            line: text.lines().count() + 1,
            msg: format!("expected {k} records, found {}", messages.len()),
        });
    }
    Ok((fp, messages))
}

/// Renders a database to its text form; `parse_database` inverts this
/// exactly.
pub fn format_database(fp: &FieldParams, db: &[Message]) -> String {
    let mut out = format!("{} {} {}\n", fp.q(), fp.m(), db.len());
    for msg in db {
        let line: Vec<String> = msg.values().iter().map(u64::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_database(path: &Path) -> Result<(FieldParams, Vec<Message>)> {
    let text = std::fs::read_to_string(path)?;
    parse_database(&text)
}

pub fn write_database(path: &Path, fp: &FieldParams, db: &[Message]) -> Result<()> {
    std::fs::write(path, format_database(fp, db))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_k10_setting() {
        let text = "5 1 10\n4\n2\n1\n3\n0\n2\n4\n1\n3\n2\n";
        let (fp, db) = parse_database(text).unwrap();
        assert_eq!((fp.q(), fp.m()), (5, 1));
        assert_eq!(db.len(), 10);
        assert_eq!(db[0].values(), vec![4]);
    }

    #[test]
    fn parses_single_zero_message() {
        let (fp, db) = parse_database("2 1 1\n0\n").unwrap();
        assert_eq!(fp.q(), 2);
        assert_eq!(db.len(), 1);
        assert_eq!(db[0].values(), vec![0]);
    }

    #[test]
    fn rejects_out_of_range_symbols_with_line_number() {
        let err = parse_database("5 1 2\n3\n7\n").unwrap_err();
        match err {
            Error::Parse { line, msg } => {
                assert_eq!(line, 3);
                assert!(msg.contains("out of range"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_header_and_wrong_counts() {
        assert!(matches!(
            parse_database("5 1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_database("4 1 1\n0\n"),
            Err(Error::Parse { line: 1, .. }) // 4 is not prime
        ));
        assert!(matches!(
            parse_database("5 1 3\n1\n2\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_database("5 2 1\n1 2 3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn round_trips_through_text() {
        let fp = FieldParams::new(7, 2).unwrap();
        let db: Vec<Message> = [[1u64, 2], [0, 6], [5, 5]]
            .iter()
            .map(|c| fp.message(c).unwrap())
            .collect();
        let text = format_database(&fp, &db);
        let (fp2, db2) = parse_database(&text).unwrap();
        assert_eq!(fp, fp2);
        assert_eq!(db, db2);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.txt");
        let fp = FieldParams::new(5, 1).unwrap();
        let db: Vec<Message> = (0..4u64).map(|v| fp.message(&[v]).unwrap()).collect();
        write_database(&path, &fp, &db).unwrap();
        let (fp2, db2) = read_database(&path).unwrap();
        assert_eq!(fp, fp2);
        assert_eq!(db, db2);
    }
}
