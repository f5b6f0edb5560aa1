//! Command-line front end: planning, query/answer/decode plumbing, the
//! TCP harness, the privacy checker, the audits, and the bench runner.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pirsi::capacity::{capacity_value, plan, BoundKind, Protocol};
use pirsi::gf::{is_prime, FieldParams, Message};
use pirsi::gpc::{gpc_answer, gpc_decode, gpc_params, gpc_partition, gpc_query};
use pirsi::grs::{grs_answer, grs_decode, grs_query};
use pirsi::io::{
    decode_answer, decode_query, encode_answer, encode_query, fetch, read_database, run_experiment,
    serve, ExperimentConfig,
};
use pirsi::privacy::{
    audit_full_recovery, audit_necessary_condition, closed_form_p_q, enumerate_distribution,
    linearize, monte_carlo_posterior_check, partition_count, posterior, DEFAULT_ENUMERATION_BOUND,
};
use pirsi::{Error, ProtocolAnswer, ProtocolQuery, Result};

#[derive(Parser)]
#[command(
    name = "pirsi",
    about = "Single-server multi-message private information retrieval with side information",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProtocolArg {
    Auto,
    Grs,
    Gpc,
}

#[derive(Subcommand)]
enum Command {
    /// Print the capacity (or its best known lower bound) of an instance.
    Capacity { k: usize, d: usize, m_side: usize },
    /// Pick the protocol with the fewest downloaded symbols.
    Plan { k: usize, d: usize, m_side: usize },
    /// Emit a wire query for an instance to stdout.
    Query {
        k: usize,
        d: usize,
        m_side: usize,
        /// Demand index set, e.g. 3,4 (1-based).
        #[arg(long, value_name = "LIST")]
        w: String,
        /// Side-information index set, e.g. 5,8 (1-based).
        #[arg(long, value_name = "LIST")]
        s: String,
        /// Field modulus; defaults to the smallest prime the protocol allows.
        #[arg(long)]
        q: Option<u64>,
        /// Symbols per message.
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Seed for the randomized partition.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ProtocolArg::Auto)]
        protocol: ProtocolArg,
    },
    /// Answer a query (read from stdin) against a database file.
    Answer { db: PathBuf },
    /// Decode an answer: recover the demanded messages.
    Decode {
        /// Query frame; stdin's first line when omitted.
        #[arg(long)]
        query: Option<PathBuf>,
        /// Answer frame; stdin's next line when omitted.
        #[arg(long)]
        answer: Option<PathBuf>,
        /// Demand index set, e.g. 3,4.
        #[arg(long, value_name = "LIST")]
        w: String,
        /// Side-information index set, e.g. 5,8.
        #[arg(long, value_name = "LIST")]
        s: String,
        /// Side-information values: one line per index, "idx v1 .. vm".
        #[arg(long, value_name = "FILE")]
        side_info: PathBuf,
        /// Also print the non-demand messages the decode yields for free.
        #[arg(long)]
        extras: bool,
    },
    /// Serve a database file over TCP, blocking.
    Serve { db: PathBuf, addr: String },
    /// Send a query (read from stdin) to a server and print the answer.
    Fetch { addr: String },
    /// Verify the privacy condition for an instance.
    PrivacyCheck {
        k: usize,
        d: usize,
        m_side: usize,
        /// Exhaustive enumeration (exact rational posteriors).
        #[arg(long, conflicts_with = "montecarlo")]
        exact: bool,
        /// Seeded sampling diagnostic with this many samples.
        #[arg(long, value_name = "N")]
        montecarlo: Option<usize>,
        #[arg(long)]
        q: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the recoverability audits on a query (+ answer) pair.
    Audit {
        /// Query frame; stdin's first line when omitted.
        #[arg(long)]
        query: Option<PathBuf>,
        /// Answer frame to cross-check against the query, optional.
        #[arg(long)]
        answer: Option<PathBuf>,
        /// Demand size for the necessary-condition audit.
        #[arg(long)]
        d: usize,
        /// Side-information size; defaults to the query's M for GRS.
        #[arg(long)]
        m_side: Option<usize>,
        /// Audit full recovery for this specific side set, e.g. 5,8;
        /// all size-M sets when omitted.
        #[arg(long, value_name = "LIST")]
        s: Option<String>,
    },
    /// Run an experiment grid from a TOML config.
    Bench {
        config: PathBuf,
        /// Also write the table as CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn parse_index_set(text: &str) -> Result<BTreeSet<usize>> {
    let mut out = BTreeSet::new();
    for tok in text.split(',').filter(|t| !t.trim().is_empty()) {
        let idx: usize = tok
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInstance(format!("bad index {tok:?} in {text:?}")))?;
        out.insert(idx);
    }
    Ok(out)
}

fn smallest_prime_at_least(n: u64) -> u64 {
    (n.max(2)..)
        .find(|&v| is_prime(v))
        .expect("primes are unbounded")
}

fn kind_label(kind: BoundKind) -> &'static str {
    match kind {
        BoundKind::Exact => "exact",
        BoundKind::LowerBound => "lower bound",
    }
}

fn read_frame(
    path: Option<&PathBuf>,
    stdin_lines: &mut dyn Iterator<Item = String>,
) -> Result<Vec<u8>> {
    match path {
        Some(p) => Ok(std::fs::read_to_string(p)?.trim_end().as_bytes().to_vec()),
        None => stdin_lines
            .next()
            .map(|l| l.into_bytes())
            .ok_or_else(|| Error::Wire("expected a frame on stdin".into())),
    }
}

fn read_side_info_file(path: &PathBuf, fp: FieldParams) -> Result<BTreeMap<usize, Message>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let idx: usize = parts.next().unwrap().parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            msg: "side-info line must start with an index".into(),
        })?;
        let coords: Vec<u64> = parts
            .map(|t| {
                t.parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("bad symbol {t:?}"),
                })
            })
            .collect::<Result<_>>()?;
        if coords.iter().any(|&v| v >= fp.q()) {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("symbol out of range [0, {})", fp.q()),
            });
        }
        out.insert(idx, fp.message(&coords)?);
    }
    Ok(out)
}

fn print_messages(recovered: &BTreeMap<usize, Message>) {
    for (idx, msg) in recovered {
        let coords: Vec<String> = msg.values().iter().map(u64::to_string).collect();
        println!("{} {}", idx, coords.join(" "));
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_query(
    k: usize,
    d: usize,
    m_side: usize,
    w: &str,
    s: &str,
    q: Option<u64>,
    m: usize,
    seed: u64,
    protocol: ProtocolArg,
) -> Result<()> {
    let demand = parse_index_set(w)?;
    let side = parse_index_set(s)?;
    pirsi::validate_index_sets(k, d, m_side, &demand, &side)?;
    let protocol = match protocol {
        ProtocolArg::Grs => Protocol::Grs,
        ProtocolArg::Gpc => Protocol::Gpc,
        ProtocolArg::Auto => plan(k, d, m_side)?.protocol,
    };
    let query = match protocol {
        Protocol::Grs => {
            let fp = FieldParams::new(q.unwrap_or_else(|| smallest_prime_at_least(k as u64)), m)?;
            ProtocolQuery::Grs(grs_query(k, m_side, fp)?)
        }
        Protocol::Gpc => {
            let params = gpc_params(k, d, m_side)?;
            let fp = FieldParams::new(
                q.unwrap_or_else(|| smallest_prime_at_least(params.beta as u64)),
                m,
            )?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let trace = gpc_partition(&demand, &side, &params, &mut rng)?;
            ProtocolQuery::Gpc(gpc_query(&trace, &params, fp)?)
        }
    };
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(&encode_query(&query))?;
    stdout.write_all(b"\n")?;
    Ok(())
}

fn cmd_decode(
    query_path: Option<PathBuf>,
    answer_path: Option<PathBuf>,
    w: &str,
    s: &str,
    side_info_path: &PathBuf,
    extras: bool,
) -> Result<()> {
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines().map_while(|l| l.ok());
    let query = decode_query(&read_frame(query_path.as_ref(), &mut lines)?)?;
    let answer = decode_answer(&read_frame(answer_path.as_ref(), &mut lines)?, &query)?;

    let demand = parse_index_set(w)?;
    let side = parse_index_set(s)?;
    let side_info = read_side_info_file(side_info_path, query.fp())?;
    if side_info.keys().copied().collect::<BTreeSet<_>>() != side {
        return Err(Error::InvalidInstance(
            "side-info file indices disagree with --s".into(),
        ));
    }

    let recovered = match (&query, &answer) {
        (ProtocolQuery::Grs(q), ProtocolAnswer::Grs(a)) => {
            let all = grs_decode(q, a, &side_info)?;
            if extras {
                all
            } else {
                all.into_iter()
                    .filter(|(idx, _)| demand.contains(idx))
                    .collect()
            }
        }
        (ProtocolQuery::Gpc(q), ProtocolAnswer::Gpc(a)) => {
            gpc_decode(q, a, &demand, &side_info, extras)?
        }
        _ => unreachable!("decode_answer matches the query flavor"),
    };
    for idx in &demand {
        if !recovered.contains_key(idx) {
            return Err(Error::InvalidInstance(format!(
                "demand index {idx} was not recovered"
            )));
        }
    }
    print_messages(&recovered);
    Ok(())
}

fn cmd_privacy_check(
    k: usize,
    d: usize,
    m_side: usize,
    exact: bool,
    montecarlo: Option<usize>,
    q: Option<u64>,
    seed: u64,
) -> Result<()> {
    if let Some(samples) = montecarlo {
        let report = monte_carlo_posterior_check(k, d, m_side, samples, seed)?;
        println!("{report}");
        return Ok(());
    }
    if !exact && k > DEFAULT_ENUMERATION_BOUND {
        return Err(Error::EnumerationBoundExceeded {
            k,
            bound: DEFAULT_ENUMERATION_BOUND,
        });
    }
    let params = gpc_params(k, d, m_side)?;
    let fp = FieldParams::new(
        q.unwrap_or_else(|| smallest_prime_at_least(params.beta as u64)),
        1,
    )?;
    let dist = enumerate_distribution(k, d, m_side, fp)?;
    println!(
        "instance K={k} D={d} M={m_side}: alpha={} beta={} gamma={} rho={} sigma={}",
        params.alpha, params.beta, params.gamma, params.rho, params.sigma
    );
    println!(
        "canonical queries reachable: {} (closed form: {})",
        dist.queries.len(),
        partition_count(&params)
    );
    let expect_pq = closed_form_p_q(&params);
    let pq_ok = dist.queries.values().all(|s| s.total == expect_pq);
    println!(
        "P(Q) = {} for every query: {}",
        expect_pq,
        if pq_ok { "yes" } else { "NO" }
    );
    let uniform = pirsi::capacity::rat(1, dist.all_demands().len());
    let mut uniform_ok = true;
    for blocks in dist.queries.keys() {
        let post = posterior(&dist, blocks)?;
        for (w, p) in post {
            if p != uniform {
                if uniform_ok {
                    println!("posterior deviates: P(W={w:?} | Q={blocks:?}) = {p}");
                }
                uniform_ok = false;
            }
        }
    }
    println!(
        "posterior uniform at {} for every (Q, W*): {}",
        uniform,
        if uniform_ok { "yes" } else { "NO" }
    );
    println!("{}", if pq_ok && uniform_ok { "PASS" } else { "FAIL" });
    if !(pq_ok && uniform_ok) {
        std::process::exit(1);
    }
    Ok(())
}

fn cmd_audit(
    query_path: Option<PathBuf>,
    answer_path: Option<PathBuf>,
    d: usize,
    m_side: Option<usize>,
    s: Option<String>,
) -> Result<()> {
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines().map_while(|l| l.ok());
    let query = decode_query(&read_frame(query_path.as_ref(), &mut lines)?)?;
    if let Some(path) = answer_path {
        let text = std::fs::read_to_string(path)?;
        let answer = decode_answer(text.trim_end().as_bytes(), &query)?;
        let symbols = match &answer {
            ProtocolAnswer::Grs(a) => a.symbols.len(),
            ProtocolAnswer::Gpc(a) => a.total_symbols(),
        };
        println!("answer consistent with query: {symbols} symbols");
    }
    let m_side = match (m_side, &query) {
        (Some(m), _) => m,
        (None, ProtocolQuery::Grs(q)) => q.m_side(),
        (None, ProtocolQuery::Gpc(_)) => {
            return Err(Error::InvalidInstance(
                "--m-side is required to audit a gpc query".into(),
            ))
        }
    };
    let k = query.k();
    let mat = linearize(&query);
    println!(
        "answer matrix: {} x {} over F_{}",
        mat.download_symbols(),
        mat.k(),
        mat.matrix().modulus()
    );

    let report = audit_necessary_condition(&mat, d, m_side);
    for entry in &report.entries {
        match &entry.witness {
            Some(s_star) => println!("W*={:?}: witness S*={:?}", entry.demand, s_star),
            None => println!("W*={:?}: NO WITNESS", entry.demand),
        }
    }
    println!(
        "necessary condition: {}",
        if report.all_pass() { "PASS" } else { "FAIL" }
    );

    let side_sets: Vec<BTreeSet<usize>> = match s {
        Some(text) => vec![parse_index_set(&text)?],
        None => {
            use itertools::Itertools;
            let count: usize = (1..=k).combinations(m_side).count();
            if count > 20_000 {
                return Err(Error::InvalidInstance(format!(
                    "{count} candidate side sets; pass --s to pick one"
                )));
            }
            (1..=k)
                .combinations(m_side)
                .map(|c| c.into_iter().collect())
                .collect()
        }
    };
    let mut all_full = true;
    for side in &side_sets {
        let full = audit_full_recovery(&mat, side);
        if side_sets.len() == 1 {
            println!("full recovery with S={side:?}: {full}");
        }
        all_full &= full;
    }
    if side_sets.len() > 1 {
        println!(
            "full recovery for all {} side sets of size {}: {}",
            side_sets.len(),
            m_side,
            all_full
        );
    }
    if !report.all_pass() {
        std::process::exit(1);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Capacity { k, d, m_side } => {
            let c = capacity_value(k, d, m_side)?;
            println!("{} ({})", c.value, kind_label(c.kind));
        }
        Command::Plan { k, d, m_side } => {
            let p = plan(k, d, m_side)?;
            println!(
                "protocol: {}  downloads: {} symbols  rate: {}",
                p.protocol, p.download_symbols, p.rate
            );
        }
        Command::Query {
            k,
            d,
            m_side,
            w,
            s,
            q,
            m,
            seed,
            protocol,
        } => cmd_query(k, d, m_side, &w, &s, q, m, seed, protocol)?,
        Command::Answer { db } => {
            let (fp, messages) = read_database(&db)?;
            let stdin = std::io::stdin();
            let mut line = String::new();
            stdin.lock().read_line(&mut line)?;
            let query = decode_query(line.trim_end().as_bytes())?;
            if query.fp() != fp {
                return Err(Error::Wire(format!(
                    "query is for F_{}^{}, database holds F_{}^{}",
                    query.fp().q(),
                    query.fp().m(),
                    fp.q(),
                    fp.m()
                )));
            }
            if query.k() != messages.len() {
                return Err(Error::Wire(format!(
                    "query is for K = {}, database has {} messages",
                    query.k(),
                    messages.len()
                )));
            }
            let answer = match &query {
                ProtocolQuery::Grs(q) => ProtocolAnswer::Grs(grs_answer(q, &messages)?),
                ProtocolQuery::Gpc(q) => ProtocolAnswer::Gpc(gpc_answer(q, &messages)?),
            };
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&encode_answer(&answer))?;
            stdout.write_all(b"\n")?;
        }
        Command::Decode {
            query,
            answer,
            w,
            s,
            side_info,
            extras,
        } => cmd_decode(query, answer, &w, &s, &side_info, extras)?,
        Command::Serve { db, addr } => serve(&db, &addr)?,
        Command::Fetch { addr } => {
            let mut line = String::new();
            std::io::stdin().lock().read_line(&mut line)?;
            let query = decode_query(line.trim_end().as_bytes())?;
            let answer = fetch(&addr, &query)?;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&encode_answer(&answer))?;
            stdout.write_all(b"\n")?;
        }
        Command::PrivacyCheck {
            k,
            d,
            m_side,
            exact,
            montecarlo,
            q,
            seed,
        } => cmd_privacy_check(k, d, m_side, exact, montecarlo, q, seed)?,
        Command::Audit {
            query,
            answer,
            d,
            m_side,
            s,
        } => cmd_audit(query, answer, d, m_side, s)?,
        Command::Bench { config, csv } => {
            let config = ExperimentConfig::from_toml(&std::fs::read_to_string(config)?)?;
            let report = run_experiment(&config)?;
            print!("{}", report.render_text());
            match csv {
                Some(path) => std::fs::write(path, report.render_csv())?,
                None => {
                    println!();
                    print!("{}", report.render_csv());
                }
            }
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
