use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::mpsc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use eisencore::arith::{admissible_pairs, is_prime, Layer};
use eisencore::k2::{generated_identity, survey_fixture, IdentityFixture, IdentitySurvey, Membership};
use eisencore::verifier::{identity_status, verify, verify_battery, CheckId, Options, Status, VerificationReport, VERSION};

const EXIT_FAIL: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "eisen", version, about = "Exact checks of Eisenstein-ideal structure at prime level")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run the check battery over admissible (N, p) and write JSON lines and a CSV summary.
    Survey(SurveyArgs),
    /// Run one check and print its report.
    Verify(VerifyArgs),
    /// Print the generated (T_ℓ − ℓ⟨ℓ⟩ − 1)[u,v] symbol identity and whether it is derivable.
    Identity(IdentityArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, default_value_t = Options::default().seed)]
    seed: u64,
    /// Random operator probes per space.
    #[arg(long, default_value_t = 100)]
    probes: usize,
    /// Skip the M+1 and Sturm+5 re-runs.
    #[arg(long)]
    no_robustness: bool,
    /// ℓ = 5 identity file replacing the bundled one.
    #[arg(long)]
    fixture: Option<PathBuf>,
    /// Adds a spurious term to the ℓ = 5 identity (exercises the FAIL path).
    #[arg(long, hide = true)]
    corrupt_fixture: bool,
}

#[derive(Args, Debug)]
struct SurveyArgs {
    #[arg(long, default_value_t = 200)]
    nmax: u64,
    #[arg(long, default_value_t = 5)]
    nmin: u64,
    /// Explicit pairs such as 11:5,101:5 instead of a range.
    #[arg(long, value_delimiter = ',')]
    pairs: Vec<String>,
    /// Auxiliary prime; all admissible primes when omitted.
    #[arg(long)]
    p: Option<u64>,
    /// Layer s: a number, `t` (default) or `all`.
    #[arg(long, default_value = "t")]
    s: String,
    /// Comma-separated check names; all when omitted.
    #[arg(long, value_delimiter = ',')]
    checks: Vec<String>,
    /// Output directory (default: $EISEN_CACHE_DIR or ./eisen-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    check: String,
    #[arg(long = "N")]
    n: u64,
    #[arg(long)]
    p: u64,
    #[arg(long)]
    s: Option<u32>,
    /// Print the JSON record instead of text.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct IdentityArgs {
    #[arg(long)]
    ell: u64,
    #[arg(long = "N", default_value_t = 11)]
    n: u64,
    /// Coefficient prime; the least admissible one when omitted.
    #[arg(long)]
    p: Option<u64>,
    #[arg(long)]
    s: Option<u32>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn options(c: &Common) -> Result<Options, CliError> {
    let mut fixture = match &c.fixture {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Some(IdentityFixture::parse(&text).map_err(usage)?)
        }
        None => None,
    };
    if c.corrupt_fixture {
        let mut f = fixture.unwrap_or_else(IdentityFixture::l5);
        f.lhs.push(eisencore::k2::FixtureTerm { coef: 1, first: (1, 0), second: (0, 2) });
        fixture = Some(f);
    }
    Ok(Options { seed: c.seed, robustness: !c.no_robustness, probes: c.probes, fixture })
}

const CSV_HEADER: [&str; 13] = ["check", "N", "p", "t", "s", "M", "status", "invariants", "v", "merel_log", "timings_ms", "seed", "version"];

/// One CSV row per JSON record.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct CsvRow {
    check: String,
    #[serde(rename = "N")]
    n: u64,
    p: u64,
    t: u32,
    s: u32,
    #[serde(rename = "M")]
    m: u32,
    status: String,
    invariants: String,
    v: u32,
    merel_log: u64,
    timings_ms: u64,
    seed: u64,
    version: String,
}

impl From<&VerificationReport> for CsvRow {
    fn from(r: &VerificationReport) -> Self {
        CsvRow {
            check: r.check.to_string(),
            n: r.n,
            p: r.p,
            t: r.t,
            s: r.s,
            m: r.m,
            status: r.status.to_string(),
            invariants: r.invariants.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"),
            v: r.v,
            merel_log: r.merel_log,
            timings_ms: r.timings_ms,
            seed: r.seed,
            version: r.version.clone(),
        }
    }
}

type Key = (CheckId, u64, u64, u32, u64, String);

fn key(r: &VerificationReport) -> Key {
    (r.check, r.n, r.p, r.s, r.seed, r.version.clone())
}

fn read_existing(path: &Path) -> Result<Vec<VerificationReport>, CliError> {
    if !path.exists() {
        return Ok(vec![]);
    }
    let f = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut out = vec![];
    for line in BufReader::new(f).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?);
    }
    Ok(out)
}

fn parse_pair(s: &str) -> Option<(u64, u64)> {
    let (a, b) = s.split_once(':')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

fn layers(spec: &str, t: u32) -> Result<Vec<u32>, CliError> {
    match spec {
        "t" => Ok(vec![t]),
        "all" => Ok((1..=t).collect()),
        x => {
            let s: u32 = x.parse().map_err(|_| usage(format!("bad --s value `{x}`")))?;
            Ok(if (1..=t).contains(&s) { vec![s] } else { vec![] })
        }
    }
}

fn survey(a: SurveyArgs) -> Result<u8, CliError> {
    let opts = options(&a.common)?;
    let checks: Vec<CheckId> = if a.checks.is_empty() {
        CheckId::ALL.to_vec()
    } else {
        a.checks.iter().map(|c| c.parse().map_err(usage)).collect::<Result<_, _>>()?
    };
    if a.s != "t" && a.s != "all" && a.s.parse::<u32>().is_err() {
        return Err(usage(format!("bad --s value `{}`", a.s)));
    }
    let mut pairs = vec![];
    if a.pairs.is_empty() {
        pairs = admissible_pairs(a.nmax).into_iter().filter(|&(n, p)| n >= a.nmin && a.p.map_or(true, |q| q == p)).collect();
    } else {
        for s in &a.pairs {
            match parse_pair(s) {
                Some((n, p)) if Layer::new(n, p, None).is_ok() => pairs.push((n, p)),
                _ => eprintln!("skipping `{s}`: not an admissible pair N:p"),
            }
        }
    }
    let dir = a.out.clone().or_else(|| std::env::var_os("EISEN_CACHE_DIR").map(PathBuf::from)).unwrap_or_else(|| "eisen-out".into());
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let json_path = dir.join("reports.jsonl");
    let csv_path = dir.join("summary.csv");
    let existing = read_existing(&json_path)?;
    let done: HashSet<Key> = existing.iter().map(key).collect();

    let mut tasks = vec![];
    let mut prior_fail = false;
    for &(n, p) in &pairs {
        let t = Layer::new(n, p, None).map_err(usage)?.t;
        let ss = layers(&a.s, t)?;
        let mut expected: Vec<Key> = vec![];
        for &c in &checks {
            let svals = if matches!(c, CheckId::Bridge | CheckId::SharifiShadows) { ss.clone() } else { vec![t] };
            expected.extend(svals.into_iter().map(|s| (c, n, p, s, opts.seed, VERSION.to_string())));
        }
        prior_fail |= existing.iter().any(|r| r.status == Status::Fail && expected.contains(&key(r)));
        if expected.iter().all(|k| done.contains(k)) {
            continue;
        }
        tasks.push((n, p, ss));
    }

    let new_csv = !csv_path.exists();
    let open = |p: &Path| {
        OpenOptions::new().create(true).append(true).open(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
    };
    let mut json = open(&json_path)?;
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(open(&csv_path)?);
    if new_csv {
        csv.write_record(CSV_HEADER).map_err(|e| CliError::Io(e.to_string()))?;
        csv.flush()?;
    }

    let (tx, rx) = mpsc::channel::<Result<Vec<VerificationReport>, String>>();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs).build().map_err(|e| CliError::Io(e.to_string()))?;
    let sink = std::thread::scope(|scope| {
        let handle = scope.spawn(move || -> Result<bool, CliError> {
            let mut any_fail = false;
            for msg in rx {
                let reports = msg.map_err(CliError::Io)?;
                for r in reports {
                    if done.contains(&key(&r)) {
                        continue;
                    }
                    any_fail |= r.status == Status::Fail;
                    writeln!(json, "{}", serde_json::to_string(&r).map_err(|e| CliError::Io(e.to_string()))?)?;
                    csv.serialize(CsvRow::from(&r)).map_err(|e| CliError::Io(e.to_string()))?;
                    println!("{:<20} N={:<4} p={:<3} s={} M={} {}", r.check, r.n, r.p, r.s, r.m, r.status);
                }
                json.flush()?;
                csv.flush()?;
            }
            Ok(any_fail)
        });
        pool.install(|| {
            tasks.par_iter().for_each_with(tx, |tx, (n, p, ss)| {
                let res = verify_battery(*n, *p, &checks, ss, &opts).map_err(|e| format!("N={n}, p={p}: {e}"));
                let _ = tx.send(res);
            });
        });
        handle.join().expect("report sink panicked")
    })?;
    Ok(if sink || prior_fail { EXIT_FAIL } else { 0 })
}

fn verify_cmd(a: VerifyArgs) -> Result<u8, CliError> {
    let check: CheckId = a.check.parse().map_err(usage)?;
    let opts = options(&a.common)?;
    Layer::new(a.n, a.p, a.s).map_err(usage)?;
    let r = verify(check, a.n, a.p, a.s, &opts).map_err(usage)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&r).map_err(|e| CliError::Io(e.to_string()))?);
    } else {
        println!("{r}");
    }
    Ok(if r.status == Status::Fail { EXIT_FAIL } else { 0 })
}

fn describe(sv: &IdentitySurvey) -> String {
    let status = if !sv.refuted.is_empty() {
        "Refuted"
    } else if sv.status == Membership::Verified {
        "Verified"
    } else {
        "Inconclusive"
    };
    let mut s = format!("{status}: {}/{} values of v derivable", sv.total - sv.failed.len(), sv.total);
    if !sv.failed.is_empty() {
        s += &format!(", unproved at v={:?}", sv.failed);
    }
    s
}

fn identity_cmd(a: IdentityArgs) -> Result<u8, CliError> {
    if !is_prime(a.ell) || a.ell == a.n {
        return Err(usage(format!("ℓ={} must be a prime different from N", a.ell)));
    }
    let p = match a.p {
        Some(p) => p,
        None => admissible_pairs(a.n)
            .into_iter()
            .find(|&(n, _)| n == a.n)
            .map(|(_, p)| p)
            .ok_or_else(|| usage(format!("N={} has no admissible p; pass --p", a.n)))?,
    };
    let layer = Layer::new(a.n, p, a.s).map_err(usage)?;
    let id = generated_identity(a.ell).map_err(usage)?;
    println!("# (T_{l} - {l}<{l}> - 1)[u,v] as Steinberg symbols: {} + {} terms", id.lhs.len(), id.rhs.len(), l = a.ell);
    print!("{id}");
    let sv = identity_status(a.ell, a.n, p, layer.s).map_err(usage)?;
    println!("# N={}, p={p}, s={}: {}", a.n, layer.s, describe(&sv));
    let mut refuted = !sv.refuted.is_empty();
    if a.ell == 5 {
        let fx = survey_fixture(&IdentityFixture::l5(), a.n, p, layer.s, &[(1, 5)], false).map_err(usage)?;
        println!("# equivalence with the bundled ℓ = 5 identity: {}", describe(&fx));
        refuted |= !fx.refuted.is_empty();
    }
    Ok(if refuted { EXIT_FAIL } else { 0 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.cmd {
        Cmd::Survey(a) => survey(a),
        Cmd::Verify(a) => verify_cmd(a),
        Cmd::Identity(a) => identity_cmd(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_IO)
        }
    }
}
