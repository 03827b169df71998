use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hfold_core::structure::{union_cardinality, ExtremalExtras};
use hfold_core::subseq::check_subsequence_claim;
use hfold_core::verify::{replay, write_csv, Instance, Outcome};
use hfold_core::{
    build_extremal, classify_regime, generalized_fold_sumset, generalized_union_sumset,
    inverse_verdict, run_campaign, Check, ClaimKind, ExtremalKind, FoldParams, GridConfig, HSpec,
    IntSet, RepSequence, SubseqClaim, Verdict,
};

mod literal;

const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "hfold",
    version,
    about = "Generalized H-fold sumsets: compute, bound, verify"
)]
struct Cli {
    /// Output mode
    #[arg(long, value_enum, global = true, default_value_t = Format::Human)]
    format: Format,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Compute h^(r)A or H^(r)A
    Sumset {
        #[arg(long)]
        set: String,
        #[arg(long, conflicts_with = "hs", required_unless_present = "hs")]
        h: Option<u32>,
        #[arg(long = "H", id = "hs")]
        hs: Option<String>,
        #[arg(long, default_value_t = 1)]
        r: u32,
    },
    /// Classify (k, r, H) and evaluate the matching lower bound
    Bound {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        r: u32,
        #[arg(long = "H")]
        hs: String,
        /// A contains 0
        #[arg(long)]
        zero: bool,
    },
    /// Build a known extremal instance and check its size with the engine
    Extremal {
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        r: u32,
        /// Base set (non-ap-gap)
        #[arg(long)]
        set: Option<String>,
        /// Use {rk-1, rk} (non-ap-gap)
        #[arg(long)]
        upper: bool,
        /// a1,a2 (non-ap-small)
        #[arg(long)]
        pair: Option<String>,
        /// Add 0 to A (non-ap-small)
        #[arg(long)]
        zero: bool,
        /// Subset of {1,2,3} (non-ap-small)
        #[arg(long = "H")]
        hs: Option<String>,
    },
    /// Subsequence sums of (A)_r and the closed-form prediction
    Subseq {
        #[arg(long)]
        set: String,
        #[arg(long, default_value_t = 1)]
        r: u32,
        #[arg(long, default_value_t = 1)]
        alpha: u32,
        /// full | full-inverse | tail | tail-inverse
        #[arg(long, default_value = "tail")]
        claim: String,
    },
    /// Run a verification campaign
    Verify(VerifyArgs),
    /// Replay one instance under one check
    Check {
        #[arg(long)]
        set: String,
        #[arg(long = "H")]
        hs: String,
        #[arg(long)]
        r: u32,
        /// direct | inverse | inverse:<claim>
        #[arg(long, default_value = "direct")]
        check: String,
    },
    /// Evaluate an inverse claim on one instance
    Inverse {
        #[arg(long)]
        set: String,
        #[arg(long = "H")]
        hs: String,
        #[arg(long)]
        r: u32,
        /// Claim id; picked from the regime when omitted
        #[arg(long)]
        claim: Option<String>,
    },
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// TOML grid config; flags below override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = "HFOLD_WORKERS")]
    workers: Option<usize>,
    /// Report JSON destination
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-instance CSV destination
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sample: Option<u64>,
    #[arg(long)]
    instance_cap: Option<u64>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    r_min: Option<u32>,
    #[arg(long)]
    r_max: Option<u32>,
    #[arg(long)]
    dedupe: bool,
    #[arg(long)]
    zero: bool,
    /// Comma-separated checks, e.g. `direct,inverse:main`
    #[arg(long)]
    checks: Option<String>,
}

/// Error carrying the process exit code.
struct Fail(u8, String);

fn usage(e: impl std::fmt::Display) -> Fail {
    Fail(EXIT_USAGE, e.to_string())
}

type Res = Result<u8, Fail>;

fn parse_set(s: &str) -> Result<IntSet, Fail> {
    IntSet::new(literal::parse_ints(s).map_err(usage)?).map_err(usage)
}

fn parse_hs(s: &str) -> Result<HSpec, Fail> {
    HSpec::new(literal::parse_positive(s).map_err(usage)?).map_err(usage)
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable output")
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

fn render_elems(xs: &[i64]) -> String {
    let is_interval = xs.windows(2).all(|w| w[1] == w[0] + 1);
    match (xs.first(), xs.last()) {
        (Some(a), Some(b)) if is_interval && xs.len() > 2 => format!("[{a},{b}]"),
        _ => {
            let parts: Vec<String> = xs.iter().map(i64::to_string).collect();
            format!("{{{}}}", parts.join(","))
        }
    }
}

fn cmd_sumset(fmt: Format, set: &str, h: Option<u32>, hs: Option<&str>, r: u32) -> Res {
    let set = parse_set(set)?;
    let elems = match (h, hs) {
        (Some(h), _) => generalized_fold_sumset(&set, FoldParams::new(h, r).map_err(usage)?),
        (None, Some(hs)) => generalized_union_sumset(&set, parse_hs(hs)?.as_slice(), r),
        (None, None) => return Err(usage("need --h or --H")),
    }
    .map_err(usage)?;
    match fmt {
        Format::Json => println!(
            "{}",
            json(&serde_json::json!({
                "elements": elems,
                "cardinality": elems.len(),
                "min": elems.first(),
                "max": elems.last(),
            }))
        ),
        Format::Csv => {
            println!("element");
            for x in &elems {
                println!("{x}");
            }
        }
        Format::Human => {
            println!("{}", render_elems(&elems));
            println!("|.| = {}", elems.len());
            if let (Some(a), Some(b)) = (elems.first(), elems.last()) {
                println!("min = {a}, max = {b}");
            }
        }
    }
    Ok(0)
}

fn cmd_bound(fmt: Format, k: usize, r: u32, hs: &str, zero: bool) -> Res {
    let hs = parse_hs(hs)?;
    let rep = classify_regime(k, r, &hs, zero).map_err(usage)?;
    match fmt {
        Format::Json => println!("{}", json(&rep)),
        _ => {
            println!("regime: {}", rep.regime);
            println!("value: {}", rep.value());
            for t in &rep.formula.terms {
                println!("  {:<28} {:>8}", t.label, t.value);
            }
            if rep.hypotheses_ok() {
                println!("hypotheses: ok");
            } else {
                println!("hypotheses violated:");
                for v in rep.violations() {
                    println!("  - {v}");
                }
            }
        }
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_extremal(
    fmt: Format,
    kind: &str,
    k: usize,
    r: u32,
    set: Option<&str>,
    upper: bool,
    pair: Option<&str>,
    zero: bool,
    hs: Option<&str>,
) -> Res {
    let kind: ExtremalKind = kind.parse().map_err(usage)?;
    let pair = match pair {
        Some(p) => match literal::parse_ints(p).map_err(usage)?.as_slice() {
            [a, b] => Some((*a, *b)),
            _ => return Err(usage("--pair takes exactly two integers")),
        },
        None => None,
    };
    let extras = ExtremalExtras {
        set: set.map(parse_set).transpose()?,
        upper_pair: upper,
        pair,
        with_zero: zero,
        hs: hs.map(parse_hs).transpose()?,
    };
    let ex = build_extremal(kind, k, r, &extras).map_err(usage)?;
    let actual = union_cardinality(&ex.set, &ex.hs, ex.r).map_err(usage)?;
    let verified = actual as i64 == ex.expected;
    match fmt {
        Format::Json => println!(
            "{}",
            json(
                &serde_json::json!({ "extremal": ex, "enumerated": actual, "verified": verified })
            )
        ),
        _ => {
            println!("A = {}, H = {}, r = {}", ex.set, ex.hs, ex.r);
            println!("expected {}, enumerated {actual}", ex.expected);
            println!("{}", if verified { "verified" } else { "MISMATCH" });
        }
    }
    Ok(if verified { 0 } else { EXIT_VIOLATION })
}

fn cmd_subseq(fmt: Format, set: &str, r: u32, alpha: u32, claim: &str) -> Res {
    let claim: SubseqClaim = claim.parse().map_err(usage)?;
    let seq = RepSequence::new(parse_set(set)?, r).map_err(usage)?;
    let rep = check_subsequence_claim(&seq, alpha, claim).map_err(usage)?;
    let bad = rep.prediction.hypotheses_ok() && !rep.holds || rep.conclusion_ok == Some(false);
    match fmt {
        Format::Json => println!("{}", json(&rep)),
        _ => {
            println!("sequence {seq}, alpha = {}", rep.alpha);
            println!("|sums| = {}", rep.cardinality);
            println!(
                "{} predicts {} (m = {})",
                claim, rep.prediction.value, rep.prediction.m
            );
            if let Some(shape) = rep.prediction.shape {
                println!("equality forces {shape}");
            }
            for v in &rep.prediction.violations {
                println!("  hypothesis not met: {v}");
            }
            let status = match (rep.holds, rep.equality, rep.conclusion_ok) {
                (_, _, Some(false)) => "conclusion VIOLATED",
                (_, true, _) => "equality",
                (true, false, _) => "held",
                (false, _, _) => "below prediction",
            };
            println!("{status}");
        }
    }
    Ok(if bad { EXIT_VIOLATION } else { 0 })
}

fn effective_config(a: &VerifyArgs) -> Result<GridConfig, Fail> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            GridConfig::from_toml(&text).map_err(usage)?
        }
        None => GridConfig::default(),
    };
    macro_rules! over {
        ($($f:ident),*) => { $( if let Some(v) = a.$f { cfg.$f = v; } )* };
    }
    over!(k_min, k_max, r_min, r_max, instance_cap);
    if a.seed.is_some() {
        cfg.seed = a.seed;
    }
    if a.sample.is_some() {
        cfg.sample = a.sample;
    }
    if a.workers.is_some() {
        cfg.workers = a.workers;
    }
    cfg.dedupe_dilation |= a.dedupe;
    cfg.contains_zero |= a.zero;
    if let Some(c) = &a.checks {
        cfg.checks = c
            .split(',')
            .map(|s| s.parse::<Check>())
            .collect::<Result<_, _>>()
            .map_err(usage)?;
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn cmd_verify(fmt: Format, a: &VerifyArgs) -> Res {
    let cfg = effective_config(a)?;
    eprintln!("effective config:");
    eprint!("{}", toml::to_string(&cfg).map_err(usage)?);
    if let Some(w) = cfg.workers {
        eprintln!("workers = {w}");
    }
    let campaign = run_campaign(&cfg).map_err(usage)?;
    let report = &campaign.report;
    if let Some(p) = &a.out {
        report
            .write_json(p)
            .map_err(|e| Fail(EXIT_PARTIAL, e.to_string()))?;
    }
    if let Some(p) = &a.csv {
        let f = fs::File::create(p).map_err(|e| Fail(EXIT_PARTIAL, e.to_string()))?;
        write_csv(&campaign.records, f).map_err(|e| Fail(EXIT_PARTIAL, e.to_string()))?;
    }
    match fmt {
        Format::Json => println!("{}", report.to_json()),
        Format::Csv => write_csv(&campaign.records, io::stdout()).map_err(usage)?,
        Format::Human => {
            let body = &report.body;
            println!(
                "{} instances, {:?}, {} ms, workers = {}",
                body.instances_checked, body.outcome, report.run.wall_ms, report.run.workers
            );
            println!(
                "{:<28} {:>8} {:>8} {:>8} {:>8} {:>8} {:>6}",
                "check", "checked", "held", "tight", "violated", "n/a", "error"
            );
            for (name, t) in &body.tallies {
                println!(
                    "{:<28} {:>8} {:>8} {:>8} {:>8} {:>8} {:>6}",
                    name, t.checked, t.held, t.tight, t.violated, t.inapplicable, t.errors
                );
            }
            for c in body.counterexamples.iter().take(20) {
                println!(
                    "  VIOLATED {} A={} H={} r={} formula={} enumerated={}{}",
                    c.check,
                    c.set,
                    c.hs,
                    c.r,
                    opt(c.formula),
                    opt(c.enumerated),
                    if c.notes.is_empty() {
                        String::new()
                    } else {
                        format!(" ({})", c.notes.join("; "))
                    }
                );
            }
            if body.counterexamples.len() > 20 {
                println!("  ... {} more", body.counterexamples.len() - 20);
            }
        }
    }
    Ok(match report.body.outcome {
        Outcome::Clean => 0,
        Outcome::Violations => EXIT_VIOLATION,
        Outcome::PartialFailure => EXIT_PARTIAL,
    })
}

fn cmd_check(fmt: Format, set: &str, hs: &str, r: u32, check: &str) -> Res {
    let check: Check = check.parse().map_err(usage)?;
    if r == 0 {
        return Err(usage("r must be positive"));
    }
    let inst = Instance {
        r,
        set: parse_set(set)?,
        hs: parse_hs(hs)?,
    };
    let rec = replay(&inst, check);
    match fmt {
        Format::Json => println!("{}", json(&rec)),
        Format::Csv => write_csv(std::slice::from_ref(&rec), io::stdout()).map_err(usage)?,
        Format::Human => {
            println!(
                "{} A={} H={} r={}: {} ({}) formula={} enumerated={}",
                rec.check,
                rec.set,
                rec.hs,
                rec.r,
                rec.verdict,
                rec.regime.as_deref().unwrap_or("-"),
                opt(rec.formula),
                opt(rec.enumerated)
            );
            for n in &rec.notes {
                println!("  - {n}");
            }
        }
    }
    Ok(match rec.verdict {
        Verdict::Violated => EXIT_VIOLATION,
        Verdict::Error => EXIT_PARTIAL,
        _ => 0,
    })
}

fn cmd_inverse(fmt: Format, set: &str, hs: &str, r: u32, claim: Option<&str>) -> Res {
    let set = parse_set(set)?;
    let hs = parse_hs(hs)?;
    let claim = match claim {
        Some(c) => c.parse::<ClaimKind>().map_err(usage)?,
        None => hfold_core::auto_claim(&set, &hs, r).map_err(usage)?,
    };
    let v = inverse_verdict(&set, &hs, r, claim).map_err(usage)?;
    match fmt {
        Format::Json => println!("{}", json(&v)),
        _ => {
            println!("claim: {}", v.claim);
            println!(
                "|H^(r)A| = {}, bound = {}, equality = {}",
                v.cardinality,
                opt(v.bound),
                v.equality
            );
            println!("H: {}; A: {}", v.h_ap, v.a_ap);
            if let Some(w) = v.whole_ap {
                println!("whole A: {w}");
            }
            for h in &v.violations {
                println!("  hypothesis not met: {h}");
            }
            match v.conclusion_ok {
                Some(true) => println!("conclusion held"),
                Some(false) => {
                    println!("conclusion VIOLATED: {}", v.conclusion_failures.join("; "))
                }
                None => println!("conclusion not tested"),
            }
        }
    }
    Ok(if v.conclusion_ok == Some(false) {
        EXIT_VIOLATION
    } else {
        0
    })
}

fn run(cli: Cli) -> Res {
    let fmt = cli.format;
    match &cli.cmd {
        Cmd::Sumset { set, h, hs, r } => cmd_sumset(fmt, set, *h, hs.as_deref(), *r),
        Cmd::Bound { k, r, hs, zero } => cmd_bound(fmt, *k, *r, hs, *zero),
        Cmd::Extremal {
            kind,
            k,
            r,
            set,
            upper,
            pair,
            zero,
            hs,
        } => cmd_extremal(
            fmt,
            kind,
            *k,
            *r,
            set.as_deref(),
            *upper,
            pair.as_deref(),
            *zero,
            hs.as_deref(),
        ),
        Cmd::Subseq {
            set,
            r,
            alpha,
            claim,
        } => cmd_subseq(fmt, set, *r, *alpha, claim),
        Cmd::Verify(a) => cmd_verify(fmt, a),
        Cmd::Check { set, hs, r, check } => cmd_check(fmt, set, hs, *r, check),
        Cmd::Inverse { set, hs, r, claim } => cmd_inverse(fmt, set, hs, *r, claim.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("hfold: {msg}");
            ExitCode::from(code)
        }
    }
}
