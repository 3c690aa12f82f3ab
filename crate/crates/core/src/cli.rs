//! Command-line front end. Every subcommand produces a [`RunReport`]; each
//! witness it emits is re-checked by the prefix oracle first.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_traits::Zero;
use serde::Serialize;
use serde_json::{json, Value};

use crate::constructors::{build_nk_basis, check_nk_membership, greedy_is_minimal};
use crate::expr::{parse_coefficients, parse_rule, parse_set_expr};
use crate::omega::{pairwise_distance, AlmostDisjointFamily, BinaryPattern, OmegaCombination};
use crate::oracle::{oracle_check, OracleConfig, TruncatedOmega};
use crate::rational::{self, Rational};
use crate::report::RunReport;
use crate::set_gates::{dense_gate, lineable_gate, PrescribedSet};
use crate::span_geometry::{
    decrement_witness, decrement_with_plateaus, gap_witness, interaction, overflow_peel, spectrum,
    witness_max_and_submax, WitnessReport,
};
use crate::step_seq::{linear_combine, StepSequence};
use crate::verify::{case_rng, run_all, run_suite, SUITE_NAMES};

#[derive(Debug, Parser)]
#[command(name = "accum-lab", version, about = "Accumulation-set experiments on step sequences")]
pub struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized trials.
    #[arg(long, global = true, env = "ACCUM_LAB_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cardinalities |L_{λx+μy}| over all directions.
    Spectrum { x: PathBuf, y: PathBuf },
    /// Explicit witnesses for prescribed cardinalities.
    #[command(subcommand)]
    Witness(WitnessCommand),
    /// Shift-intersection gates for a prescribed set.
    Gate {
        set: String,
        #[arg(long, default_value_t = 10)]
        kmax: u64,
    },
    /// Inductive basis avoiding the intervals [n_k, n_{k+1}), k ∈ 𝓚.
    Basis(BasisArgs),
    /// Pairwise distances and limit sets for an almost-disjoint family.
    Nonsep(NonsepArgs),
    /// Seeded verification suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum WitnessCommand {
    /// z = −Cx + y for |L_x| < |L_y| = |𝓔|.
    Gap { x: PathBuf, y: PathBuf },
    /// z with |L_z| = |𝓔| − 1 from a two-plateau x.
    Decrement {
        y: PathBuf,
        #[arg(long, default_value = "0")]
        eps: String,
        /// Use this two-plateau sequence instead of the constructed one.
        #[arg(long)]
        x: Option<PathBuf>,
    },
    /// Generic and collapsing combinations of x and y.
    Maxsub { x: PathBuf, y: PathBuf },
    /// Peel trailing terms from an overflowing combination.
    Peel {
        family: Vec<PathBuf>,
        #[arg(long)]
        coefs: String,
    },
}

#[derive(Debug, Args)]
pub struct BasisArgs {
    #[arg(long)]
    pub nk: String,
    #[arg(long)]
    pub r: usize,
    /// Random combinations to check against the certified windows.
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct NonsepArgs {
    /// Comma-separated patterns such as `bin(;0),bin(1;01)`.
    #[arg(long)]
    pub labels: String,
    #[arg(long = "M", default_value_t = 4)]
    pub m: u32,
    #[arg(long, default_value = "1/2")]
    pub ratio: String,
    #[arg(long, default_value_t = 20_000)]
    pub prefix: usize,
}

#[derive(Debug)]
pub enum CliError {
    /// Malformed input: exit code 2.
    Parse(String),
    /// Valid input the mathematics rejects: exit code 1.
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Domain(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Parse(m) | CliError::Domain(m) => m,
        }
    }
}

fn parse_err(e: impl std::fmt::Display) -> CliError {
    CliError::Parse(e.to_string())
}

fn domain_err(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

pub struct Outcome {
    pub report: Option<RunReport>,
    pub exit_code: i32,
    pub out: Option<PathBuf>,
    /// Text for stderr.
    pub message: String,
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return Outcome { report: None, exit_code: code, out: None, message: e.to_string() };
        }
    };
    let out = cli.out.clone();
    match execute(&cli) {
        Ok(report) => {
            let exit_code = if report.checks_failed == 0 { 0 } else { 1 };
            let message = format!(
                "{}: {} checks passed, {} failed",
                report.command, report.checks_passed, report.checks_failed
            );
            Outcome { report: Some(report), exit_code, out, message }
        }
        Err(e) => Outcome { report: None, exit_code: e.exit_code(), out, message: format!("error: {}", e.message()) },
    }
}

fn load_seq(path: &Path) -> Result<StepSequence, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| parse_err(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// Oracle re-check of a witness: the prefix clusters equal `L_z` and count `card`.
fn verify_witness(report: &mut RunReport, w: &StepSequence, card: usize) -> Value {
    let cfg = OracleConfig::for_step_sequence(w);
    match oracle_check(w, &cfg) {
        Ok(chk) => {
            report.check(chk.agrees && chk.oracle.len() == card);
            json!({ "prefix_len": cfg.prefix_len, "burn_in": cfg.burn_in, "agrees": chk.agrees, "clusters": chk.oracle.len() })
        }
        Err(e) => {
            report.check(false);
            json!({ "error": e.to_string() })
        }
    }
}

fn witness_value(report: &mut RunReport, w: &WitnessReport) -> Value {
    let oracle = verify_witness(report, &w.witness, w.cardinality);
    json!({ "witness": to_json(w), "oracle": oracle })
}

pub fn execute(cli: &Cli) -> Result<RunReport, CliError> {
    match &cli.command {
        Command::Spectrum { x, y } => cmd_spectrum(x, y, cli.seed),
        Command::Witness(w) => cmd_witness(w, cli.seed),
        Command::Gate { set, kmax } => cmd_gate(set, *kmax, cli.seed),
        Command::Basis(args) => cmd_basis(args, cli.seed),
        Command::Nonsep(args) => cmd_nonsep(args, cli.seed),
        Command::Verify { suite } => cmd_verify(suite, cli.seed),
    }
}

fn cmd_spectrum(xp: &Path, yp: &Path, seed: u64) -> Result<RunReport, CliError> {
    let (x, y) = (load_seq(xp)?, load_seq(yp)?);
    let mut report = RunReport::new("spectrum", json!({ "x": path_str(xp), "y": path_str(yp) }), seed);
    let si = interaction(&x, &y);
    let spec = spectrum(&si);
    report.check(spec.iter().next_back() == Some(&si.e_count()));
    let mut directions = Vec::new();
    for (l, m) in si.direction_classes() {
        let z = linear_combine(&[(l.clone(), &x), (m.clone(), &y)]).map_err(domain_err)?;
        let card = z.accumulation_count();
        let oracle = verify_witness(&mut report, &z, card);
        directions.push(json!({
            "lambda": rational::format(&l),
            "mu": rational::format(&m),
            "card": card,
            "oracle": oracle,
        }));
    }
    report.outputs = json!({
        "e_count": si.e_count(),
        "interaction": to_json(&si),
        "spectrum": spec,
        "directions": directions,
    });
    Ok(report)
}

fn cmd_witness(w: &WitnessCommand, seed: u64) -> Result<RunReport, CliError> {
    match w {
        WitnessCommand::Gap { x: xp, y: yp } => {
            let (x, y) = (load_seq(xp)?, load_seq(yp)?);
            let mut report = RunReport::new("witness gap", json!({ "x": path_str(xp), "y": path_str(yp) }), seed);
            let g = gap_witness(&x, &y).map_err(domain_err)?;
            let card = g.report.cardinality;
            report.check(g.n2 - g.n1 < card && card < g.n2);
            report.check(card == g.e_count - g.multiplicity);
            let oracle = verify_witness(&mut report, &g.report.witness, card);
            report.outputs = json!({ "gap": to_json(&g), "oracle": oracle });
            Ok(report)
        }
        WitnessCommand::Decrement { y: yp, eps, x: xp } => {
            let y = load_seq(yp)?;
            let eps: Rational = rational::parse(eps).map_err(parse_err)?;
            let inputs = json!({
                "y": path_str(yp),
                "eps": rational::format(&eps),
                "x": xp.as_deref().map(path_str),
            });
            let mut report = RunReport::new("witness decrement", inputs, seed);
            let d = match xp {
                Some(p) => decrement_with_plateaus(&load_seq(p)?, &y, &eps),
                None => decrement_witness(&y, &eps),
            }
            .map_err(domain_err)?;
            report.check(d.report.cardinality + 1 == d.e_count);
            let oracle = verify_witness(&mut report, &d.report.witness, d.report.cardinality);
            report.outputs = json!({ "decrement": to_json(&d), "oracle": oracle });
            Ok(report)
        }
        WitnessCommand::Maxsub { x: xp, y: yp } => {
            let (x, y) = (load_seq(xp)?, load_seq(yp)?);
            let mut report = RunReport::new("witness maxsub", json!({ "x": path_str(xp), "y": path_str(yp) }), seed);
            let (max, sub) = witness_max_and_submax(&x, &y).map_err(domain_err)?;
            let e = interaction(&x, &y).e_count();
            report.check(max.cardinality == e);
            report.check(sub.cardinality < e);
            report.outputs = json!({
                "e_count": e,
                "max": witness_value(&mut report, &max),
                "submax": witness_value(&mut report, &sub),
            });
            Ok(report)
        }
        WitnessCommand::Peel { family, coefs } => {
            let fam: Vec<StepSequence> = family.iter().map(|p| load_seq(p)).collect::<Result<_, _>>()?;
            let coefs = parse_coefficients(coefs).map_err(parse_err)?;
            let inputs = json!({
                "family": family.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
                "coefs": coefs.iter().map(rational::format).collect::<Vec<_>>(),
            });
            let mut report = RunReport::new("witness peel", inputs, seed);
            let n = fam.len();
            let p = overflow_peel(&fam, &coefs, n).map_err(domain_err)?;
            report.check((n + 1..=n * n).contains(&p.cardinality));
            let oracle = verify_witness(&mut report, &p.witness, p.cardinality);
            report.outputs = json!({ "peel": to_json(&p), "oracle": oracle });
            Ok(report)
        }
    }
}

fn evidence_ok(a: &PrescribedSet, k: Option<u64>, evidence: &[u64]) -> bool {
    match k {
        Some(k) => !evidence.is_empty() && evidence.iter().all(|&n| a.contains(n) && a.contains(n + k)),
        None => true,
    }
}

fn cmd_gate(expr: &str, kmax: u64, seed: u64) -> Result<RunReport, CliError> {
    let a = parse_set_expr(expr).map_err(parse_err)?;
    let mut report = RunReport::new("gate", json!({ "set": expr, "kmax": kmax }), seed);
    let lin = lineable_gate(&a, kmax).map_err(domain_err)?;
    let den = dense_gate(&a).map_err(domain_err)?;
    report.check(evidence_ok(&a, lin.witness_k, &lin.evidence));
    report.check(evidence_ok(&a, den.witness_k, &den.evidence));
    // A dense pass is a lineable pass at k = 1.
    report.check(!den.holds || lin.witness_k == Some(1));
    report.outputs = json!({
        "set": a.to_string(),
        "lineable": to_json(&lin),
        "dense": to_json(&den),
    });
    Ok(report)
}

fn cmd_basis(args: &BasisArgs, seed: u64) -> Result<RunReport, CliError> {
    let rule = parse_rule(&args.nk).map_err(parse_err)?;
    let inputs = json!({ "nk": args.nk, "r": args.r, "samples": args.samples });
    let mut report = RunReport::new("basis", inputs, seed);
    let basis = build_nk_basis(&rule, args.r).map_err(domain_err)?;
    report.check(greedy_is_minimal(&basis, &rule));
    let mut oracle = Vec::new();
    for (b, &l) in basis.basis.iter().zip(&basis.l_values) {
        oracle.push(verify_witness(&mut report, b, l as usize));
    }
    let removed = basis.removed_indices();
    let mut samples = Vec::new();
    let r = basis.basis.len();
    for t in 0..args.samples {
        let mut rng = case_rng(seed, 6, t as u64);
        let coefs: Vec<Rational> = loop {
            let c: Vec<Rational> = (0..r)
                .map(|_| if rand::Rng::gen_bool(&mut rng, 0.3) { Rational::zero() } else { crate::verify::random_coef(&mut rng) })
                .collect();
            if c.iter().any(|q| !q.is_zero()) {
                break c;
            }
        };
        let chk = check_nk_membership(&basis, &coefs, &rule, &removed).map_err(domain_err)?;
        report.check(chk.holds());
        samples.push(json!({ "coefs": coefs.iter().map(rational::format).collect::<Vec<_>>(), "check": to_json(&chk) }));
    }
    report.outputs = json!({ "basis": to_json(&basis), "oracle": oracle, "samples": samples });
    Ok(report)
}

fn cmd_nonsep(args: &NonsepArgs, seed: u64) -> Result<RunReport, CliError> {
    let labels: Vec<BinaryPattern> =
        args.labels.split(',').map(|s| s.parse()).collect::<Result<_, _>>().map_err(parse_err)?;
    let ratio = rational::parse(&args.ratio).map_err(parse_err)?;
    let inputs = json!({
        "labels": labels.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
        "M": args.m,
        "ratio": rational::format(&ratio),
        "prefix": args.prefix,
    });
    let mut report = RunReport::new("nonsep", inputs, seed);
    let fam = AlmostDisjointFamily::new(labels).map_err(domain_err)?;
    let xs = (0..fam.labels.len()).map(|i| fam.vector(i, ratio.clone())).collect::<Result<Vec<_>, _>>().map_err(domain_err)?;
    let mut distances = Vec::new();
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let d = pairwise_distance(&xs[i], &xs[j]).map_err(domain_err)?;
            let witnessed = d.witness.is_some_and(|n| num_traits::Signed::abs(&(xs[i].value_at(n) - xs[j].value_at(n))) == d.distance);
            report.check(d.distance == rational::int(1) && witnessed);
            distances.push(json!({ "pair": [i, j], "distance": to_json(&d) }));
        }
    }
    let mut limits = Vec::new();
    let all_ones = OmegaCombination::new(xs.iter().map(|x| (rational::int(1), x.clone())).collect()).map_err(domain_err)?;
    let singles: Vec<OmegaCombination> = xs
        .iter()
        .map(|x| OmegaCombination::new(vec![(rational::int(1), x.clone())]).expect("nonzero coefficient"))
        .collect();
    for (name, comb) in singles.iter().enumerate().map(|(i, c)| (format!("x{i}"), c)).chain([("sum".to_string(), &all_ones)]) {
        let cfg = OracleConfig::exact(args.prefix, comb.burn_in()).map_err(domain_err)?;
        let t = TruncatedOmega { combination: comb, truncation: args.m };
        match oracle_check(&t, &cfg) {
            Ok(chk) => {
                report.check(chk.agrees);
                limits.push(json!({ "combination": name, "oracle": to_json(&chk) }));
            }
            Err(e) => {
                report.check(false);
                limits.push(json!({ "combination": name, "error": e.to_string() }));
            }
        }
    }
    report.outputs = json!({ "distances": distances, "limits": limits });
    Ok(report)
}

fn cmd_verify(suite: &str, seed: u64) -> Result<RunReport, CliError> {
    let outcomes = if suite == "all" {
        run_all(seed)
    } else {
        let s = run_suite(suite, seed)
            .ok_or_else(|| parse_err(format!("unknown suite `{suite}`; expected all or one of {}", SUITE_NAMES.join(", "))))?;
        vec![s]
    };
    let mut report = RunReport::new("verify", json!({ "suite": suite }), seed);
    report.checks_passed = outcomes.iter().map(|o| o.checks_passed).sum();
    report.checks_failed = outcomes.iter().map(|o| o.checks_failed).sum();
    report.outputs = json!({ "suites": to_json(&outcomes) });
    Ok(report)
}
