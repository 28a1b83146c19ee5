//! Command-line front end. `main` only forwards to [`run`] so the commands
//! can be driven in-process by tests.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::acs::run_acs;
use crate::baseline::compare_methods;
use crate::dataflow::AnalysisResult;
use crate::ir::{parse_program, print_program, to_dot, Label, ProgramCfg, Slot};
use crate::oracle::{
    check_fact_invariants, check_mop, check_solvers, differential_check_variant, fuzz, has_cycle,
    random_inputs, FuzzConfig, GenParams, Variant, Verdict,
};
use crate::propagate::{propagate, transform_to_fixpoint};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "copyprop", version, about = "Available copy statements analysis and propagation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the available copy pairs at each reachable block.
    Analyze {
        file: PathBuf,
        /// Also print OUT sets.
        #[arg(long)]
        out_sets: bool,
    },
    /// Propagate copies and constants and print the rewritten program.
    Transform {
        file: PathBuf,
        /// Re-analyze and rewrite up to N rounds until nothing changes.
        #[arg(long, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
        iterate: Option<u32>,
        /// Append one line per replacement.
        #[arg(long)]
        report: bool,
    },
    /// Compare single-definition propagation with chain-resolving propagation.
    Compare { file: PathBuf },
    /// Differential and cross-solver checking of a file or of fuzzed programs.
    Check {
        #[arg(required_unless_present = "fuzz", conflicts_with = "fuzz")]
        file: Option<PathBuf>,
        #[arg(long)]
        fuzz: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        programs: u64,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        inputs: u64,
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        fuel: u64,
        /// Compare against path enumeration on acyclic programs.
        #[arg(long)]
        acyclic_mop: bool,
    },
    /// Graphviz output.
    Dot {
        file: PathBuf,
        /// Add the IN set to each node.
        #[arg(long)]
        annotate: bool,
        /// Render the transformed program.
        #[arg(long)]
        transformed: bool,
    },
}

struct Failure(i32);

type CmdResult = Result<i32, Failure>;

fn load(path: &Path, err: &mut dyn Write) -> Result<ProgramCfg, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
        Failure(EXIT_USAGE)
    })?;
    parse_program(&text).map_err(|e| {
        let _ = writeln!(err, "error: {}: {e}", path.display());
        Failure(EXIT_USAGE)
    })
}

fn io(_: std::io::Error) -> Failure {
    Failure(EXIT_FAILURE)
}

/// `<label>: IN = { ... }` for each reachable block in label order.
pub fn analysis_report(result: &AnalysisResult, out_sets: bool) -> String {
    let mut text = String::new();
    for label in &result.reachable {
        text.push_str(&format!("{label}: IN = {}\n", result.in_set(label)));
        if out_sets {
            text.push_str(&format!("{label}: OUT = {}\n", result.out_set(label)));
        }
    }
    text
}

fn in_set_annotations(result: &AnalysisResult) -> BTreeMap<Label, String> {
    result
        .reachable
        .iter()
        .map(|l| (l.clone(), format!("IN = {}", result.in_set(l))))
        .collect()
}

fn analyze(file: &Path, out_sets: bool, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let cfg = load(file, err)?;
    let result = run_acs(&cfg);
    out.write_all(analysis_report(&result, out_sets).as_bytes())
        .map_err(io)?;
    Ok(EXIT_OK)
}

fn transform_cmd(
    file: &Path,
    iterate: Option<u32>,
    report: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let cfg = load(file, err)?;
    let (program, rep) = match iterate {
        Some(n) => transform_to_fixpoint(&cfg, n as usize),
        None => propagate(&cfg),
    };
    out.write_all(print_program(&program).as_bytes()).map_err(io)?;
    if report {
        writeln!(out, "# replacements: {} in {} pass(es)", rep.len(), rep.pass_count).map_err(io)?;
        for r in &rep.replacements {
            writeln!(out, "# {r}").map_err(io)?;
        }
        if !rep.converged {
            writeln!(out, "# not converged after {} rounds", rep.pass_count).map_err(io)?;
        }
    }
    if !rep.converged {
        let _ = writeln!(err, "warning: no fixpoint within {} rounds", rep.pass_count);
    }
    Ok(EXIT_OK)
}

fn compare(file: &Path, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let cfg = load(file, err)?;
    let cmp = compare_methods(&cfg);
    writeln!(out, "classic={} unified={}", cmp.classic.len(), cmp.unified.len()).map_err(io)?;
    // (block, slot) -> (original, classic replacement, unified replacement)
    type Site = (String, Option<String>, Option<String>);
    let mut sites: BTreeMap<(Label, Slot), Site> = BTreeMap::new();
    for r in &cmp.classic.replacements {
        sites
            .entry((r.block.clone(), r.slot))
            .or_insert_with(|| (r.original.to_string(), None, None))
            .1 = Some(r.replacement.to_string());
    }
    for r in &cmp.unified.replacements {
        sites
            .entry((r.block.clone(), r.slot))
            .or_insert_with(|| (r.original.to_string(), None, None))
            .2 = Some(r.replacement.to_string());
    }
    for ((block, slot), (orig, classic, unified)) in &sites {
        writeln!(
            out,
            "{block} {slot} {orig}: classic={} unified={}",
            classic.as_deref().unwrap_or("-"),
            unified.as_deref().unwrap_or("-")
        )
        .map_err(io)?;
    }
    if cmp.violations.is_empty() {
        Ok(EXIT_OK)
    } else {
        for v in &cmp.violations {
            let _ = writeln!(err, "dominance violated: {v}");
        }
        Ok(EXIT_FAILURE)
    }
}

struct CheckArgs {
    seed: u64,
    programs: usize,
    inputs: usize,
    fuel: usize,
    acyclic_mop: bool,
}

fn check_file(file: &Path, args: &CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let cfg = load(file, err)?;
    let mut failures = Vec::new();
    if let Err(e) = check_solvers(&cfg) {
        failures.push(format!("solvers: {e}"));
    }
    if let Err(e) = check_fact_invariants(&run_acs(&cfg)) {
        failures.push(format!("fact-invariants: {e}"));
    }
    let acyclic = !has_cycle(&cfg);
    if args.acyclic_mop && acyclic {
        if let Err(e) = check_mop(&cfg) {
            failures.push(format!("mop: {e}"));
        }
    }
    let inputs = random_inputs(&cfg, args.inputs, args.seed);
    let mut dump = None;
    for variant in [Variant::SinglePass, Variant::Fixpoint(10)] {
        if let Verdict::Fail(cx) = differential_check_variant(&cfg, &inputs, args.fuel, variant) {
            failures.push(format!("differential: {}", cx.reason));
            dump = Some(cx.to_text());
            break;
        }
    }
    if failures.is_empty() {
        let mop = if args.acyclic_mop && acyclic { " mop=checked" } else { "" };
        writeln!(out, "PASS inputs={} seed={}{mop}", args.inputs, args.seed).map_err(io)?;
        Ok(EXIT_OK)
    } else {
        writeln!(out, "FAIL").map_err(io)?;
        for f in &failures {
            writeln!(out, "{f}").map_err(io)?;
        }
        if let Some(d) = dump {
            out.write_all(d.as_bytes()).map_err(io)?;
        }
        Ok(EXIT_FAILURE)
    }
}

fn check_fuzz(args: &CheckArgs, out: &mut dyn Write) -> CmdResult {
    let config = FuzzConfig {
        seed: args.seed,
        programs: args.programs,
        inputs: args.inputs,
        fuel: args.fuel,
        params: GenParams::default(),
        mop: args.acyclic_mop,
        fixpoint_rounds: 10,
    };
    let report = fuzz(&config);
    match report.failure {
        None => {
            writeln!(
                out,
                "PASS programs={} inputs={} acyclic={} seed={}",
                report.programs, args.inputs, report.acyclic, args.seed
            )
            .map_err(io)?;
            Ok(EXIT_OK)
        }
        Some(f) => {
            writeln!(out, "FAIL program #{} ({}): {}", f.index, f.check, f.detail).map_err(io)?;
            if let Some(cx) = f.counterexample {
                out.write_all(cx.to_text().as_bytes()).map_err(io)?;
            }
            Ok(EXIT_FAILURE)
        }
    }
}

fn dot(
    file: &Path,
    annotate: bool,
    transformed: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let cfg = load(file, err)?;
    let program = if transformed { propagate(&cfg).0 } else { cfg };
    let notes = annotate.then(|| in_set_annotations(&run_acs(&program)));
    out.write_all(to_dot(&program, notes.as_ref()).as_bytes())
        .map_err(io)?;
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Analyze { file, out_sets } => analyze(&file, out_sets, out, err),
        Command::Transform {
            file,
            iterate,
            report,
        } => transform_cmd(&file, iterate, report, out, err),
        Command::Compare { file } => compare(&file, out, err),
        Command::Check {
            file,
            fuzz,
            seed,
            programs,
            inputs,
            fuel,
            acyclic_mop,
        } => {
            let args = CheckArgs {
                seed,
                programs: programs as usize,
                inputs: inputs as usize,
                fuel: fuel as usize,
                acyclic_mop,
            };
            match (file, fuzz) {
                (Some(f), false) => check_file(&f, &args, out, err),
                (None, true) => check_fuzz(&args, out),
                _ => {
                    let _ = writeln!(err, "error: give either a FILE or --fuzz");
                    Err(Failure(EXIT_USAGE))
                }
            }
        }
        Command::Dot {
            file,
            annotate,
            transformed,
        } => dot(&file, annotate, transformed, out, err),
    };
    match result {
        Ok(code) | Err(Failure(code)) => code,
    }
}
