use std::process::ExitCode;

use accum_lab::cli;
use accum_lab::report::emit_report;

fn main() -> ExitCode {
    let outcome = cli::run(std::env::args_os());
    if let Some(report) = &outcome.report {
        if let Err(e) = emit_report(report, outcome.out.as_deref()) {
            eprintln!("error: cannot write report: {e}");
            return ExitCode::from(2);
        }
    }
    if !outcome.message.is_empty() {
        eprintln!("{}", outcome.message.trim_end());
    }
    ExitCode::from(outcome.exit_code as u8)
}
