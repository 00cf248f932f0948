mod args;
mod commands;
mod report;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::json;

use args::{Cli, Command};
use commands::*;
use report::Report;

fn threads() -> Result<Option<usize>, String> {
    match std::env::var("FOLITOR_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("FOLITOR_THREADS must be a positive integer, got '{v}'")),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let threads = match threads() {
        Ok(t) => t,
        Err(m) => {
            eprintln!("error: {m}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let start = Instant::now();
    let (mut rep, outcome, out) = match &cli.command {
        Command::Analyze(a) => {
            let cfg = json!({"cutoff": a.cutoff});
            let mut r = Report::new("analyze", extend_common(&a.common, cfg));
            let o = analyze_cmd(a, &mut r);
            (r, o, a.common.out.clone())
        }
        Command::Solve(a) => {
            let mut r = Report::new("solve", solve_config(a));
            let o = solve_cmd(a, &mut r);
            (r, o, a.common.out.clone())
        }
        Command::Metric(a) => {
            let mut r = Report::new("metric", solve_config(a));
            let o = metric_cmd(a, &mut r);
            (r, o, a.common.out.clone())
        }
        Command::Counterexample(a) => {
            let mut r = Report::new("counterexample", counterexample_config(a));
            let o = counterexample_cmd(a, &mut r);
            (r, o, a.common.out.clone())
        }
        Command::Chart(a) => {
            let mut r = Report::new("chart", chart_config(a));
            let o = chart_cmd(a, &mut r);
            (r, o, a.solve.common.out.clone())
        }
        Command::Verify(a) => {
            let mut r = Report::new("verify", verify_config(a));
            let o = verify_cmd(a, &mut r);
            (r, o, a.common.out.clone())
        }
    };
    let code = match &outcome {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            rep.fail(f.code(), f.message().to_string());
            f.code()
        }
    };
    rep.timing = json!({
        "elapsed_seconds": start.elapsed().as_secs_f64(),
        "threads": threads.unwrap_or_else(rayon::current_num_threads),
    });
    if let Err(e) = rep.write(out.as_deref()) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code as u8)
}

fn extend_common(c: &args::Common, extra: serde_json::Value) -> serde_json::Value {
    let mut base = common_config(c);
    if let (Some(b), serde_json::Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}
