use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use clap::error::ErrorKind;
use crparallax::analysis::{self, Command, Status};
use crparallax::report::ReportDocument;
use crparallax::{catalog_text, plan, Cli, Cmd, RunArgs};

fn summary(doc: &ReportDocument) -> String {
    let mut s = String::new();
    if let Some(surface) = &doc.surface {
        s.push_str(&format!("surface {}: {}\n", surface.name, surface.text));
    }
    if let Some(m) = &doc.model_algebra {
        s.push_str(&format!("model algebra d^2 = 0: {}\n", if m.passed { "ok" } else { "FAILED" }));
    }
    for p in &doc.points {
        let state = match (&p.class, &p.admissible.reason) {
            (Some(c), _) => c.clone(),
            (None, Some(r)) => format!("inadmissible ({r})"),
            (None, None) => "admissible".to_owned(),
        };
        s.push_str(&format!("[{}] {}  {}\n", p.index, p.point, state));
        if let Some(v) = &p.values {
            for (name, x) in [("J", &v.j), ("W", &v.w)] {
                if let Some(x) = x {
                    s.push_str(&format!("    {name} = {} + ({})i\n", x.re, x.im));
                }
            }
        }
        let failed: Vec<_> = p.identities.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
        if !failed.is_empty() {
            s.push_str(&format!("    failed: {}\n", failed.join(", ")));
        }
        if let Some(w) = &p.w_probe {
            s.push_str(&format!("    W relations holding: {}\n", w.holds));
        }
    }
    for d in &doc.discrepancies {
        s.push_str(&format!(
            "discrepancy: {} at point {} (residual {:e})\n",
            d.formula, d.point_index, d.residual
        ));
    }
    s.push_str(&format!("{}\n", doc.verdict));
    s
}

fn run(command: Command, args: &RunArgs) -> ExitCode {
    let plan = match plan(command, args) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let outcome = match analysis::run(&plan) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    if let Some(w) = &outcome.nonreal_warning {
        eprintln!("warning: {w}");
    }
    let doc = &outcome.report;
    let to_stdout = args.json.as_deref().is_some_and(|p| p.as_os_str() == "-");
    if to_stdout {
        print!("{}", doc.to_json());
    } else {
        if let Some(path) = &args.json {
            if let Err(e) = std::fs::write(path, doc.to_json()) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        if matches!(command, Command::Classify) {
            println!("{}", doc.verdict);
        } else {
            print!("{}", summary(doc));
        }
    }
    let _ = std::io::stdout().flush();
    match outcome.status {
        Status::Ok => ExitCode::SUCCESS,
        Status::Inadmissible => {
            let reasons: Vec<_> = doc.points.iter().filter_map(|p| p.admissible.reason.clone()).collect();
            eprintln!("error: no admissible point ({})", reasons.join("; "));
            ExitCode::from(2)
        }
        Status::OrderExhausted => {
            eprintln!("error: the expansion order {} is too low for the requested quantities", doc.order);
            ExitCode::from(4)
        }
        Status::ChecksFailed => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            // Exit code 2 means "inadmissible" here, so usage errors use 3.
            return ExitCode::from(3);
        }
    };
    match &cli.command {
        Cmd::Analyze(a) => run(Command::Analyze, a),
        Cmd::Classify(a) => run(Command::Classify, a),
        Cmd::Verify { suite, run: a } => run(Command::Verify(suite.suites()), a),
        Cmd::Catalog { action } => match catalog_text(action) {
            Ok(t) => {
                print!("{t}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
