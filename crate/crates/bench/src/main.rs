use std::fs::File;
use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use raduls_bench::{
    csv_sink, run_benchmark, speedup_report, BenchError, Cli, Command, MonotonicClock,
};

fn run(cli: Cli) -> Result<i32, BenchError> {
    if let Some(Command::Speedup { csv }) = cli.command {
        let file =
            File::open(&csv).map_err(|e| BenchError::Output(format!("{}: {e}", csv.display())))?;
        let (rows, skipped) = speedup_report(file)?;
        for s in skipped {
            eprintln!("warning: skipping {s}");
        }
        let mut w = csv_sink(io::stdout().lock());
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| BenchError::Output(e.to_string()))?;
        return Ok(0);
    }

    let args = cli.run;
    let sink: Box<dyn Write> = if args.csv == "stdout" {
        Box::new(io::stdout().lock())
    } else {
        Box::new(
            File::create(&args.csv)
                .map_err(|e| BenchError::Output(format!("{}: {e}", args.csv)))?,
        )
    };
    let mut w = csv_sink(sink);
    let clock = MonotonicClock::default();
    let outcome = run_benchmark(&args, &clock, |row| {
        w.serialize(row)?;
        w.flush().map_err(|e| BenchError::Output(e.to_string()))
    })?;
    for f in &outcome.failures {
        eprintln!("verification failed: {f}");
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
