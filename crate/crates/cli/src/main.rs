use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use masklab_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let result = run(&cli, &mut out);
    let flushed = out.flush();
    match result.and(flushed.map_err(Into::into)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("masklab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
