use clap::Parser;
use seatflow::cli::{run, CliArgs};

fn main() {
    let args = CliArgs::parse();
    if let Err(err) = run(args) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
