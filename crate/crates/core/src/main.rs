use clap::Parser;

use edgeworth_symmetry::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("edgesym: {e}");
        std::process::exit(e.exit_code());
    }
}
