use clap::Parser;
use plunge_lab::{init_threads, run, Cli};

fn main() {
    init_threads();
    std::process::exit(run(Cli::parse()));
}
