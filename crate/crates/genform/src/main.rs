use clap::Parser;
use genform::commands::{main_with, Cli};

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = std::env::var("GENFORM_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if threads > 0 {
            // only fails if a pool already exists, which cannot happen this early
            let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        }
    }
    std::process::exit(main_with(cli));
}
