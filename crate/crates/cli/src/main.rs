use clap::Parser;

use spikelab_cli::cli::Cli;
use spikelab_cli::{run, EXIT_CRITERION_FAILED};

fn main() {
    let cli = Cli::parse();
    let code = match cli.command.resolve().and_then(|(cfg, workers)| run(&cfg, workers).map(|o| (cfg, o))) {
        Ok((cfg, outcome)) => {
            for line in &outcome.report {
                println!("{line}");
            }
            println!(
                "{} files written to {} (config {})",
                outcome.manifest.files.len(),
                cfg.output_dir.display(),
                &outcome.manifest.config_hash[..12]
            );
            if outcome.passed {
                0
            } else {
                EXIT_CRITERION_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}
