use clap::Parser;

fn main() {
    // Usage errors exit with code 2 via clap; runtime errors with 1.
    let cli = trackforge_cli::Cli::parse();
    trackforge_cli::init_threads();
    if let Err(err) = trackforge_cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
