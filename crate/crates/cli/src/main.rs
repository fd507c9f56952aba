use clap::Parser;

fn main() {
    let cli = curved_kepler_cli::Cli::parse();
    std::process::exit(curved_kepler_cli::run(cli));
}
