use clap::Parser;

fn main() {
    let cli = ccsm::cli::Cli::parse();
    std::process::exit(ccsm::cli::run(cli));
}
