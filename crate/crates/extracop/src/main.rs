use clap::Parser;

fn main() {
    let cli = extracop::cli::Cli::parse();
    std::process::exit(extracop::cli::run(cli));
}
