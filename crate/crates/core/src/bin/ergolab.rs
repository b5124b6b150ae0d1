use clap::Parser;

fn main() {
    std::process::exit(ergolab::cli::main_with(ergolab::cli::Cli::parse()));
}
