use clap::Parser;

fn main() {
    let cli = ncfffd_cli::Cli::parse();
    std::process::exit(ncfffd_cli::main_with(cli));
}
