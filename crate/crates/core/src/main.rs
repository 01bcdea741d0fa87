use clap::Parser;

fn main() {
    let args = cnp::cli::Args::parse();
    std::process::exit(cnp::cli::main_with(&args));
}
