use clap::Parser;

fn main() {
    let cli = mtssl::cli::Cli::parse();
    if let Err(e) = mtssl::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.code);
    }
}
