use clap::Parser;

fn main() {
    let cli = cape::cli::Cli::parse();
    if let Err(err) = cape::cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
