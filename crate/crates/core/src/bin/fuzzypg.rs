use clap::Parser;

fn main() {
    let cli = fuzzypg::cli::Cli::parse();
    match fuzzypg::cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
