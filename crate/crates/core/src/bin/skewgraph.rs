use clap::Parser;
use skewgraph::cli::{dispatch, init_threads, Cli, EXIT_VALIDATION};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        std::process::exit(EXIT_VALIDATION);
    }
    let code = dispatch(cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
