use clap::Parser;

fn main() {
    let cli = qutrit_cavity_cli::Cli::parse();
    if let Err(err) = qutrit_cavity_cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
