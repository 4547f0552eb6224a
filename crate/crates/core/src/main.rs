use clap::Parser;

fn main() {
    let cli = leafstack::cli::Cli::parse();
    if let Err(e) = leafstack::cli::run(cli) {
        let msg = format!("{e:#}").replace(['\n', '\r'], " ");
        eprintln!("error: {msg}");
        std::process::exit(1);
    }
}
