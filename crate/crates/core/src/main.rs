use clap::Parser;
use kpcohft::cli::{configure_threads, execute, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("kpcohft: {e}");
        std::process::exit(e.exit_code());
    }
    std::process::exit(execute(&cli));
}
