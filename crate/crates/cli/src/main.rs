use clap::Parser;
use dqsync_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
        }
        Err(e) => {
            eprintln!("dqsync: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
