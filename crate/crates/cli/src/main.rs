use clap::Parser;
use gefcrit_cli::{execute, Cli, EXIT_ERROR, EXIT_OK};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { EXIT_ERROR } else { EXIT_OK });
        }
    };
    match execute(cli) {
        Ok(outcome) => {
            print!("{}", outcome.summary.render());
            println!("run directory: {}", outcome.run_dir.display());
            std::process::exit(outcome.exit_code());
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(EXIT_ERROR);
        }
    }
}
