use clap::Parser;

use psmo::cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let out = run(&cli);
    print!("{}", out.stdout);
    if let Some(msg) = out.stderr {
        eprintln!("{msg}");
    }
    std::process::exit(out.code);
}
