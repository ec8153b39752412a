use clap::Parser;
use phipp_cli::app::{run, Cli};

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    run(cli, &mut std::io::stdout().lock())
}
