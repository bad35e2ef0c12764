use clap::Parser;

use cohist_cli::{render, run, Cli, Format};

fn main() {
    let raw: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let report = run(&cli, &raw);
    let text = render(&report, cli.format);
    if cli.format == Format::Human && report.exit_status == cohist_cli::report::EXIT_INPUT_ERROR {
        eprint!("{text}");
    } else {
        print!("{text}");
    }
    std::process::exit(report.exit_status);
}
