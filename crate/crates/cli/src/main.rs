use clap::Parser;

fn main() {
    let cli = bvent_cli::Cli::parse();
    let code = bvent_cli::execute(&cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
