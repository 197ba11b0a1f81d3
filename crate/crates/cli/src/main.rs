use clap::Parser;

fn main() {
    let cli = nhse_cli::Cli::parse();
    let code = nhse_cli::main_with(cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
