fn main() {
    std::process::exit(creditfair::cli::run_cli(std::env::args_os()));
}
