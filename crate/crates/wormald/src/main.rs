fn main() {
    std::process::exit(wormald::cli::run_cli(std::env::args_os()));
}
