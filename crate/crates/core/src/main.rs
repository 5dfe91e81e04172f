fn main() {
    std::process::exit(trustfactor::cli::run_cli(std::env::args_os()));
}
