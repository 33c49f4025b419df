fn main() {
    std::process::exit(mts_cli::run_cli(std::env::args_os()));
}
