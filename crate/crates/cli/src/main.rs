fn main() {
    std::process::exit(eta_gap_cli::run(std::env::args_os()));
}
