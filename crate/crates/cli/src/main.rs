fn main() {
    std::process::exit(qcov_cli::run(std::env::args_os()));
}
