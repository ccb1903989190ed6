fn main() {
    std::process::exit(tlroa::cli::run_from(std::env::args_os()));
}
