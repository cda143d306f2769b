fn main() {
    std::process::exit(hawkes_cumulants::cli::run_from(std::env::args_os()));
}
