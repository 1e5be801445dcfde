fn main() {
    std::process::exit(nonneg_basis::cli::run(std::env::args_os()));
}
