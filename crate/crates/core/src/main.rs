fn main() {
    std::process::exit(parity_shadow::cli::run(std::env::args_os()));
}
