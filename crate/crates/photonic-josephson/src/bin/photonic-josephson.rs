fn main() {
    std::process::exit(photonic_josephson::cli::main_with(std::env::args_os()));
}
