fn main() {
    std::process::exit(anisomag::cli::main_with_args(std::env::args_os()));
}
