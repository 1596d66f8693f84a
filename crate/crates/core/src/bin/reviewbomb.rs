fn main() {
    std::process::exit(reviewbomb_core::cli::main_from_args(std::env::args_os()));
}
