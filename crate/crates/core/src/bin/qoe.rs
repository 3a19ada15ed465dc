fn main() {
    std::process::exit(hasqoe::cli::main_with_args(std::env::args_os()));
}
