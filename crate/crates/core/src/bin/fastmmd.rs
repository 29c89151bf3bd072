fn main() {
    std::process::exit(fastmmd::cli::main_with_args(std::env::args_os()));
}
