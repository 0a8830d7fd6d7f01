fn main() {
    std::process::exit(betaflow::cli::main_with_args(std::env::args_os()));
}
