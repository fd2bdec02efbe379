fn main() {
    std::process::exit(fedpid::cli::main_with_args(std::env::args_os()));
}
