fn main() {
    std::process::exit(pairindex::cli::main_with_args(std::env::args_os()));
}
