fn main() {
    std::process::exit(stab::cli::main_with_args(std::env::args_os()));
}
