fn main() {
    std::process::exit(semiinv::cli::main_with_args(std::env::args_os()));
}
