fn main() {
    std::process::exit(kicked_beam::cli::main_with_args(std::env::args_os()));
}
