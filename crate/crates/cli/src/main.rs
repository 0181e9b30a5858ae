fn main() {
    std::process::exit(burgerslab_cli::main_with_args(std::env::args_os()));
}
