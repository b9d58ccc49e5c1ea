fn main() {
    std::process::exit(rugscan::cli::main_with_args(std::env::args_os()));
}
