fn main() {
    std::process::exit(incrack::cli::main_with_args(std::env::args_os()));
}
