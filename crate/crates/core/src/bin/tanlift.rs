fn main() {
    std::process::exit(tanlift::cli::main_with_args(std::env::args_os()));
}
