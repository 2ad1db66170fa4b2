fn main() {
    std::process::exit(chford::cli::main_with_args(std::env::args_os()));
}
