fn main() {
    std::process::exit(monobeam::cli::main_with_args(std::env::args_os()));
}
