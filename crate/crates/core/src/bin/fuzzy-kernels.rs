fn main() {
    std::process::exit(fuzzy_kernels::cli::main_with_args(std::env::args_os()));
}
