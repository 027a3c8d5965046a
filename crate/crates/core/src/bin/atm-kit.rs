fn main() {
    std::process::exit(atm_kit::cli::main_with_args(std::env::args_os()));
}
