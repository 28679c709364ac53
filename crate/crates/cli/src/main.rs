fn main() {
    std::process::exit(trajfeas_cli::main_with_args(std::env::args_os()));
}
