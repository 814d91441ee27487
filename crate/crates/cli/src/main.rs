fn main() {
    std::process::exit(selflow_cli::main_with_args(std::env::args_os()));
}
