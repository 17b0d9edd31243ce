fn main() {
    std::process::exit(dpc_cli::main_with_args(std::env::args_os()));
}
