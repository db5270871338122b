fn main() {
    std::process::exit(rangewalk_cli::main_with_args(std::env::args_os()));
}
