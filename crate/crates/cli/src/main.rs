fn main() {
    std::process::exit(pda_cli::main_with_args(std::env::args_os()));
}
