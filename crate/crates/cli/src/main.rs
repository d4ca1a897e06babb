fn main() {
    std::process::exit(bff_cli::main_with(std::env::args_os()));
}
