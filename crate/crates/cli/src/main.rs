fn main() {
    std::process::exit(levydiff_cli::commands::main_with_args(std::env::args_os()));
}
