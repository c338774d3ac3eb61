fn main() {
    std::process::exit(impatience::cli::main_with(std::env::args_os()));
}
