fn main() {
    std::process::exit(incsafe::cli::main_with(std::env::args_os()));
}
