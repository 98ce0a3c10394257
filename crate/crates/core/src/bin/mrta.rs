fn main() {
    std::process::exit(mrta::cli::main_from(std::env::args_os()));
}
