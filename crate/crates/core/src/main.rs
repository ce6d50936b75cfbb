fn main() {
    std::process::exit(tsreason_core::cli::run(std::env::args_os()));
}
