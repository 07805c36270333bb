fn main() {
    std::process::exit(prevfuse::cli::run(std::env::args_os()));
}
