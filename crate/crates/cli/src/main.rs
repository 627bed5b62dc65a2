fn main() {
    std::process::exit(haar_law_cli::run(std::env::args_os()));
}
