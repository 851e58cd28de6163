fn main() {
    std::process::exit(cpiprice::cli::run(std::env::args_os()));
}
