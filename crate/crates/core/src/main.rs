fn main() {
    std::process::exit(framemap::cli::run(std::env::args_os()));
}
