fn main() {
    std::process::exit(emointensity::cli::run(std::env::args_os()));
}
