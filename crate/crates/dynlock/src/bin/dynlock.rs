fn main() {
    std::process::exit(dynlock::cli::run(std::env::args_os()));
}
