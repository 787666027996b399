fn main() {
    std::process::exit(setlab::cli::run(std::env::args_os()));
}
