fn main() {
    std::process::exit(fockline::cli::run(std::env::args_os()));
}
