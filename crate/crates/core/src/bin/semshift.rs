fn main() {
    std::process::exit(semshift::cli::run(std::env::args_os()));
}
