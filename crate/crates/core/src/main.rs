fn main() {
    std::process::exit(powmod::cli::run(std::env::args_os()));
}
