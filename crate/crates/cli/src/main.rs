fn main() {
    std::process::exit(merton_cli::run(std::env::args_os()));
}
