fn main() {
    std::process::exit(beckmann_cli::run(std::env::args_os()));
}
