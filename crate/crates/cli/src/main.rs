fn main() {
    std::process::exit(gino_cli::run(std::env::args_os()));
}
