fn main() {
    std::process::exit(farfield_cli::run(std::env::args_os()));
}
