fn main() {
    std::process::exit(vokit_cli::run(std::env::args_os()));
}
