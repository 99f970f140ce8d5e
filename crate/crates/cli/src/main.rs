fn main() {
    std::process::exit(crepe_cli::run(std::env::args_os()));
}
