fn main() {
    std::process::exit(cbd::cli::run(std::env::args_os()));
}
