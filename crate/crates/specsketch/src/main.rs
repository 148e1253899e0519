fn main() {
    std::process::exit(specsketch::cli::run(std::env::args_os()));
}
