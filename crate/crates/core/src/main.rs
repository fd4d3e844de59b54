fn main() {
    std::process::exit(depro::cli::run(std::env::args_os()));
}
