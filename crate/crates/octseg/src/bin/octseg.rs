fn main() {
    std::process::exit(octseg::cli::run(std::env::args_os()));
}
