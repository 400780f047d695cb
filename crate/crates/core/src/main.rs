fn main() {
    std::process::exit(deadcore::cli::run(std::env::args_os()));
}
