fn main() {
    std::process::exit(ybforge::cli::run(std::env::args_os()));
}
