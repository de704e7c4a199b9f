fn main() {
    std::process::exit(ampforge::cli::run(std::env::args_os()));
}
