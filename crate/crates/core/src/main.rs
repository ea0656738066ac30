fn main() {
    std::process::exit(weightlab::cli::run(std::env::args_os()));
}
