fn main() {
    std::process::exit(nodethin::cli::run_from(std::env::args_os()));
}
