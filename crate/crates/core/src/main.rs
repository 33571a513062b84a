fn main() {
    std::process::exit(cellctx::cli::run(std::env::args_os()));
}
