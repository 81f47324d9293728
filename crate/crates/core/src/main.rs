fn main() {
    std::process::exit(madvec::cli::run(std::env::args_os()));
}
