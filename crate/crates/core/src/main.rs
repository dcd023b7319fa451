fn main() {
    std::process::exit(bmedian::cli::run(std::env::args_os()));
}
