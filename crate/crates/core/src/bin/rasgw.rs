fn main() {
    std::process::exit(rasgw::cli::run(std::env::args_os()));
}
