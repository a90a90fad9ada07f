fn main() {
    std::process::exit(flipscore::cli::run(std::env::args_os()));
}
