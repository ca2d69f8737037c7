fn main() {
    std::process::exit(curveflat::cli::run(std::env::args_os()));
}
