fn main() {
    std::process::exit(kerr_born::cli::run(std::env::args_os()));
}
