fn main() {
    std::process::exit(pressopt::io::run_cli(std::env::args().skip(1)));
}
