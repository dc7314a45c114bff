fn main() {
    std::process::exit(shexi_core::cli::run(std::env::args().skip(1)));
}
