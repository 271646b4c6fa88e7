fn main() {
    std::process::exit(lobnet_core::harness::cli(std::env::args()));
}
