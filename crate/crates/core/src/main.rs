fn main() {
    std::process::exit(capillary_core::harness::cli_main(std::env::args()));
}
