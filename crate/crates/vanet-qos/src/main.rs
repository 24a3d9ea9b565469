fn main() {
    std::process::exit(vanet_qos::harness::cli::cli_main(std::env::args()));
}
