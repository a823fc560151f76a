fn main() {
    std::process::exit(spde_fbm::harness::cli_main(std::env::args_os()));
}
