fn main() {
    std::process::exit(shpt::harness::cli::cli_main(std::env::args_os()));
}
