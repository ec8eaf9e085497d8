fn main() {
    std::process::exit(octbench::harness::cli::cli_main(std::env::args_os()));
}
