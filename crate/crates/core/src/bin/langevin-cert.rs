fn main() {
    std::process::exit(langevin_cert::harness::cli::run(std::env::args_os()));
}
