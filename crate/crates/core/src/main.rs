fn main() {
    std::process::exit(gbm_integrals::cli::run(std::env::args()));
}
