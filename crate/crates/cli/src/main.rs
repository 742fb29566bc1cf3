fn main() {
    std::process::exit(armcmc_cli::run_from(std::env::args_os()));
}
