fn main() {
    std::process::exit(hubbard_qsim::cli::run(std::env::args_os()));
}
