fn main() {
    std::process::exit(evacsim::cli::run());
}
