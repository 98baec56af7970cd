fn main() {
    std::process::exit(bessel_skeleton_cli::run());
}
