fn main() {
    std::process::exit(noiseout_cli::run());
}
