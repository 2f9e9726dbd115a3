fn main() {
    std::process::exit(quiltlab_cli::run(std::env::args_os()));
}
