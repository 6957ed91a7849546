fn main() {
    std::process::exit(droplet::cli::run(std::env::args_os()));
}
