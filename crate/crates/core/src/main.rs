fn main() {
    std::process::exit(petricov::cli::run(std::env::args_os()));
}
