fn main() {
    std::process::exit(chprice::io::cli::run(std::env::args_os()));
}
