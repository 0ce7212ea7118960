fn main() {
    std::process::exit(gbt_core::cli::run(std::env::args_os()));
}
