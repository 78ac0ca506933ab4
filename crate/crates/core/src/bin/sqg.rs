fn main() {
    std::process::exit(sqg_core::cli::cli_dispatch(std::env::args_os()));
}
