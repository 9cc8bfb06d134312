fn main() {
    std::process::exit(efk::cli_main());
}
