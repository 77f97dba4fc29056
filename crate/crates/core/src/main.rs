fn main() {
    std::process::exit(steinlab::cli::main_entry());
}
