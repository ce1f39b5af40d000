fn main() {
    std::process::exit(qfd::cli::main_entry());
}
