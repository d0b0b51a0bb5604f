fn main() {
    std::process::exit(consurv::cli::main_entry());
}
