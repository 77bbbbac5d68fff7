fn main() {
    std::process::exit(relmag::cli::main_entry());
}
