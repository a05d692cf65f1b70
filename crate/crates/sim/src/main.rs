fn main() {
    std::process::exit(nsch_sim::cli::main(std::env::args_os()));
}
