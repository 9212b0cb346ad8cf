fn main() {
    std::process::exit(qotgraph::cli::run(std::env::args()));
}
