fn main() { std::process::exit(adaptive_debug::cli::run(std::env::args_os())); }
