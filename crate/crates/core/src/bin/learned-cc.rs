fn main() -> std::process::ExitCode {
    learned_cc::cli::main()
}
