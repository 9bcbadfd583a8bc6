fn main() -> std::process::ExitCode {
    synergy_harness::cli::main()
}
