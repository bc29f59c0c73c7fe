fn main() -> std::process::ExitCode {
    dexchange::cli::main()
}
