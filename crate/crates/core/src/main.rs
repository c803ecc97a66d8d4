fn main() -> std::process::ExitCode {
    pcsft::cli::main()
}
