use std::process::ExitCode;

fn main() -> ExitCode {
    let env_threads = std::env::var(safe_ice::cli::THREADS_ENV).ok();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = safe_ice::cli::main_with(std::env::args_os(), env_threads, &mut stdout.lock(), &mut stderr.lock());
    ExitCode::from(code as u8)
}
