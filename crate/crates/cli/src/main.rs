use std::process::ExitCode;

fn main() -> ExitCode {
    let result = pextremal_cli::configure_threads()
        .and_then(|_| pextremal_cli::run(std::env::args_os(), &mut std::io::stdout()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
