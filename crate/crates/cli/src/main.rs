use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    // `run` narrows the level from --log-level. Handles stay unlocked so
    // logging from service threads can reach stderr.
    env_logger::Builder::new().filter_level(log::LevelFilter::Trace).format_timestamp(None).init();
    let code = ghostkey_cli::run(std::env::args_os(), &mut io::stdin(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code)
}
