use std::process::ExitCode;

fn main() -> ExitCode {
    ris_cellfree::cli::main_with_args(std::env::args_os())
}
