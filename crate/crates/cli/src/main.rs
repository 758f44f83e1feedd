use clap::Parser;
use cube_rmatrix_cli::{run, CliError, RunConfig};

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("CUBE_RMATRIX_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::config(format!("CUBE_RMATRIX_THREADS={v} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(CliError::internal)
}

fn main() {
    let config = RunConfig::parse();
    if let Err(e) = init_threads().and_then(|_| run(config)) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
