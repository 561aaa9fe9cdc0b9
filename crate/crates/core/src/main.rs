use std::path::Path;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use uptail::cli::{self, exit, Sink};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    // `uptail --config run.toml [--out ...]`
    let argv = if argv.get(1).map(String::as_str) == Some("--config") {
        let Some(path) = argv.get(2) else {
            eprintln!("error: --config needs a file");
            return ExitCode::from(exit::PARSE as u8);
        };
        let doc = std::fs::read_to_string(Path::new(path)).map_err(uptail::Error::from);
        match doc.and_then(|d| cli::toml_to_args(&d)) {
            Ok(mut a) => {
                a.extend(argv[3..].iter().cloned());
                a
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(exit::PARSE as u8);
            }
        }
    } else {
        argv
    };
    let config = match cli::parse_args(&argv) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let sink = match Sink::for_config(&config) {
        Ok(s) => Arc::new(s),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit::OTHER as u8);
        }
    };
    let stop = Arc::new(AtomicBool::new(false));
    {
        let (sink, stop) = (Arc::clone(&sink), Arc::clone(&stop));
        let installed = ctrlc::set_handler(move || {
            stop.store(true, Ordering::SeqCst);
            // trial streams close themselves at the next chunk
            let t = Instant::now();
            while !sink.is_closed() && t.elapsed() < Duration::from_secs(2) {
                std::thread::sleep(Duration::from_millis(20));
            }
            let _ = sink.truncated(None);
            std::process::exit(exit::INTERRUPTED);
        });
        if let Err(e) = installed {
            eprintln!("warning: no interrupt handler: {e}");
        }
    }
    let result = cli::run(&config, &sink, &stop);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    ExitCode::from(cli::exit_code(&result) as u8)
}
