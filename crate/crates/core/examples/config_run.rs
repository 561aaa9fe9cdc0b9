//! Running an experiment from a TOML config, as the binary does.

use std::sync::atomic::AtomicBool;

use uptail::cli::{parse_config, run, ConfigSource, Sink};

const CONFIG: &str = r#"
command = "rmt"
op = "identity"
m = 3
n = 2
trials = 5000
seed = 17
"#;

fn main() -> uptail::Result<()> {
    let config = parse_config(ConfigSource::Toml(CONFIG))?;
    let sink = Sink::new(Box::new(std::io::stdout()), &config);
    let outcome = run(&config, &sink, &AtomicBool::new(false))?;
    eprintln!("outcome: {outcome:?}");
    Ok(())
}
