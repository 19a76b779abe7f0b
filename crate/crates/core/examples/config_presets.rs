//! Named presets, config text round trip and a full sweep written to disk.
//!
//! cargo run --example config_presets -- [preset] [out_dir]

use corrwitness::config::{ExperimentConfig, PRESETS};
use corrwitness::runner::run_sweep;

fn main() -> corrwitness::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "fig2-sin".into());
    let out = args.next();

    for (preset, about) in PRESETS {
        println!("{preset:<14} {about}");
    }
    let mut cfg = ExperimentConfig::preset(&name)?;
    if let Some(out) = out {
        cfg.set("out", &out)?;
    }
    let text = cfg.serialize();
    assert_eq!(ExperimentConfig::parse(&text)?, cfg);
    println!("\n{text}");

    let run = run_sweep(&cfg)?;
    println!(
        "argmax a = {}, increase detected: {}",
        run.report.argmax_a, run.report.increase_detected
    );
    for f in run.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
