// Writes a full experiment: per-method CSV logs, reconstructions, plots and metadata.
//
// ```bash
// cargo run --release --example harness_run -- /tmp/fast2d
// ```

use std::path::{Path, PathBuf};

use spikeslide::experiment::ExperimentKind;
use spikeslide::harness::{run_experiment, ExperimentSpec};

pub fn run_in(out: &Path) -> Result<(), Box<dyn std::error::Error>> {
    let spec = ExperimentSpec::new(ExperimentKind::Fast2d, 7).with_iterations(40).with_threads(2);
    let art = run_experiment(&spec, out)?;
    println!("SNR {:.2} dB, v⁰ {:.4}, best {:.4}", art.snr_db, art.v0, art.v_min);
    for r in &art.runs {
        println!("  {:<12} v {:.6}  spikes {}", r.method.name(), r.final_value, r.final_spikes());
    }
    for f in &art.files {
        println!("  wrote {}", f.display());
    }
    Ok(())
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join(format!("spikeslide-harness-{}", std::process::id()));
    run_in(&out)?;
    std::fs::remove_dir_all(&out)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    match std::env::args().nth(1) {
        Some(dir) => run_in(&PathBuf::from(dir)),
        None => run_example(),
    }
}
