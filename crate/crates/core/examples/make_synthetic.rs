//! Writes a synthetic corpus with `manifest.json`.
//!
//! Usage: `make_synthetic <dir> [patients] [videos] [frames] [side] [seed]`

use std::path::PathBuf;
use std::process::ExitCode;

use palsy_core::synth::{write_synthetic_corpus, SynthConfig};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(dir) = args.first().map(PathBuf::from) else {
        eprintln!("usage: make_synthetic <dir> [patients] [videos] [frames] [side] [seed]");
        return ExitCode::from(2);
    };
    let mut cfg = SynthConfig::default();
    let slots: [&mut dyn FnMut(u64); 5] = [
        &mut |v| cfg.patients = v as usize,
        &mut |v| cfg.videos_per_patient = v as usize,
        &mut |v| cfg.frames_per_video = v as usize,
        &mut |v| cfg.image_side = v as usize,
        &mut |v| cfg.seed = v,
    ];
    for (slot, raw) in slots.into_iter().zip(args.iter().skip(1)) {
        match raw.parse::<u64>() {
            Ok(v) => slot(v),
            Err(_) => {
                eprintln!("not a non-negative integer: {raw}");
                return ExitCode::from(2);
            }
        }
    }
    match write_synthetic_corpus(&dir, &cfg) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}
