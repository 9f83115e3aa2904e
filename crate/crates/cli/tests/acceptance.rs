//! CLI acceptance check: configuration round-trip over the full catalog and
//! byte-identical solution tables across repeated runs.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use plbvp_cli::{parse_config, run_solve, RunOptions};
use tempfile::TempDir;

fn check() -> Result<String, String> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut cases = 0;
    let mut rows = 0;
    for k in 1..=6 {
        let name = format!("example{k}");
        let text = fs::read_to_string(dir.join(format!("{name}.cfg"))).map_err(|e| format!("{name}: {e}"))?;
        let cfg = parse_config(&text).map_err(|e| format!("{name}: {e}"))?;
        let canonical = cfg.serialize();
        let again = parse_config(&canonical).map_err(|e| format!("{name}: reparse: {e}"))?;
        if again != cfg {
            return Err(format!("{name}: parse(serialize(cfg)) != cfg"));
        }
        if again.serialize() != canonical {
            return Err(format!("{name}: serialize is not a fixed point"));
        }

        let mut tables = Vec::new();
        for _ in 0..2 {
            let out = TempDir::new().map_err(|e| e.to_string())?;
            let opts = RunOptions {
                output_dir: out.path().to_path_buf(),
            };
            let outcome = run_solve(&cfg, &opts).map_err(|e| format!("{name}: {e}"))?;
            if outcome.code != 0 {
                return Err(format!("{name}: exit {}", outcome.code));
            }
            tables.push(fs::read(out.path().join("solution.csv")).map_err(|e| e.to_string())?);
        }
        if tables[0] != tables[1] {
            return Err(format!("{name}: solution tables differ between runs"));
        }
        rows += tables[0].iter().filter(|&&b| b == b'\n').count();
        cases += 1;
    }
    Ok(format!(
        "{cases} catalog configs round-trip exactly; two runs each gave byte-identical CSV ({rows} lines)"
    ))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
    let elapsed = start.elapsed().as_secs_f64();
    match result {
        Ok(detail) => {
            println!("criterion 8 [CLI determinism and round-trip]: PASS ({elapsed:.2}s) {detail}");
            ExitCode::SUCCESS
        }
        Err(detail) => {
            println!("criterion 8 [CLI determinism and round-trip]: FAIL ({elapsed:.2}s) {detail}");
            ExitCode::FAILURE
        }
    }
}
