//! Runs a scenario from inline JSON, writes its artifacts and compares them to themselves.

use vacuum_shake::scenario::{compare_text, execute, write_outputs, CompareTolerances, ScenarioConfig};

fn main() -> vacuum_shake::Result<()> {
    let cfg = ScenarioConfig::from_json(
        r#"{
            "scenario": "RateSweep1D",
            "sweep": {"omega_lo": 1e-3, "omega_hi": 1e-2, "points": 6}
        }"#,
    )?;
    let out = execute(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&out.summary)?);

    let dir = std::env::temp_dir().join("vacuum-shake-example");
    let manifest = write_outputs(&cfg, &out, &dir, 0.0)?;
    println!("wrote {} artifacts to {}", manifest.artifacts.len(), dir.display());

    let rates = out.artifact("rates.csv").expect("sweep writes rates.csv");
    let mut shifted = String::new();
    for (i, line) in rates.lines().enumerate() {
        if i == 3 {
            let mut cols: Vec<String> = line.split(',').map(String::from).collect();
            let v: f64 = cols[1].parse().unwrap();
            cols[1] = format!("{:.16e}", v * 1.01);
            shifted.push_str(&cols.join(","));
        } else {
            shifted.push_str(line);
        }
        shifted.push('\n');
    }
    let report = compare_text(&shifted, rates, true, &CompareTolerances::default())?;
    println!("perturbed copy passes: {}", report.passed);
    for f in &report.failures {
        println!("  {} off by {:.2e}", f.location, f.rel_deviation);
    }
    Ok(())
}
