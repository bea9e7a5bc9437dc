use std::path::Path;
use std::process::Command;
use std::time::Instant;

use pathplan_core::metrics::EvaluationReport;
use pathplan_core::model::LearningPath;

const SEEDS: u64 = 10;
const LEARNERS: usize = 20;

fn pathplan(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_pathplan"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "`pathplan {}` exited with {}: {}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

/// Every written path parses and passes structural validation.
fn validate_paths(out: &Path) -> Result<usize, String> {
    let mut checked = 0;
    for label in std::fs::read_dir(out.join("paths")).map_err(|e| e.to_string())? {
        let dir = label.map_err(|e| e.to_string())?.path();
        for file in std::fs::read_dir(&dir).map_err(|e| e.to_string())? {
            let file = file.map_err(|e| e.to_string())?.path();
            if file.extension().is_some_and(|e| e == "json") {
                let text = std::fs::read_to_string(&file).map_err(|e| e.to_string())?;
                let path: LearningPath = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", file.display()))?;
                let violations = path.validate(10);
                crate::ensure!(violations.is_empty(), "{}: {violations:?}", file.display());
                checked += 1;
            }
        }
    }
    Ok(checked)
}

fn read_report(out: &Path) -> Result<EvaluationReport, String> {
    let text = std::fs::read_to_string(out.join("report.json")).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

/// The command-line pipeline end to end, plus the ablation directions over
/// several seeds (reported, not enforced).
pub fn end_to_end() -> Result<(String, Vec<String>), String> {
    let mut warnings = Vec::new();
    let mut slowest = 0.0f64;
    let mut ksc_ok = 0;
    let mut clmr_ok = 0;
    for seed in 1..=SEEDS {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let ws = tmp.path().join("ws");
        let out = tmp.path().join("out");
        let (ws, out) = (ws.to_str().unwrap(), out.to_str().unwrap());
        let seed_arg = seed.to_string();
        let learners = LEARNERS.to_string();

        let started = Instant::now();
        pathplan(&["synth", "--learners", &learners, "--resources", "30", "--kps", "15", "--seed", &seed_arg, "-o", ws])?;
        pathplan(&["pipeline", "--workspace", ws, "--out", out])?;
        pathplan(&["plan", "--workspace", ws, "--out", out, "--method", "malpp", "--backend", "mock-rule"])?;
        pathplan(&["plan", "--workspace", ws, "--out", out, "--method", "rbm", "--seed", &seed_arg])?;
        pathplan(&["evaluate", "--workspace", ws, "--out", out])?;
        let elapsed = started.elapsed().as_secs_f64();
        slowest = slowest.max(elapsed);
        crate::ensure!(elapsed < 60.0, "seed {seed}: pipeline took {elapsed:.2} s");

        let alerts = std::fs::read_to_string(Path::new(out).join("alerts.jsonl")).map_err(|e| e.to_string())?;
        let alerted = alerts.lines().filter(|l| !l.trim().is_empty()).count();
        crate::ensure!(alerted > 0, "seed {seed}: no learner was flagged");
        let report = read_report(Path::new(out))?;
        for label in ["malpp", "rbm"] {
            let row = report.row(label).ok_or_else(|| format!("seed {seed}: no {label} row"))?;
            crate::ensure!(row.n_paths == alerted, "seed {seed}: {label} has {} paths for {alerted} alerts", row.n_paths);
        }

        for ablation in ["no_clt", "no_zpd"] {
            pathplan(&["plan", "--workspace", ws, "--out", out, "--method", "malpp", "--ablate", ablation])?;
        }
        pathplan(&["evaluate", "--workspace", ws, "--out", out, "--format", "json"])?;
        validate_paths(Path::new(out)).map_err(|e| format!("seed {seed}: {e}"))?;
        let report = read_report(Path::new(out))?;
        let row = |label: &str| report.row(label).ok_or_else(|| format!("seed {seed}: no {label} row"));
        let (full, no_clt, no_zpd) = (row("malpp")?, row("malpp+no_clt")?, row("malpp+no_zpd")?);
        if full.ksc_percent >= no_zpd.ksc_percent {
            ksc_ok += 1;
        } else {
            warnings.push(format!(
                "seed {seed}: KSC full {:.2} < no_zpd {:.2}",
                full.ksc_percent, no_zpd.ksc_percent
            ));
        }
        match (full.clmr_percent, no_clt.clmr_percent) {
            (Some(f), Some(n)) if f <= n => clmr_ok += 1,
            (f, n) => warnings.push(format!("seed {seed}: CLMR full {f:?} > no_clt {n:?}")),
        }
    }
    Ok((
        format!(
            "{SEEDS} seeds, slowest pipeline {slowest:.2} s < 60 s, no validation errors; KSC(full) >= KSC(no_zpd) on {ksc_ok}/{SEEDS}, CLMR(full) <= CLMR(no_clt) on {clmr_ok}/{SEEDS}"
        ),
        warnings,
    ))
}
