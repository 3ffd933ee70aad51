//! JSON and CSV emission of Monte Carlo summaries.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Result, ZoError};

use super::config::ReportFormat;
use super::montecarlo::McSummary;

pub const TRIALS_CSV_HEADER: [&str; 11] = [
    "trial_index",
    "completed",
    "final_quantity",
    "final_gap",
    "average_grad_norm_sq",
    "holds_rho1",
    "holds_rho2",
    "holds_alpha",
    "holds_alpha_cvx",
    "holds_weighted",
    "pathwise_violations",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn summary_json(summary: &McSummary) -> Result<String> {
    let mut s =
        serde_json::to_string_pretty(summary).map_err(|e| ZoError::Serialization(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn summary_from_json(text: &str) -> Result<McSummary> {
    serde_json::from_str(text).map_err(|e| ZoError::Serialization(e.to_string()))
}

/// One row per trial.
pub fn write_trials_csv<W: Write>(summary: &McSummary, out: W) -> Result<()> {
    let ser = |e: csv::Error| ZoError::Serialization(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIALS_CSV_HEADER).map_err(ser)?;
    for t in &summary.per_trial {
        let ev = t.events.as_ref();
        w.write_record([
            t.trial_index.to_string(),
            t.completed.to_string(),
            opt(t.final_quantity),
            opt(t.final_gap),
            t.average_grad_norm_sq.to_string(),
            opt(ev.map(|e| e.holds_rho1)),
            opt(ev.map(|e| e.holds_rho2)),
            opt(ev.and_then(|e| e.holds_alpha)),
            opt(ev.map(|e| e.holds_alpha_cvx)),
            opt(ev.and_then(|e| e.holds_weighted)),
            t.pathwise.total_violations().to_string(),
        ])
        .map_err(ser)?;
    }
    w.flush().map_err(|e| ZoError::Serialization(e.to_string()))
}

pub fn render(summary: &McSummary, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => Ok(summary_json(summary)?.into_bytes()),
        ReportFormat::Csv => {
            let mut buf = Vec::new();
            write_trials_csv(summary, &mut buf)?;
            Ok(buf)
        }
    }
}

/// Writes `summary` to `path`, creating parent directories.
pub fn emit_report(summary: &McSummary, path: &Path, format: ReportFormat) -> Result<()> {
    let bytes = render(summary, format)?;
    write_file(path, &bytes)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| ZoError::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| ZoError::io(path, e))
}

/// Emits every configured format as `dir/stem.ext`; returns the paths.
pub fn emit_all(
    summary: &McSummary,
    dir: &Path,
    stem: &str,
    formats: &[ReportFormat],
) -> Result<Vec<PathBuf>> {
    formats
        .iter()
        .map(|f| {
            let path = dir.join(format!("{stem}.{}", f.extension()));
            emit_report(summary, &path, *f).map(|_| path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{ExperimentConfig, ProblemConfig};
    use crate::harness::montecarlo::run_monte_carlo;

    fn small() -> McSummary {
        let mut p = ProblemConfig::named("isotropic_quadratic");
        p.d = Some(3);
        let mut cfg = ExperimentConfig::new(p, 0.05, 0.1, 4);
        cfg.overrides.horizon = Some(40);
        run_monte_carlo(&cfg).unwrap()
    }

    #[test]
    fn json_round_trip() {
        let s = small();
        let text = summary_json(&s).unwrap();
        assert_eq!(summary_from_json(&text).unwrap(), s);
        assert_eq!(summary_json(&s).unwrap(), text);
    }

    #[test]
    fn empty_summary_csv_has_header_only() {
        let mut s = small();
        s.per_trial.clear();
        let bytes = render(&s, ReportFormat::Csv).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("trial_index,"));
    }

    #[test]
    fn files_are_byte_identical_on_reemission() {
        let s = small();
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_all(&s, dir.path(), "r", &[ReportFormat::Json, ReportFormat::Csv]).unwrap();
        let first: Vec<Vec<u8>> = paths.iter().map(|p| std::fs::read(p).unwrap()).collect();
        emit_all(&s, dir.path(), "r", &[ReportFormat::Json, ReportFormat::Csv]).unwrap();
        let second: Vec<Vec<u8>> = paths.iter().map(|p| std::fs::read(p).unwrap()).collect();
        assert_eq!(first, second);
        assert_eq!(
            String::from_utf8(second[1].clone()).unwrap().lines().count(),
            5
        );
    }

    #[test]
    fn unwritable_path_reports_it() {
        let s = small();
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, b"x").unwrap();
        let err = emit_report(&s, &blocker.join("out.json"), ReportFormat::Json).unwrap_err();
        assert!(err.to_string().contains("file"));
    }
}
