use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::store::{IterationSummary, SessionManifest, StressSummary};
use super::{DebugSession, SessionStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub index: u32,
    pub verdict: String,
    pub exchanges: u32,
    pub wall_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cases_run: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub problem_id: String,
    pub mode: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_at: Option<u32>,
    pub attempts: u32,
    pub wall_ms_total: u64,
    pub iterations: Vec<IterationRow>,
    /// Stress runs performed, counting the initial one.
    pub stress_runs: u32,
    pub stress_cases_total: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_failure: Option<String>,
}

fn build(
    problem_id: &str,
    mode: &str,
    status: &SessionStatus,
    attempts: u32,
    wall_ms_total: u64,
    initial: Option<&StressSummary>,
    iterations: &[IterationSummary],
) -> SessionReport {
    let stresses: Vec<&StressSummary> = initial
        .into_iter()
        .chain(iterations.iter().filter_map(|i| i.stress.as_ref()))
        .collect();
    SessionReport {
        problem_id: problem_id.to_string(),
        mode: mode.to_string(),
        status: status.kind().to_string(),
        fixed_at: match status {
            SessionStatus::Fixed { iteration } => Some(*iteration),
            _ => None,
        },
        attempts,
        wall_ms_total,
        iterations: iterations
            .iter()
            .map(|i| IterationRow {
                index: i.index,
                verdict: i.verdict.clone(),
                exchanges: i.exchanges,
                wall_ms: i.wall_ms,
                cases_run: i.stress.as_ref().map(|s| s.cases_run),
            })
            .collect(),
        stress_runs: stresses.len() as u32,
        stress_cases_total: stresses.iter().map(|s| s.cases_run).sum(),
        initial_failure: initial.and_then(|s| {
            let pos = s.failure_position?;
            Some(match &s.failure_origin {
                Some(o) => format!("case {pos} ({o})"),
                None => format!("case {pos}"),
            })
        }),
    }
}

pub fn report(session: &DebugSession) -> SessionReport {
    let iterations: Vec<IterationSummary> = session.iterations.iter().map(IterationSummary::from).collect();
    let initial = session.initial_stress.as_ref().map(StressSummary::from);
    build(
        &session.problem_id,
        session.mode.label(),
        &session.status,
        session.attempts,
        session.wall_ms_total,
        initial.as_ref(),
        &iterations,
    )
}

impl From<&SessionManifest> for SessionReport {
    fn from(m: &SessionManifest) -> Self {
        build(
            &m.problem_id,
            m.mode.label(),
            &m.status,
            m.attempts,
            m.wall_ms_total,
            m.initial_stress.as_ref(),
            &m.iterations,
        )
    }
}

/// Externally measured numbers to compare a session against.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Baselines {
    pub human_attempts: Option<f64>,
    pub human_minutes: Option<f64>,
    pub zero_shot_attempts: Option<f64>,
    pub zero_shot_minutes: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub baseline: String,
    pub metric: String,
    pub baseline_value: f64,
    pub ours: f64,
    /// (baseline - ours) / baseline, as a percentage. None for a zero baseline.
    pub reduction_pct: Option<f64>,
}

pub fn compare_with_baselines(report: &SessionReport, baselines: &Baselines) -> Vec<ComparisonRow> {
    let ours_attempts = report.attempts as f64;
    let ours_minutes = report.wall_ms_total as f64 / 60_000.0;
    [
        ("human", "attempts", baselines.human_attempts, ours_attempts),
        ("human", "minutes", baselines.human_minutes, ours_minutes),
        ("zero-shot", "attempts", baselines.zero_shot_attempts, ours_attempts),
        ("zero-shot", "minutes", baselines.zero_shot_minutes, ours_minutes),
    ]
    .into_iter()
    .filter_map(|(who, metric, base, ours)| {
        let base = base?;
        Some(ComparisonRow {
            baseline: who.to_string(),
            metric: metric.to_string(),
            baseline_value: base,
            ours,
            reduction_pct: (base != 0.0).then(|| 100.0 * (base - ours) / base),
        })
    })
    .collect()
}

fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    let _ = writeln!(out, "{}", line(&header));
    let _ = writeln!(out, "{}", line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
    for r in rows {
        let _ = writeln!(out, "{}", line(r));
    }
}

/// Plain-text rendering with aligned columns.
pub fn render_report_table(report: &SessionReport, comparison: &[ComparisonRow]) -> String {
    let mut out = String::new();
    let status = match report.fixed_at {
        Some(k) => format!("{} ({k})", report.status),
        None => report.status.clone(),
    };
    let _ = writeln!(out, "problem:   {}", report.problem_id);
    let _ = writeln!(out, "mode:      {}", report.mode);
    let _ = writeln!(out, "status:    {status}");
    let _ = writeln!(out, "attempts:  {}", report.attempts);
    let _ = writeln!(out, "wall time: {:.1} s", report.wall_ms_total as f64 / 1000.0);
    let _ = writeln!(
        out,
        "stress:    {} runs, {} cases",
        report.stress_runs, report.stress_cases_total
    );
    if let Some(f) = &report.initial_failure {
        let _ = writeln!(out, "first failure: {f}");
    }
    if !report.iterations.is_empty() {
        out.push('\n');
        let rows: Vec<Vec<String>> = report
            .iterations
            .iter()
            .map(|r| {
                vec![
                    r.index.to_string(),
                    r.verdict.clone(),
                    r.exchanges.to_string(),
                    r.cases_run.map(|c| c.to_string()).unwrap_or_else(|| "-".into()),
                    r.wall_ms.to_string(),
                ]
            })
            .collect();
        table(&mut out, &["iter", "verdict", "exchanges", "cases", "wall_ms"], &rows);
    }
    if !comparison.is_empty() {
        out.push('\n');
        let rows: Vec<Vec<String>> = comparison
            .iter()
            .map(|c| {
                vec![
                    c.baseline.clone(),
                    c.metric.clone(),
                    format!("{:.2}", c.baseline_value),
                    format!("{:.2}", c.ours),
                    c.reduction_pct.map(|p| format!("{p:.1}%")).unwrap_or_else(|| "-".into()),
                ]
            })
            .collect();
        table(&mut out, &["baseline", "metric", "baseline", "ours", "reduction"], &rows);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report(attempts: u32, wall_ms: u64) -> SessionReport {
        SessionReport {
            problem_id: "p".into(),
            mode: "depro".into(),
            status: "fixed".into(),
            fixed_at: Some(attempts),
            attempts,
            wall_ms_total: wall_ms,
            iterations: vec![],
            stress_runs: 1,
            stress_cases_total: 10,
            initial_failure: None,
        }
    }

    #[test]
    fn reduction_matches_hand_computation() {
        let rows = compare_with_baselines(&sample_report(3, 0), &Baselines {
            human_attempts: Some(4.2),
            ..Baselines::default()
        });
        assert_eq!(rows.len(), 1);
        // (4.2 - 3) / 4.2 = 0.285714...
        let pct = rows[0].reduction_pct.unwrap();
        assert!((pct - 28.571428571).abs() < 1e-6, "{pct}");
    }

    #[test]
    fn zero_baseline_has_no_reduction() {
        let rows = compare_with_baselines(&sample_report(1, 0), &Baselines {
            zero_shot_attempts: Some(0.0),
            ..Baselines::default()
        });
        assert_eq!(rows[0].reduction_pct, None);
    }

    #[test]
    fn minutes_use_wall_time() {
        let rows = compare_with_baselines(&sample_report(1, 90_000), &Baselines {
            human_minutes: Some(6.0),
            ..Baselines::default()
        });
        assert_eq!(rows[0].ours, 1.5);
        assert_eq!(rows[0].reduction_pct, Some(75.0));
    }

    #[test]
    fn table_columns_line_up() {
        let mut r = sample_report(2, 1500);
        r.iterations = vec![
            IterationRow { index: 1, verdict: "wrong_answer".into(), exchanges: 1, wall_ms: 12, cases_run: Some(7) },
            IterationRow { index: 2, verdict: "passed".into(), exchanges: 2, wall_ms: 345, cases_run: Some(510) },
        ];
        let text = render_report_table(&r, &[]);
        let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("iter") || l.starts_with('1') || l.starts_with('2')).collect();
        assert_eq!(lines.len(), 3);
        let header_pos = lines[0].find("exchanges").unwrap();
        assert_eq!(&lines[1][header_pos..header_pos + 1], "1");
        assert_eq!(&lines[2][header_pos..header_pos + 1], "2");
    }
}
