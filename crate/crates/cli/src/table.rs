//! Plain-text summary table, one block per task.

use std::fmt::Write;

use mppi_core::bench::CellSummary;

const HEADERS: [&str; 4] = ["Method", "Success (%)", "Steps to Goal", "Time/iter (ms)"];

fn cells(s: &CellSummary) -> [String; 4] {
    [
        s.method.clone(),
        format!("{:.0}", s.success_pct),
        format!("{:.1} ± {:.1}", s.steps_mean, s.steps_std),
        format!("{:.3} ± {:.3}", s.time_mean_ms, s.time_std_ms),
    ]
}

/// Renders the summaries with columns aligned across all tasks. Task blocks
/// keep first-appearance order.
pub fn render(summaries: &[CellSummary]) -> String {
    let rows: Vec<[String; 4]> = summaries.iter().map(cells).collect();
    let mut widths = HEADERS.map(|h| h.chars().count());
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }

    let line = |out: &mut String, row: &[String; 4]| {
        // Method left-aligned, numbers right-aligned.
        let _ = write!(out, "{:<w$}", row[0], w = widths[0]);
        for (c, &w) in row[1..].iter().zip(&widths[1..]) {
            let pad = w - c.chars().count();
            let _ = write!(out, "  {}{c}", " ".repeat(pad));
        }
        out.push('\n');
    };
    let header = HEADERS.map(str::to_owned);
    let rule = "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1));

    let mut out = String::new();
    let mut tasks: Vec<&str> = Vec::new();
    for s in summaries {
        if !tasks.contains(&s.task.as_str()) {
            tasks.push(&s.task);
        }
    }
    for (i, task) in tasks.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "Task: {task}");
        line(&mut out, &header);
        let _ = writeln!(out, "{rule}");
        for (s, row) in summaries.iter().zip(&rows) {
            if s.task == *task {
                line(&mut out, row);
            }
        }
    }
    out
}
