//! Standalone SVG bar charts: mean steps to goal per method with a one
//! standard deviation whisker and the success rate printed above each bar.

use std::fmt::Write;

use mppi_core::bench::CellSummary;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Smallest 1, 2 or 5 times a power of ten that is at least `x`.
fn nice_ceiling(x: f64) -> f64 {
    if !x.is_finite() || x <= 0.0 {
        return 1.0;
    }
    let base = 10f64.powf(x.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * base)
        .find(|&v| v >= x * (1.0 - 1e-12))
        .unwrap_or(10.0 * base)
}

/// File-name-safe version of a task label.
pub fn file_stem(task: &str) -> String {
    task.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// One chart for the cells of `task`, in the order given.
pub fn render_task(task: &str, cells: &[&CellSummary]) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let finite = |v: f64| if v.is_finite() { v } else { 0.0 };
    let peak = cells
        .iter()
        .map(|c| finite(c.steps_mean) + finite(c.steps_std))
        .fold(0.0, f64::max);
    let y_max = nice_ceiling(peak);
    let y = |v: f64| TOP + plot_h * (1.0 - finite(v).clamp(0.0, y_max) / y_max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(
        s,
        r#"  <rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"  <text x="{:.1}" y="24" font-size="16" text-anchor="middle">{}: steps to goal (mean ± std, success % above)</text>"#,
        WIDTH / 2.0,
        escape(task)
    );

    // Axes and gridlines.
    for i in 0..=5 {
        let v = y_max * f64::from(i) / 5.0;
        let py = y(v);
        let _ = writeln!(
            s,
            r##"  <line x1="{LEFT:.1}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#dddddd"/>"##,
            WIDTH - RIGHT
        );
        let _ = writeln!(
            s,
            r#"  <text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            py + 4.0,
            format_tick(v)
        );
    }
    let _ = writeln!(
        s,
        r##"  <line x1="{LEFT:.1}" y1="{TOP:.1}" x2="{LEFT:.1}" y2="{:.1}" stroke="#333333"/>"##,
        TOP + plot_h
    );
    let _ = writeln!(
        s,
        r##"  <line x1="{LEFT:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#333333"/>"##,
        TOP + plot_h,
        WIDTH - RIGHT,
        TOP + plot_h
    );
    let _ = writeln!(
        s,
        r#"  <text x="18" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 18 {:.1})">steps</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let slot = plot_w / cells.len().max(1) as f64;
    let bar_w = slot * 0.6;
    for (i, c) in cells.iter().enumerate() {
        let cx = LEFT + slot * (i as f64 + 0.5);
        let top = y(c.steps_mean);
        let base = TOP + plot_h;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"  <rect x="{:.1}" y="{top:.1}" width="{bar_w:.1}" height="{:.1}" fill="{color}"/>"#,
            cx - bar_w / 2.0,
            base - top
        );
        if c.steps_std.is_finite() && c.steps_std > 0.0 {
            let (lo, hi) = (y(c.steps_mean - c.steps_std), y(c.steps_mean + c.steps_std));
            let _ = writeln!(
                s,
                r##"  <path d="M{:.1} {hi:.1}H{:.1}M{cx:.1} {hi:.1}V{lo:.1}M{:.1} {lo:.1}H{:.1}" stroke="#222222" fill="none"/>"##,
                cx - 6.0,
                cx + 6.0,
                cx - 6.0,
                cx + 6.0
            );
        }
        let label_y = y(c.steps_mean + finite(c.steps_std)).min(top) - 6.0;
        let _ = writeln!(
            s,
            r#"  <text x="{cx:.1}" y="{label_y:.1}" font-size="11" text-anchor="middle">{:.0}%</text>"#,
            c.success_pct
        );
        let _ = writeln!(
            s,
            r#"  <text x="{cx:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
            base + 18.0,
            escape(&c.method)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn format_tick(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        let t = format!("{v:.2}");
        t.trim_end_matches('0').trim_end_matches('.').to_owned()
    }
}

/// One `(task, svg)` pair per task, in first-appearance order.
pub fn render_all(summaries: &[CellSummary]) -> Vec<(String, String)> {
    let mut tasks: Vec<&str> = Vec::new();
    for s in summaries {
        if !tasks.contains(&s.task.as_str()) {
            tasks.push(&s.task);
        }
    }
    tasks
        .into_iter()
        .map(|task| {
            let cells: Vec<&CellSummary> = summaries.iter().filter(|s| s.task == task).collect();
            (task.to_owned(), render_task(task, &cells))
        })
        .collect()
}
