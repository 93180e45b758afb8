//! Results-table emission: CSV for machines, Markdown in the familiar
//! `Method | M ± SD | Δ | t(df) | p | d` layout for people.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::stats::{StatRow, Stars};

pub const STAT_CSV_HEADER: &str = "method,n,df,mean,sd,delta,t,p,d,stars";

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One line per row; floats use shortest round-trip formatting.
pub fn stat_rows_to_csv(rows: &[StatRow]) -> String {
    let mut out = String::from(STAT_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.n,
            r.df,
            r.mean,
            r.sd,
            r.delta,
            opt(r.t_stat),
            opt(r.p_value),
            opt(r.cohens_d),
            r.stars
        );
    }
    out
}

pub fn stat_rows_from_csv(text: &str) -> Result<Vec<StatRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == STAT_CSV_HEADER => {}
        _ => return Err(Error::Shape(format!("expected header `{STAT_CSV_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Shape(format!("stat csv line {}: {what}", i + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(bad("expected 10 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
        let opt_num = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad("bad integer"));
        rows.push(StatRow {
            method: f[0].to_owned(),
            n: int(f[1])?,
            df: int(f[2])?,
            mean: num(f[3])?,
            sd: num(f[4])?,
            delta: num(f[5])?,
            t_stat: opt_num(f[6])?,
            p_value: opt_num(f[7])?,
            cohens_d: opt_num(f[8])?,
            stars: Stars::parse(f[9]).ok_or_else(|| bad("bad star level"))?,
        });
    }
    Ok(rows)
}

/// Display label of a policy in result tables.
pub fn method_label(method: &str) -> &str {
    match method {
        "none" => "baseline",
        other => other,
    }
}

fn fmt_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".into()
    } else {
        format!("{p:.3}")
    }
}

fn escape_stars(s: Stars) -> String {
    s.as_str().replace('*', "\\*")
}

/// Renders rows as a Markdown table. `metric` names the column family
/// (e.g. `AUC`), `footer` is appended verbatim below the table.
pub fn render_markdown(rows: &[StatRow], metric: &str, footer: Option<&str>) -> String {
    let df = rows.iter().find(|r| !r.is_baseline()).map_or_else(
        || rows.first().map_or(0, |r| r.df),
        |r| r.df,
    );
    let mut out = String::new();
    let _ = writeln!(
        out,
        "| Method | {metric} M ± SD | Δ{metric} | t({df}) | p | d | Sig. |"
    );
    out.push_str("|---|---|---|---|---|---|---|\n");
    for r in rows {
        let label = method_label(&r.method).replace('_', "\\_");
        let ms = format!("{:.3} ± {:.3}", r.mean, r.sd);
        let delta = format!("{:+.3}", r.delta);
        match (r.t_stat, r.p_value, r.cohens_d) {
            (Some(t), Some(p), Some(d)) => {
                let _ = writeln!(
                    out,
                    "| {label} | {ms} | {delta} | {t:.2} | {} | {d:.2} | {} |",
                    fmt_p(p),
                    escape_stars(r.stars)
                );
            }
            _ => {
                let _ = writeln!(out, "| {label} | {ms} | {delta} | --- | --- | --- | |");
            }
        }
    }
    if let Some(f) = footer {
        out.push('\n');
        out.push_str(f);
        if !f.ends_with('\n') {
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{aggregate, MethodRuns};

    fn sample_rows() -> Vec<StatRow> {
        let mk = |m: &str, v: &[f64]| MethodRuns {
            method: m.into(),
            values: v.iter().enumerate().map(|(i, &x)| (i as u64, x)).collect(),
        };
        aggregate(
            &[
                mk("none", &[0.61, 0.64, 0.58, 0.66]),
                mk("semantic_knn", &[0.71, 0.70, 0.69, 0.77]),
                mk("random_er", &[0.55, 0.66, 0.57, 0.63]),
            ],
            "none",
        )
        .unwrap()
    }

    #[test]
    fn csv_roundtrip_gives_identical_markdown() {
        let rows = sample_rows();
        let csv = stat_rows_to_csv(&rows);
        let back = stat_rows_from_csv(&csv).unwrap();
        assert_eq!(back, rows);
        assert_eq!(
            render_markdown(&back, "AUC", Some("_note_")),
            render_markdown(&rows, "AUC", Some("_note_"))
        );
    }

    #[test]
    fn markdown_layout() {
        let md = render_markdown(&sample_rows(), "AUC", None);
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines[0], "| Method | AUC M ± SD | ΔAUC | t(3) | p | d | Sig. |");
        assert!(lines[2].starts_with("| baseline | 0.623 ± 0.035 | +0.000 | --- |"), "{}", lines[2]);
        assert!(lines[3].starts_with("| semantic\\_knn |"), "{}", lines[3]);
        assert!(lines[2].ends_with("| |"));
    }

    #[test]
    fn p_formatting() {
        assert_eq!(fmt_p(0.0004), "<0.001");
        assert_eq!(fmt_p(0.0234), "0.023");
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(stat_rows_from_csv("nope\n").is_err());
        let bad = format!("{STAT_CSV_HEADER}\nx,1,0,0.5,0,0,,,,maybe\n");
        assert!(stat_rows_from_csv(&bad).is_err());
    }
}
