//! Plain-text rendering of corpus statistics and balancing reports.

use std::fmt::Write;

use egospatial_core::dataset::{BalanceReport, CorpusStats};
use egospatial_core::tasks::Direction;
use egospatial_core::{SourceBucket, TaskKind};

fn pct(n: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * n as f64 / total as f64
    }
}

pub fn stats_table(s: &CorpusStats) -> String {
    let mut out = String::new();
    let t = s.total;
    writeln!(out, "{:<8} {:<8} {:>8} {:>7}", "task", "dir", "count", "share").unwrap();
    for task in TaskKind::ALL {
        let n = s.task(task);
        writeln!(
            out,
            "{:<8} {:<8} {:>8} {:>6.1}%",
            task.as_str(),
            task.direction().as_str(),
            n,
            pct(n, t)
        )
        .unwrap();
    }
    writeln!(out, "{:<17} {:>8}", "total", t).unwrap();
    out.push('\n');
    for d in Direction::ALL {
        let members: Vec<&str> = TaskKind::ALL
            .iter()
            .filter(|k| k.direction() == d)
            .map(|k| k.as_str())
            .collect();
        writeln!(
            out,
            "{:<8} {:>8}  ({})",
            d.as_str(),
            s.direction(d),
            members.join("+")
        )
        .unwrap();
    }
    out.push('\n');
    for b in SourceBucket::ALL {
        writeln!(out, "{:<17} {:>8}", b.as_str(), s.bucket(b)).unwrap();
    }
    writeln!(out, "\ntrajectory groups: {}", s.by_group.len()).unwrap();
    out
}

pub fn balance_table(r: &BalanceReport) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<6} {:<17} {:>8} {:>7} {:>11}",
        "task", "bucket", "selected", "groups", "max/min"
    )
    .unwrap();
    for c in &r.cells {
        writeln!(
            out,
            "{:<6} {:<17} {:>8} {:>7} {:>11.2}",
            c.task.as_str(),
            c.bucket.as_str(),
            c.selected,
            c.groups,
            c.group_ratio
        )
        .unwrap();
    }
    writeln!(out, "worst group ratio: {:.2}", r.worst_group_ratio()).unwrap();
    if r.skipped_invalid > 0 {
        writeln!(out, "skipped invalid records: {}", r.skipped_invalid).unwrap();
    }
    out
}
