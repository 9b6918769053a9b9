//! Evaluation reports: a flat record per run plus a terminal table.

use serde::{Deserialize, Serialize};

use crate::fusion::Strategy;
use crate::metrics::{CountScore, PointScore, SegScore};

/// One evaluation. Configuration fields are echoed so a table of reports can be
/// rebuilt from the files alone; fields that do not apply are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub dataset: String,
    pub strategy: Option<Strategy>,
    pub tau: Option<f64>,
    pub k: Option<usize>,
    pub l: Option<usize>,
    pub j: f64,
    pub f: f64,
    pub jf: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub mae: Option<f64>,
    pub ema: Option<f64>,
}

impl Report {
    pub fn new(dataset: &str, seg: SegScore) -> Self {
        Self {
            dataset: dataset.to_owned(),
            strategy: None,
            tau: None,
            k: None,
            l: None,
            j: seg.j,
            f: seg.f,
            jf: seg.jf,
            precision: None,
            recall: None,
            f1: None,
            mae: None,
            ema: None,
        }
    }

    pub fn with_points(mut self, p: PointScore) -> Self {
        self.precision = Some(p.precision);
        self.recall = Some(p.recall);
        self.f1 = Some(p.f1);
        self
    }

    pub fn with_counts(mut self, c: CountScore) -> Self {
        self.mae = Some(c.mae);
        self.ema = Some(c.ema);
        self
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_owned(), |v| v.to_string())
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |v| format!("{:.2}", 100.0 * v))
}

/// Fixed-width table; scores in percent, MAE as is, EMA already in percent.
pub fn render_table(reports: &[Report]) -> String {
    let header = [
        "dataset", "strategy", "tau", "k", "l", "J", "F", "J&F", "P", "R", "F1", "MAE", "EMA",
    ];
    let rows: Vec<[String; 13]> = reports
        .iter()
        .map(|r| {
            [
                r.dataset.clone(),
                opt(r.strategy),
                opt(r.tau),
                opt(r.k),
                opt(r.l),
                pct(Some(r.j)),
                pct(Some(r.f)),
                pct(Some(r.jf)),
                pct(r.precision),
                pct(r.recall),
                pct(r.f1),
                r.mae.map_or_else(|| "-".to_owned(), |v| format!("{v:.3}")),
                r.ema.map_or_else(|| "-".to_owned(), |v| format!("{v:.2}")),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| -> String {
        let mut s = cells
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect::<Vec<_>>()
            .join("  ");
        s.truncate(s.trim_end().len());
        s.push('\n');
        s
    };
    let mut out = line(&mut header.iter().copied());
    for row in &rows {
        out.push_str(&line(&mut row.iter().map(String::as_str)));
    }
    out
}
