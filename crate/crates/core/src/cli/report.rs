//! Aligned text tables for stored results.

use crate::pipelines::{aggregate, ExperimentResult};

/// One table row: a label, per-seed accuracies and the aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub pipeline: String,
    pub dataset: String,
    pub per_seed: Vec<(u64, f64)>,
    pub mean: f64,
    pub std: f64,
    pub best: f64,
}

/// Rows for one result. Swap results expand to one row per basis/moment
/// cell.
pub fn rows_of(result: &ExperimentResult) -> Vec<Row> {
    let seeds: Vec<u64> = result.runs.iter().map(|r| r.seed).collect();
    if let Some(cells) = result.extra.get("cells").and_then(|c| c.as_array()) {
        let rows: Vec<Row> = cells
            .iter()
            .filter_map(|cell| {
                let name = cell.get("cell")?.as_str()?;
                let accs: Vec<f64> = cell.get("accuracies")?.as_array()?.iter().filter_map(|v| v.as_f64()).collect();
                let (mean, std, best) = aggregate(&accs);
                Some(Row {
                    pipeline: format!("{} {name}", result.pipeline),
                    dataset: result.dataset.clone(),
                    per_seed: seeds.iter().copied().zip(accs).collect(),
                    mean,
                    std,
                    best,
                })
            })
            .collect();
        if !rows.is_empty() {
            return rows;
        }
    }
    vec![Row {
        pipeline: result.pipeline.clone(),
        dataset: result.dataset.clone(),
        per_seed: result.runs.iter().map(|r| (r.seed, r.accuracy)).collect(),
        mean: result.mean,
        std: result.std,
        best: result.best,
    }]
}

fn pct(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.1}")
    } else {
        "-".to_string()
    }
}

/// Renders rows with one column per seed (in order of first appearance),
/// then Mean, Std and Best, all to one decimal.
pub fn render(rows: &[Row]) -> String {
    let mut seeds: Vec<u64> = Vec::new();
    for r in rows {
        for &(s, _) in &r.per_seed {
            if !seeds.contains(&s) {
                seeds.push(s);
            }
        }
    }
    let mut header = vec!["Pipeline".to_string(), "Dataset".to_string()];
    header.extend(seeds.iter().map(|s| format!("S{s}")));
    header.extend(["Mean", "Std", "Best"].map(String::from));
    let mut table = vec![header];
    for r in rows {
        let mut line = vec![r.pipeline.clone(), r.dataset.clone()];
        for s in &seeds {
            line.push(r.per_seed.iter().find(|(t, _)| t == s).map_or("-".to_string(), |&(_, a)| pct(a)));
        }
        line.extend([pct(r.mean), pct(r.std), pct(r.best)]);
        table.push(line);
    }
    let widths: Vec<usize> = (0..table[0].len())
        .map(|j| table.iter().map(|l| l[j].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in &table {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(j, (c, &w))| if j < 2 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}
