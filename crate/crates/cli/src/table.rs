//! CSV emission and paper-style table formatting.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::study::MethodResult;

pub const SUMMARY_HEADER: &str = "method,metric,mean,sd,success_rate,replications,seed";
pub const TRACE_HEADER: &str = "replication,iter,r,xi,loglik,accepted";

/// Serializes per-method summaries in the fixed
/// `method,metric,mean,sd,success_rate,replications,seed` schema, plus the
/// run-statistic pseudo-metrics `iterations` and `final_r`.
pub fn summary_csv(results: &[MethodResult]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for res in results {
        let s = &res.summary;
        for (name, mean, sd) in &s.metrics {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.method.name(),
                name,
                mean,
                sd,
                s.success_rate,
                s.replications,
                s.base_seed
            )
            .unwrap();
        }
        for (name, value) in [("iterations", s.mean_iterations), ("final_r", s.mean_final_r)] {
            writeln!(
                out,
                "{},{},{},0,{},{},{}",
                s.method.name(),
                name,
                value,
                s.success_rate,
                s.replications,
                s.base_seed
            )
            .unwrap();
        }
    }
    out
}

/// Per-replication outcomes, wide format.
pub fn replications_csv(results: &[MethodResult], metric_names: &[&str]) -> String {
    let mut out = String::from("method,replication,converged,success,iterations,final_r,final_xi,loglik,error");
    for name in metric_names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for res in results {
        for r in &res.records {
            write!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                res.method.name(),
                r.replication,
                r.converged,
                r.success,
                r.iterations,
                r.final_r,
                r.final_xi,
                r.loglik,
                r.error.as_deref().unwrap_or("")
            )
            .unwrap();
            for v in &r.metrics {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

/// Per-iteration trace rows of one method in the fixed
/// `replication,iter,r,xi,loglik,accepted` schema.
pub fn trace_csv(result: &MethodResult) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for rec in &result.records {
        for t in &rec.trace {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                rec.replication, t.iter, t.r, t.xi, t.loglik, t.accepted
            )
            .unwrap();
        }
    }
    out
}

/// One parsed summary row.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub method: String,
    pub metric: String,
    pub mean: f64,
    pub sd: f64,
    pub success_rate: f64,
    pub replications: u64,
}

pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == SUMMARY_HEADER => {}
        other => return Err(format!("unexpected summary header {other:?}")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(format!("summary row {} has {} fields", i + 2, f.len()));
        }
        let num = |s: &str| -> Result<f64, String> {
            s.parse().map_err(|_| format!("bad number `{s}`"))
        };
        rows.push(SummaryRow {
            method: f[0].into(),
            metric: f[1].into(),
            mean: num(f[2])?,
            sd: num(f[3])?,
            success_rate: num(f[4])?,
            replications: f[5].parse().map_err(|_| "bad count".to_string())?,
        });
    }
    Ok(rows)
}

/// Formats rows as a method-by-metric table with `mean (sd)` cells, followed
/// by the success column; also returns the combined CSV.
pub fn emit_table(rows: &[SummaryRow]) -> (String, String) {
    let mut metrics: Vec<String> = Vec::new();
    for row in rows {
        if !metrics.contains(&row.metric) {
            metrics.push(row.metric.clone());
        }
    }
    let mut methods: BTreeMap<String, BTreeMap<String, (f64, f64)>> = BTreeMap::new();
    let mut success: BTreeMap<String, f64> = BTreeMap::new();
    for row in rows {
        methods
            .entry(row.method.clone())
            .or_default()
            .insert(row.metric.clone(), (row.mean, row.sd));
        success.insert(row.method.clone(), row.success_rate);
    }

    let mut table = String::new();
    write!(table, "{:<10}", "method").unwrap();
    for m in &metrics {
        write!(table, " {m:>22}").unwrap();
    }
    writeln!(table, " {:>8}", "success").unwrap();
    for (method, cells) in &methods {
        write!(table, "{method:<10}").unwrap();
        for m in &metrics {
            match cells.get(m) {
                Some((mean, sd)) => {
                    write!(table, " {:>22}", format!("{mean:.4} ({sd:.4})")).unwrap()
                }
                None => write!(table, " {:>22}", "-").unwrap(),
            }
        }
        writeln!(table, " {:>8.3}", success.get(method).copied().unwrap_or(f64::NAN)).unwrap();
    }

    let mut csv = String::from(SUMMARY_HEADER);
    csv.push('\n');
    for row in rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},0",
            row.method, row.metric, row.mean, row.sd, row.success_rate, row.replications
        )
        .unwrap();
    }
    (table, csv)
}

/// Loads and concatenates every `summary*.csv` under `dir`, sorted by name.
pub fn collect_summaries(dir: &Path) -> Result<Vec<SummaryRow>, String> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| format!("cannot read {}: {e}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("summary") && n.ends_with(".csv"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(format!("no summary*.csv files under {}", dir.display()));
    }
    let mut rows = Vec::new();
    for file in files {
        let text = std::fs::read_to_string(&file)
            .map_err(|e| format!("cannot read {}: {e}", file.display()))?;
        rows.extend(parse_summary_csv(&text).map_err(|e| format!("{}: {e}", file.display()))?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_summary_is_header_only() {
        assert_eq!(summary_csv(&[]), format!("{SUMMARY_HEADER}\n"));
        let (_, csv) = emit_table(&[]);
        assert_eq!(csv, format!("{SUMMARY_HEADER}\n"));
    }

    #[test]
    fn summary_roundtrip_and_table_shape() {
        let rows = vec![
            SummaryRow {
                method: "em".into(),
                metric: "pi_bias".into(),
                mean: 0.1,
                sd: 0.02,
                success_rate: 0.9,
                replications: 10,
            },
            SummaryRow {
                method: "em".into(),
                metric: "lambda_bias".into(),
                mean: -0.05,
                sd: 0.01,
                success_rate: 0.9,
                replications: 10,
            },
        ];
        let (table, csv) = emit_table(&rows);
        assert!(table.contains("pi_bias"));
        assert!(table.contains("0.1000 (0.0200)"));
        let parsed = parse_summary_csv(&csv).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].method, "em");
    }
}
