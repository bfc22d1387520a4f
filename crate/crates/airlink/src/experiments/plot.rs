//! Turns a sweep CSV into per-curve data files for external plotting.
//!
//! `group_by` names the varying (x) axis. One file is emitted per
//! (scheme, fixed-axis value); rows are `x,mean,std` sorted by x, with
//! seeds aggregated by mean and standard deviation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiments::sweep::CSV_HEADER;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    /// SNR varies along the curve; bandwidth is fixed per file.
    Snr,
    /// Bandwidth varies along the curve; SNR is fixed per file.
    Bandwidth,
}

impl GroupBy {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "snr" => Ok(GroupBy::Snr),
            "bandwidth" => Ok(GroupBy::Bandwidth),
            other => Err(Error::Config(format!(
                "group_by must be 'snr' or 'bandwidth', got '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
struct Row {
    scheme: String,
    snr_db: f64,
    bandwidth: usize,
    mean_accuracy: f64,
}

fn parse_rows(path: &Path) -> Result<Vec<Row>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty CSV".into()))?;
    let expected: Vec<&str> = CSV_HEADER.split(',').collect();
    let got: Vec<&str> = header.split(',').collect();
    for (i, want) in expected.iter().enumerate() {
        match got.get(i) {
            Some(g) if g == want => {}
            Some(g) => {
                return Err(Error::Format(format!(
                    "CSV column {i} is '{g}', expected '{want}'"
                )))
            }
            None => return Err(Error::Format(format!("CSV is missing column '{want}'"))),
        }
    }
    if got.len() != expected.len() {
        return Err(Error::Format(format!(
            "CSV has unexpected extra column '{}'",
            got[expected.len()]
        )));
    }

    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected.len() {
            return Err(Error::Format(format!(
                "line {}: expected {} fields, got {}",
                lineno + 2,
                expected.len(),
                fields.len()
            )));
        }
        let parse_f64 = |idx: usize, name: &str| -> Result<f64> {
            fields[idx]
                .parse::<f64>()
                .map_err(|_| Error::Format(format!("line {}: bad {name} '{}'", lineno + 2, fields[idx])))
        };
        rows.push(Row {
            scheme: fields[0].to_string(),
            snr_db: parse_f64(1, "snr_db")?,
            bandwidth: fields[2]
                .parse()
                .map_err(|_| {
                    Error::Format(format!(
                        "line {}: bad bandwidth_real_dims '{}'",
                        lineno + 2,
                        fields[2]
                    ))
                })?,
            mean_accuracy: parse_f64(5, "mean_accuracy")?,
        });
    }
    Ok(rows)
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

/// Emits one `x,mean,std` file per (scheme, fixed-axis value) and returns
/// the paths written, sorted.
pub fn emit_plot_data(csv: &Path, group_by: GroupBy, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let rows = parse_rows(csv)?;
    std::fs::create_dir_all(out_dir)?;

    // (scheme, fixed-value-string) -> x (by bit pattern) -> accuracies
    // over seeds.
    type CurvePoints = BTreeMap<u64, (f64, Vec<f64>)>;
    let mut curves: BTreeMap<(String, String), CurvePoints> = BTreeMap::new();
    for row in &rows {
        let (x, fixed) = match group_by {
            GroupBy::Snr => (row.snr_db, format!("bw{}", row.bandwidth)),
            GroupBy::Bandwidth => (row.bandwidth as f64, format!("snr{}", row.snr_db)),
        };
        let entry = curves
            .entry((row.scheme.clone(), fixed))
            .or_default()
            .entry(x.to_bits())
            .or_insert((x, Vec::new()));
        entry.1.push(row.mean_accuracy);
    }

    let x_label = match group_by {
        GroupBy::Snr => "snr_db",
        GroupBy::Bandwidth => "bandwidth_real_dims",
    };
    let mut written = Vec::new();
    for ((scheme, fixed), points) in &curves {
        let mut sorted: Vec<&(f64, Vec<f64>)> = points.values().collect();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut body = format!("{x_label},mean_accuracy,std_accuracy\n");
        for (x, accs) in sorted {
            let mean = accs.iter().sum::<f64>() / accs.len() as f64;
            let std = if accs.len() > 1 {
                (accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>()
                    / (accs.len() - 1) as f64)
                    .sqrt()
            } else {
                0.0
            };
            body.push_str(&format!("{x},{mean:.6},{std:.6}\n"));
        }
        let path = out_dir.join(format!("{}_{}.csv", sanitize(scheme), sanitize(fixed)));
        std::fs::write(&path, body)?;
        written.push(path);
    }
    written.sort();
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_csv(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("results.csv");
        std::fs::write(&path, format!("{CSV_HEADER}\n{body}")).unwrap();
        path
    }

    #[test]
    fn single_row_gives_single_point_curve() {
        let dir = std::env::temp_dir().join("airlink_plot_single");
        std::fs::create_dir_all(&dir).unwrap();
        let csv = write_csv(&dir, "airnet,0,100,1,5,0.900000,0.010000,12\n");
        let files = emit_plot_data(&csv, GroupBy::Snr, &dir.join("curves")).unwrap();
        assert_eq!(files.len(), 1);
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(text, "snr_db,mean_accuracy,std_accuracy\n0,0.900000,0.000000\n");
    }

    #[test]
    fn seeds_aggregate_and_curves_split_by_scheme() {
        let dir = std::env::temp_dir().join("airlink_plot_grid");
        std::fs::create_dir_all(&dir).unwrap();
        // 2 schemes x 3 SNRs x 2 seeds at one bandwidth = 12 rows.
        let mut body = String::new();
        for scheme in ["airnet", "digital"] {
            for snr in [0, 5, 10] {
                for seed in [1, 2] {
                    let acc = 0.5 + 0.01 * seed as f64;
                    body.push_str(&format!("{scheme},{snr},100,{seed},5,{acc:.6},0.000000,3\n"));
                }
            }
        }
        let csv = write_csv(&dir, &body);
        let files = emit_plot_data(&csv, GroupBy::Snr, &dir.join("curves")).unwrap();
        assert_eq!(files.len(), 2);
        for f in &files {
            let text = std::fs::read_to_string(f).unwrap();
            let lines: Vec<&str> = text.lines().collect();
            assert_eq!(lines.len(), 4); // header + 3 points
            // mean over seeds = 0.515, std over the two seeds.
            assert!(lines[1].starts_with("0,0.515000,"));
        }
    }

    #[test]
    fn schema_violation_names_the_column() {
        let dir = std::env::temp_dir().join("airlink_plot_bad");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.csv");
        std::fs::write(
            &path,
            "scheme,snr_db,bandwidth_real_dims,seed,trial_count,accuracy,std_accuracy,wall_ms\n",
        )
        .unwrap();
        let err = emit_plot_data(&path, GroupBy::Snr, &dir.join("curves")).unwrap_err();
        assert!(err.to_string().contains("mean_accuracy"), "{err}");
    }
}
