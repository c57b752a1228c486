//! Per-iteration summaries across runs: mean, nearest-rank quantiles, success rate.

use std::io::Write;

use anyhow::bail;

use crate::experiment::RunRecord;

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub t: usize,
    pub mean: f64,
    /// One value per requested quantile, in request order.
    pub quantiles: Vec<f64>,
    /// Fraction of runs whose payoff at `t` is at least the threshold.
    pub success_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub quantiles: Vec<f64>,
    pub threshold: f64,
    pub runs: usize,
    pub rows: Vec<SummaryRow>,
}

impl Summary {
    pub fn final_row(&self) -> &SummaryRow {
        self.rows.last().expect("summaries are never empty")
    }
}

/// Smallest value with at least a `q` fraction of the sample at or below it.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

pub fn summarize(records: &[RunRecord], quantiles: &[f64], threshold: f64) -> anyhow::Result<Summary> {
    let Some(first) = records.first() else {
        bail!("nothing to summarize");
    };
    let length = first.trace.len();
    if length == 0 {
        bail!("run {} has no iterations", first.run);
    }
    if let Some(r) = records.iter().find(|r| r.trace.len() != length) {
        bail!("run {} has {} iterations, expected {length}", r.run, r.trace.len());
    }
    let n = records.len() as f64;
    let rows = (0..length)
        .map(|k| {
            let mut values: Vec<f64> = records.iter().map(|r| r.trace[k].expected_payoff_projected).collect();
            let mean = values.iter().sum::<f64>() / n;
            let successes = values.iter().filter(|&&v| v >= threshold).count();
            values.sort_by(f64::total_cmp);
            SummaryRow {
                t: first.trace[k].t,
                mean,
                quantiles: quantiles.iter().map(|&q| nearest_rank(&values, q)).collect(),
                success_rate: successes as f64 / n,
            }
        })
        .collect();
    Ok(Summary {
        quantiles: quantiles.to_vec(),
        threshold,
        runs: records.len(),
        rows,
    })
}

/// Columns: t, mean, one `q<level>` column per quantile, success_rate.
pub fn write_summary_csv(out: impl Write, summary: &Summary) -> anyhow::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "mean".to_string()];
    header.extend(summary.quantiles.iter().map(|q| format!("q{q}")));
    header.push("success_rate".into());
    writer.write_record(&header)?;
    for row in &summary.rows {
        let mut fields = vec![row.t.to_string(), row.mean.to_string()];
        fields.extend(row.quantiles.iter().map(f64::to_string));
        fields.push(row.success_rate.to_string());
        writer.write_record(&fields)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use phide_core::IterationRecord;

    fn run(run: usize, payoffs: &[f64]) -> RunRecord {
        RunRecord {
            run,
            seed: run as u64,
            trace: payoffs
                .iter()
                .enumerate()
                .map(|(k, &p)| IterationRecord {
                    t: k + 1,
                    expected_payoff_projected: p,
                    penalty_mass: 0.0,
                    sum_pos_local_regret: 0.0,
                    lambda_t: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn single_run_quantiles_are_the_run() {
        let s = summarize(&[run(0, &[0.2, 0.7])], &[0.1, 0.5, 0.9], 0.95).unwrap();
        assert_eq!(s.rows[1].quantiles, vec![0.7; 3]);
        assert_eq!(s.rows[1].mean, 0.7);
    }

    #[test]
    fn constant_runs() {
        let runs: Vec<_> = (0..5).map(|i| run(i, &[1.0, 1.0])).collect();
        let s = summarize(&runs, &[0.0, 0.1, 0.9, 1.0], 0.95).unwrap();
        assert!(s.rows.iter().all(|r| r.mean == 1.0 && r.quantiles.iter().all(|&q| q == 1.0)));
        assert_eq!(s.final_row().success_rate, 1.0);
    }

    #[test]
    fn success_rate_counts_final_payoffs() {
        let runs: Vec<_> = (0..100).map(|i| run(i, &[if i < 48 { 0.96 } else { 0.5 }])).collect();
        assert_eq!(summarize(&runs, &[], 0.95).unwrap().final_row().success_rate, 0.48);
    }

    #[test]
    fn nearest_rank_by_hand() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        assert_eq!(nearest_rank(&v, 0.1), 1.0);
        assert_eq!(nearest_rank(&v, 0.11), 2.0);
        assert_eq!(nearest_rank(&v, 0.9), 9.0);
        assert_eq!(nearest_rank(&v, 0.0), 1.0);
        assert_eq!(nearest_rank(&v, 1.0), 10.0);
    }

    #[test]
    fn bad_inputs() {
        assert!(summarize(&[], &[0.5], 0.9).is_err());
        assert!(summarize(&[run(0, &[1.0]), run(1, &[1.0, 1.0])], &[0.5], 0.9).is_err());
    }

    #[test]
    fn csv_header() {
        let s = summarize(&[run(0, &[0.5])], &[0.1, 0.9], 0.95).unwrap();
        let mut out = Vec::new();
        write_summary_csv(&mut out, &s).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "t,mean,q0.1,q0.9,success_rate\n1,0.5,0.5,0.5,0\n");
    }
}
