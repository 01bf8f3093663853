//! CSV artifacts. Every file starts with one `#`-prefixed JSON line carrying
//! the file kind, the config hash and the seed, followed by a header row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::analysis::{BeamPattern, LevelOutcome, MonteCarloReport};
use crate::array::{ArrayGeometry, C64};
use crate::error::{Error, Result};
use crate::reselection::{SynthesisResult, WeightVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub file: String,
    pub config_hash: String,
    pub seed: u64,
    /// 1-based beam number for per-beam files.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beam: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub extra: Option<serde_json::Value>,
}

impl Header {
    pub fn new(file: &str, config_hash: &str, seed: u64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            file: file.into(),
            config_hash: config_hash.into(),
            seed,
            beam: None,
            extra: None,
        }
    }

    pub fn for_beam(&self, beam: usize) -> Self {
        Self {
            beam: Some(beam),
            ..self.clone()
        }
    }
}

/// Writes `# <header json>` and then `rows` as CSV with a header row.
pub fn write_csv<T: Serialize>(path: &Path, header: &Header, rows: &[T]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# {}", serde_json::to_string(header)?)?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the metadata line and the rows of a file written by [`write_csv`].
pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(Option<Header>, Vec<T>)> {
    let text = std::fs::read_to_string(path)?;
    let header = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .map(|l| serde_json::from_str(l.trim()))
        .transpose()?;
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok((header, rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub index: usize,
    pub x: f64,
    pub y: f64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub support: u8,
}

pub fn weight_rows(geom: &ArrayGeometry, w: &WeightVector) -> Vec<WeightRow> {
    let support = w.support();
    geom.positions()
        .iter()
        .zip(w.values().iter())
        .enumerate()
        .map(|(i, (&[x, y], v))| WeightRow {
            index: i,
            x,
            y,
            re: v.re,
            im: v.im,
            abs: v.norm(),
            support: u8::from(support[i]),
        })
        .collect()
}

pub fn write_weights(path: &Path, header: &Header, geom: &ArrayGeometry, w: &WeightVector) -> Result<()> {
    write_csv(path, header, &weight_rows(geom, w))
}

/// Complex weights from a weights file, ordered by element index.
pub fn read_weights(path: &Path) -> Result<DVector<C64>> {
    let (_, mut rows): (_, Vec<WeightRow>) = read_csv(path)
        .map_err(|e| Error::Config(format!("cannot read weights {}: {e}", path.display())))?;
    rows.sort_by_key(|r| r.index);
    if rows.iter().enumerate().any(|(i, r)| r.index != i) {
        return Err(Error::Config(format!(
            "{}: element indices must run 0..N without gaps",
            path.display()
        )));
    }
    Ok(DVector::from_iterator(
        rows.len(),
        rows.iter().map(|r| C64::new(r.re, r.im)),
    ))
}

/// Iteration, cost and one shared-count column per beam pair. Iteration 0
/// is the `J = ∞` sentinel.
pub fn write_cost_history(path: &Path, header: &Header, result: &SynthesisResult) -> Result<()> {
    let k = result.weights.len();
    let pairs = crate::reselection::beam_pairs(k);
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# {}", serde_json::to_string(header)?)?;
    let mut w = csv::Writer::from_writer(out);
    let mut head = vec!["iteration".to_string(), "cost".to_string()];
    head.extend(pairs.iter().map(|(i, j)| format!("shared_{}_{}", i + 1, j + 1)));
    w.write_record(&head)?;
    for (l, cost) in result.cost_history.iter().enumerate() {
        let mut rec = vec![l.to_string(), format!("{cost:?}")];
        match l.checked_sub(1).and_then(|i| result.shared_history.get(i)) {
            Some(shared) => rec.extend(shared.iter().map(usize::to_string)),
            None => rec.extend(std::iter::repeat_n(String::new(), pairs.len())),
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRow {
    pub theta_deg: f64,
    pub re: f64,
    pub im: f64,
    pub db: f64,
}

pub fn write_pattern(path: &Path, header: &Header, pattern: &BeamPattern) -> Result<()> {
    let db = pattern.power_db();
    let rows: Vec<PatternRow> = (0..pattern.len())
        .map(|i| PatternRow {
            theta_deg: pattern.coord(i),
            re: pattern.values[i].re,
            im: pattern.values[i].im,
            db: db[i],
        })
        .collect();
    write_csv(path, header, &rows)
}

/// Long-format metric row; `beam` is 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub beam: usize,
    pub metric: String,
    pub value: f64,
}

pub fn write_montecarlo(path: &Path, header: &Header, report: &MonteCarloReport) -> Result<()> {
    write_csv::<LevelOutcome>(path, header, &report.levels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRow {
    pub sll_db: f64,
    pub trial: usize,
    pub seed: u64,
    pub status: String,
    pub final_cost: f64,
    pub outer_iterations: usize,
    /// Support size per beam, `;`-separated.
    pub support_sizes: String,
}

pub fn write_seed_ledger(path: &Path, header: &Header, report: &MonteCarloReport) -> Result<()> {
    let rows: Vec<SeedRow> = report
        .records
        .iter()
        .map(|r| SeedRow {
            sll_db: r.sll_db,
            trial: r.trial,
            seed: r.seed,
            status: status_name(r.status).into(),
            final_cost: r.final_cost,
            outer_iterations: r.outer_iterations,
            support_sizes: join(&r.support_sizes),
        })
        .collect();
    write_csv(path, header, &rows)
}

pub fn status_name(s: crate::reselection::SynthesisStatus) -> &'static str {
    use crate::reselection::SynthesisStatus::*;
    match s {
        Disjoint => "disjoint",
        ConvergedNonzero => "converged_nonzero",
        IterationCap => "iteration_cap",
        SubproblemFailure => "subproblem_failure",
    }
}

pub fn join(xs: &[usize]) -> String {
    xs.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        let g = ArrayGeometry::linear(3, 0.5).unwrap();
        let v = DVector::from_vec(vec![
            C64::new(0.1, -0.2),
            C64::new(0.0, 0.0),
            C64::new(1.0 / 3.0, 2.0f64.sqrt()),
        ]);
        let w = WeightVector::new(v.clone(), 1e-4).unwrap();
        let h = Header::new("weights", "abc", 9).for_beam(2);
        write_weights(&path, &h, &g, &w).unwrap();
        assert_eq!(read_weights(&path).unwrap(), v);
        let (head, rows): (_, Vec<WeightRow>) = read_csv(&path).unwrap();
        assert_eq!(head, Some(h));
        assert_eq!(rows.iter().map(|r| r.support).collect::<Vec<_>>(), vec![1, 0, 1]);
        let first = std::fs::read_to_string(&path).unwrap();
        assert!(first.starts_with("# {"));
    }

    #[test]
    fn gaps_in_indices_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        std::fs::write(&path, "index,x,y,re,im,abs,support\n0,0,0,1,0,1,1\n2,1,0,1,0,1,1\n").unwrap();
        assert!(read_weights(&path).is_err());
    }
}
