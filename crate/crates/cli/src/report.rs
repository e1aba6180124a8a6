//! Aggregation of classification verdicts over finished runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use harmlab_core::analysis::{ClassificationRecord, DensityVerdict, FlatnessVerdict, LambdaVerdict};
use serde::{Deserialize, Serialize};

use crate::run::RunManifest;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub run: String,
    pub points: usize,
    pub lambda1: usize,
    pub lambda2: usize,
    pub lambda3: usize,
    pub lambda4: usize,
    pub lambda_undetermined: usize,
    /// Flat blow-up profiles.
    pub flat: usize,
    pub density_good: usize,
    pub density_bad: usize,
    pub warnings: usize,
}

impl ReportRow {
    fn add(&mut self, o: &ReportRow) {
        self.points += o.points;
        self.lambda1 += o.lambda1;
        self.lambda2 += o.lambda2;
        self.lambda3 += o.lambda3;
        self.lambda4 += o.lambda4;
        self.lambda_undetermined += o.lambda_undetermined;
        self.flat += o.flat;
        self.density_good += o.density_good;
        self.density_bad += o.density_bad;
        self.warnings += o.warnings;
    }

    fn cells(&self) -> [usize; 10] {
        [
            self.points,
            self.lambda1,
            self.lambda2,
            self.lambda3,
            self.lambda4,
            self.lambda_undetermined,
            self.flat,
            self.density_good,
            self.density_bad,
            self.warnings,
        ]
    }
}

const COLUMNS: [&str; 10] = ["points", "L1", "L2", "L3", "L4", "undetermined", "flat", "good", "bad", "warnings"];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub total: ReportRow,
    /// Manifests or artifacts that could not be read.
    pub missing: Vec<String>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn table(&self) -> String {
        let width = self.rows.iter().map(|r| r.run.len()).chain([5]).max().unwrap();
        let mut out = format!("{:width$}", "run");
        for c in COLUMNS {
            write!(out, " {c:>12}").unwrap();
        }
        out.push('\n');
        for r in self.rows.iter().chain(std::iter::once(&self.total)) {
            write!(out, "{:width$}", r.run).unwrap();
            for v in r.cells() {
                write!(out, " {v:>12}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn csv(&self) -> String {
        let mut out = format!("run,{}\n", COLUMNS.join(","));
        for r in self.rows.iter().chain(std::iter::once(&self.total)) {
            let cells: Vec<String> = r.cells().iter().map(|v| v.to_string()).collect();
            writeln!(out, "{},{}", r.run, cells.join(",")).unwrap();
        }
        out
    }
}

fn row_of(run: String, records: &[ClassificationRecord], warnings: usize) -> ReportRow {
    let mut row = ReportRow {
        run,
        points: records.len(),
        warnings,
        ..Default::default()
    };
    for r in records {
        match r.lambda.verdict {
            LambdaVerdict::Lambda1 => row.lambda1 += 1,
            LambdaVerdict::Lambda2 => row.lambda2 += 1,
            LambdaVerdict::Lambda3 => row.lambda3 += 1,
            LambdaVerdict::Lambda4 => row.lambda4 += 1,
            LambdaVerdict::Undetermined => row.lambda_undetermined += 1,
        }
        if r.flatness.as_ref().is_some_and(|f| f.verdict == FlatnessVerdict::Flat) {
            row.flat += 1;
        }
        match r.density.as_ref().map(|d| d.verdict) {
            Some(DensityVerdict::Good) => row.density_good += 1,
            Some(DensityVerdict::Bad) => row.density_bad += 1,
            _ => {}
        }
    }
    row
}

fn load(path: &Path) -> Result<(RunManifest, Vec<ClassificationRecord>), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let Some(entry) = manifest.outputs.iter().find(|o| o.path == "classification.json") else {
        return Ok((manifest, Vec::new()));
    };
    let file: PathBuf = dir.join(&entry.path);
    let text = std::fs::read_to_string(&file).map_err(|e| format!("{}: {e}", file.display()))?;
    let records = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", file.display()))?;
    Ok((manifest, records))
}

/// Verdict counts per run and in total. Unreadable inputs are listed in
/// `missing` and skipped.
pub fn report(manifests: &[PathBuf]) -> Report {
    let mut rep = Report {
        total: ReportRow {
            run: "total".into(),
            ..Default::default()
        },
        ..Default::default()
    };
    if manifests.is_empty() {
        rep.warnings.push("no manifests given".into());
    }
    for path in manifests {
        match load(path) {
            Ok((m, records)) => {
                let name = if m.name.is_empty() { path.display().to_string() } else { m.name.clone() };
                if records.is_empty() {
                    rep.warnings.push(format!("{name}: no classification output"));
                }
                let row = row_of(name, &records, m.warnings().count());
                rep.total.add(&row);
                rep.rows.push(row);
            }
            Err(e) => rep.missing.push(e),
        }
    }
    rep
}
