use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use csanno::agreement::{
    disagreement_report, matrix_from_units, overlap_from_ratings, parse_ratings, render_csv,
    render_disagreements, render_table, AgreementReport, Rating,
};

fn tables(dir: &Path) -> Result<Vec<(String, Vec<Rating>)>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.is_file() && p.extension().is_some_and(|e| e == "tsv"));
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let name = p
                .file_stem()
                .and_then(|s| s.to_str())
                .context("annotator file name is not UTF-8")?
                .to_string();
            let rows =
                parse_ratings(&crate::read(&p)?).with_context(|| format!("in {}", p.display()))?;
            Ok((name, rows))
        })
        .collect()
}

fn report(dir: &Path, csv: bool, disagreements: bool) -> Result<String> {
    let units = overlap_from_ratings(&tables(dir)?)?;
    if units.is_empty() {
        bail!(
            "no unit in {} was annotated by two or more annotators",
            dir.display()
        );
    }
    let report = AgreementReport::from_matrix(&matrix_from_units(&units)?)?;
    let mut out = if csv {
        render_csv(&report)
    } else {
        render_table(&report)
    };
    if disagreements {
        out.push('\n');
        out.push_str(&render_disagreements(&disagreement_report(&units)?));
    }
    Ok(out)
}

/// Reports the directory itself, or each batch subdirectory in name order.
pub fn run(dir: &Path, csv: bool, disagreements: bool) -> Result<String> {
    let mut batches: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    batches.retain(|p| p.is_dir());
    batches.sort();
    if batches.is_empty() {
        return report(dir, csv, disagreements);
    }
    let mut out = String::new();
    for b in batches {
        let name = b
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        out.push_str(&format!("# batch {name}\n"));
        out.push_str(&report(&b, csv, disagreements)?);
        out.push('\n');
    }
    Ok(out)
}
