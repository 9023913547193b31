//! Merging trajectory tables of several runs.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use greedyq::io::Table;

fn trajectory_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("trajectory.csv")
    } else {
        p.to_path_buf()
    }
}

fn zador_limit(dir: &Path) -> Option<f64> {
    let text = std::fs::read_to_string(dir.join("summary.json")).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    v["results"]["zador_limit"].as_f64()
}

/// Aligned columns of every input (`<label>.<column>`), plus
/// `<label>.<column>_ratio` against the run's Zador limit when its summary
/// records one. A single input is passed through unchanged.
pub fn compare(inputs: &[PathBuf]) -> Result<String> {
    if inputs.is_empty() {
        bail!("nothing to compare");
    }
    let paths: Vec<PathBuf> = inputs.iter().map(|p| trajectory_path(p)).collect();
    if paths.len() == 1 {
        return std::fs::read_to_string(&paths[0]).with_context(|| format!("cannot read `{}`", paths[0].display()));
    }
    let mut tables = Vec::with_capacity(paths.len());
    for p in &paths {
        let t = Table::read(p).with_context(|| format!("cannot read `{}`", p.display()))?;
        let n = t.column("N").with_context(|| format!("`{}` has no N column", p.display()))?;
        tables.push((t, n));
    }
    let reference = &tables[0].1;
    for (p, (_, n)) in paths.iter().zip(&tables).skip(1) {
        if n != reference {
            bail!(
                "N grids differ: `{}` has {} rows, `{}` has {} rows{}",
                paths[0].display(),
                reference.len(),
                p.display(),
                n.len(),
                if n.len() == reference.len() { " with different N values" } else { "" }
            );
        }
    }

    let mut used = BTreeSet::new();
    let mut header = vec!["N".to_string()];
    let mut columns: Vec<Vec<f64>> = vec![reference.clone()];
    for (i, (input, (t, _))) in inputs.iter().zip(&tables).enumerate() {
        let dir = if input.is_dir() { input.as_path() } else { input.parent().unwrap_or(Path::new(".")) };
        let mut label = dir.file_name().and_then(|s| s.to_str()).unwrap_or("run").to_string();
        if !used.insert(label.clone()) {
            label = format!("{label}_{}", i + 1);
            used.insert(label.clone());
        }
        let z = zador_limit(dir);
        for (k, name) in t.header.iter().enumerate() {
            if name == "N" {
                continue;
            }
            let col: Vec<f64> = t.rows.iter().map(|r| r[k]).collect();
            if let (Some(z), true) = (z, name == "scaled" || name.ends_with("_Ne")) {
                header.push(format!("{label}.{name}_ratio"));
                columns.push(col.iter().map(|v| v / z).collect());
            }
            header.push(format!("{label}.{name}"));
            columns.push(col);
        }
    }
    let mut out = Table::new(&header);
    for r in 0..reference.len() {
        out.push(columns.iter().map(|c| c[r]).collect());
    }
    Ok(out.to_csv())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, csv: &str, zador: Option<f64>) -> PathBuf {
        let d = dir.join(name);
        std::fs::create_dir_all(&d).unwrap();
        std::fs::write(d.join("trajectory.csv"), csv).unwrap();
        if let Some(z) = zador {
            std::fs::write(d.join("summary.json"), format!("{{\"results\": {{\"zador_limit\": {z}}}}}")).unwrap();
        }
        d
    }

    #[test]
    fn merges_and_checks_grids() {
        let tmp = tempfile::tempdir().unwrap();
        let a = write(tmp.path(), "a", "N,scaled\n1,0.5\n2,0.25\n", Some(0.25));
        let b = write(tmp.path(), "b", "N,scaled\n1,0.4\n2,0.3\n", None);
        let c = write(tmp.path(), "c", "N,scaled\n1,0.4\n", None);
        let merged = Table::parse_csv(&compare(&[a.clone(), b.clone()]).unwrap()).unwrap();
        assert_eq!(merged.header, ["N", "a.scaled_ratio", "a.scaled", "b.scaled"]);
        assert_eq!(merged.column("a.scaled_ratio").unwrap(), [2.0, 1.0]);
        let err = compare(&[a.clone(), c.clone()]).unwrap_err().to_string();
        assert!(err.contains("a/trajectory.csv") && err.contains("c/trajectory.csv"), "{err}");
        assert_eq!(compare(&[b]).unwrap(), "N,scaled\n1,0.4\n2,0.3\n");
    }
}
