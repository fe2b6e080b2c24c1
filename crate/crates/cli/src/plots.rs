//! `emit-plots`: regroups report files into CSV tables for plotting.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use stflow_core::verify::{self, VerificationReport};

/// All `*.jsonl` files below `dir`, sorted, skipping the output directory.
fn report_files(dir: &Path, out: &Path, acc: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .collect::<std::io::Result<Vec<_>>>()?;
    entries.sort_by_key(|e| e.path());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            if p != out {
                report_files(&p, out, acc)?;
            }
        } else if p.extension().is_some_and(|x| x == "jsonl") {
            acc.push(p);
        }
    }
    Ok(())
}

/// Family of a report: the part of its name before the first `/`.
pub fn family(name: &str) -> &str {
    name.split('/').next().unwrap_or(name)
}

/// Splits a detail key `<quantity>_<axis>_<x>` with axis `lambda` or `t`.
fn series_key(key: &str) -> Option<(String, &'static str, f64)> {
    for axis in ["lambda", "t"] {
        let pat = format!("_{axis}_");
        if let Some(i) = key.rfind(&pat) {
            if let Ok(x) = key[i + pat.len()..].parse::<f64>() {
                return Some((key[..i].to_string(), axis, x));
            }
        }
    }
    None
}

/// Writes `plots/<family>.csv` per check family plus `plots/<q>-vs-<axis>.csv`
/// for swept details. Returns the files written.
pub fn emit(dir: &Path) -> Result<Vec<PathBuf>> {
    let out = dir.join("plots");
    let mut files = Vec::new();
    report_files(dir, &out, &mut files)?;
    let mut by_family: BTreeMap<String, Vec<VerificationReport>> = BTreeMap::new();
    let mut series: BTreeMap<String, Vec<(String, String, f64, f64)>> = BTreeMap::new();
    for f in &files {
        let source = f.strip_prefix(dir).unwrap_or(f).display().to_string();
        for r in verify::load_jsonl(f).with_context(|| format!("reading {}", f.display()))? {
            for (k, v) in &r.details {
                if let Some((q, axis, x)) = series_key(k) {
                    series.entry(format!("{q}-vs-{axis}")).or_default().push((source.clone(), r.name.clone(), x, *v));
                }
            }
            by_family.entry(family(&r.name).to_string()).or_default().push(r);
        }
    }
    std::fs::create_dir_all(&out)?;
    let mut written = Vec::new();
    for (fam, reports) in &by_family {
        let path = out.join(format!("{fam}.csv"));
        let mut buf = Vec::new();
        verify::write_csv(&mut buf, reports)?;
        std::fs::write(&path, buf)?;
        written.push(path);
    }
    for (name, mut rows) in series {
        rows.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)).then(a.2.total_cmp(&b.2)));
        let axis = name.rsplit("-vs-").next().unwrap_or("x").to_string();
        let quantity = name.split("-vs-").next().unwrap_or("y").to_string();
        let mut text = format!("source,report,{axis},{quantity}\n");
        for (src, rep, x, y) in rows {
            text.push_str(&format!("{src},{rep},{x},{y}\n"));
        }
        let path = out.join(format!("{name}.csv"));
        std::fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}
