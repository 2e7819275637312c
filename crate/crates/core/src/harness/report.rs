//! Comparison tables and report layouts. Numbers are printed with two
//! decimals.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::run::{write_atomic, ExperimentResult, TemplateResult};
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportLayout {
    /// Rows (model, method); per dataset EM, SC and CodeBLEU of the best template.
    TableVi,
    /// Rows per template; one EM column per run.
    TableVii,
    /// Rows (dataset, method); EM and CodeBLEU per (model, shot count).
    TableIx,
    /// Every per-seed and mean row, long format.
    Csv,
    Json,
}

impl ReportLayout {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
            _ => "md",
        }
    }
}

impl FromStr for ReportLayout {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "tableVI" | "table6" => Self::TableVi,
            "tableVII" | "table7" => Self::TableVii,
            "tableIX" | "table9" => Self::TableIx,
            "csv" => Self::Csv,
            "json" => Self::Json,
            _ => return Err(HarnessError::Layout(format!("unknown layout `{s}` (tableVI, tableVII, tableIX, csv, json)"))),
        })
    }
}

impl fmt::Display for ReportLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TableVi => "tableVI",
            Self::TableVii => "tableVII",
            Self::TableIx => "tableIX",
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

/// Relative EM change of one run against the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Improvement {
    /// Percent change.
    Relative(f64),
    /// Baseline EM was zero; holds the treatment EM.
    FromZero(f64),
}

impl fmt::Display for Improvement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Relative(p) => write!(f, "{p:+.2}%"),
            Self::FromZero(to) => write!(f, "0 → {to:.2}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub run: String,
    pub baseline_em: f64,
    pub em: f64,
    pub improvement: Improvement,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub baseline: String,
    pub rows: Vec<ComparisonRow>,
}

fn run_label(result: &ExperimentResult, template: &TemplateResult) -> String {
    format!("{}/{}", result.name, template.template_id)
}

fn em_of(t: &TemplateResult) -> Option<f64> {
    t.cross_seed.map(|s| s.em)
}

/// Test manifest digests by seed; must agree for comparable runs.
fn manifests(result: &ExperimentResult) -> Vec<(u64, &str)> {
    let mut out: Vec<(u64, &str)> = result
        .templates
        .iter()
        .flat_map(|t| t.per_seed.iter().map(|r| (r.seed, r.test_manifest_sha256.as_str())))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Relative EM of every run/template against `baseline`, given as
/// `name` (single-template run) or `name/template`.
pub fn compare_runs(results: &[ExperimentResult], baseline: &str) -> Result<Comparison, HarnessError> {
    let (name, template) = match baseline.split_once('/') {
        Some((n, t)) => (n, Some(t)),
        None => (baseline, None),
    };
    let base_run = results
        .iter()
        .find(|r| r.name == name)
        .ok_or_else(|| HarnessError::Comparison(format!("no run named `{name}`")))?;
    let base = match template {
        Some(t) => base_run.template(t).ok_or_else(|| HarnessError::Comparison(format!("run `{name}` has no template `{t}`")))?,
        None if base_run.templates.len() == 1 => &base_run.templates[0],
        None => return Err(HarnessError::Comparison(format!("run `{name}` has several templates; name one as `{name}/<template>`"))),
    };
    let base_em = em_of(base).ok_or_else(|| HarnessError::Comparison(format!("baseline `{baseline}` has no finished seed")))?;
    let base_manifests = manifests(base_run);
    let mut rows = Vec::new();
    for result in results {
        if result.dataset_sha256 != base_run.dataset_sha256 {
            return Err(HarnessError::Comparison(format!("`{}` uses a different dataset than the baseline", result.name)));
        }
        if manifests(result) != base_manifests {
            return Err(HarnessError::Comparison(format!("`{}` was tested on different test manifests", result.name)));
        }
        for t in &result.templates {
            if std::ptr::eq(t, base) {
                continue;
            }
            let Some(em) = em_of(t) else { continue };
            let improvement = if base_em == 0.0 {
                Improvement::FromZero(em)
            } else {
                Improvement::Relative((em - base_em) / base_em * 100.0)
            };
            rows.push(ComparisonRow { run: run_label(result, t), baseline_em: base_em, em, improvement });
        }
    }
    Ok(Comparison { baseline: run_label(base_run, base), rows })
}

pub fn render_comparison(comparison: &Comparison) -> String {
    let mut out = format!("Baseline: {}\n\n| Run | Baseline EM | EM | Improvement |\n|---|---:|---:|---:|\n", comparison.baseline);
    for r in &comparison.rows {
        out.push_str(&format!("| {} | {:.2} | {:.2} | {} |\n", r.run, r.baseline_em, r.em, r.improvement));
    }
    out
}

fn push_unique<T: PartialEq>(items: &mut Vec<T>, item: T) -> usize {
    match items.iter().position(|x| *x == item) {
        Some(i) => i,
        None => {
            items.push(item);
            items.len() - 1
        }
    }
}

fn best(result: &ExperimentResult) -> Result<&TemplateResult, HarnessError> {
    result.best().ok_or_else(|| HarnessError::Layout(format!("run `{}` has no finished seed", result.name)))
}

/// Fills a rows × columns grid, failing on holes and duplicates.
fn grid<V: Copy>(
    rows: usize,
    cols: usize,
    cells: impl IntoIterator<Item = (usize, usize, V, String)>,
) -> Result<Vec<Vec<V>>, HarnessError> {
    let mut out: Vec<Vec<Option<V>>> = vec![vec![None; cols]; rows];
    for (r, c, v, who) in cells {
        if out[r][c].replace(v).is_some() {
            return Err(HarnessError::Layout(format!("two runs fill the same cell ({who})")));
        }
    }
    out.into_iter()
        .map(|row| row.into_iter().collect::<Option<Vec<V>>>())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| HarnessError::Layout("runs do not cover every row and column".into()))
}

fn table(header: &[String], numeric_from: usize, rows: &[Vec<String>]) -> String {
    let mut out = format!("| {} |\n|", header.join(" | "));
    for i in 0..header.len() {
        out.push_str(if i >= numeric_from { "---:|" } else { "---|" });
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format!("| {} |\n", row.join(" | ")));
    }
    out
}

fn table_vi(results: &[ExperimentResult]) -> Result<String, HarnessError> {
    let (mut rows, mut cols) = (Vec::new(), Vec::new());
    let mut cells = Vec::new();
    for r in results {
        let row = push_unique(&mut rows, (r.model_id.clone(), r.method.clone()));
        let col = push_unique(&mut cols, r.dataset.clone());
        let s = best(r)?.cross_seed.expect("best has scores");
        cells.push((row, col, s, r.name.clone()));
    }
    let g = grid(rows.len(), cols.len(), cells)?;
    let mut header = vec!["Model".to_string(), "Method".to_string()];
    for d in &cols {
        header.extend([format!("{d} EM"), format!("{d} SC"), format!("{d} CodeBLEU")]);
    }
    let body: Vec<Vec<String>> = rows
        .iter()
        .zip(&g)
        .map(|((model, method), cells)| {
            let mut line = vec![model.clone(), method.clone()];
            for s in cells {
                line.extend([format!("{:.2}", s.em), format!("{:.2}", s.sc), format!("{:.2}", s.codebleu)]);
            }
            line
        })
        .collect();
    Ok(table(&header, 2, &body))
}

fn table_vii(results: &[ExperimentResult]) -> Result<String, HarnessError> {
    let ids: Vec<&str> = results[0].templates.iter().map(|t| t.template_id.as_str()).collect();
    let mut header = vec!["Template".to_string()];
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for r in results {
        let theirs: Vec<&str> = r.templates.iter().map(|t| t.template_id.as_str()).collect();
        if theirs != ids {
            return Err(HarnessError::Layout(format!("`{}` ran templates {theirs:?}, expected {ids:?}", r.name)));
        }
        let ems = r
            .templates
            .iter()
            .map(|t| em_of(t).ok_or_else(|| HarnessError::Layout(format!("`{}` has no scores for {}", r.name, t.template_id))))
            .collect::<Result<Vec<_>, _>>()?;
        header.push(format!("{} {}", r.dataset, r.model_id));
        cols.push(ems);
    }
    let body: Vec<Vec<String>> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| std::iter::once(id.to_string()).chain(cols.iter().map(|c| format!("{:.2}", c[i]))).collect())
        .collect();
    Ok(table(&header, 1, &body))
}

fn table_ix(results: &[ExperimentResult]) -> Result<String, HarnessError> {
    let (mut rows, mut cols) = (Vec::new(), Vec::<(String, usize)>::new());
    for r in results {
        let k = r.shot_count().ok_or_else(|| HarnessError::Layout(format!("`{}` is not a shot-mode run", r.name)))?;
        push_unique(&mut rows, (r.dataset.clone(), r.method.clone()));
        push_unique(&mut cols, (r.model_id.clone(), k));
    }
    // models in first-appearance order, shots ascending within a model
    let models: Vec<String> = cols.iter().fold(Vec::new(), |mut acc, (m, _)| {
        push_unique(&mut acc, m.clone());
        acc
    });
    cols.sort_by_key(|(m, k)| (models.iter().position(|x| x == m), *k));
    let mut cells = Vec::new();
    for r in results {
        let row = rows.iter().position(|x| *x == (r.dataset.clone(), r.method.clone())).unwrap();
        let col = cols.iter().position(|x| *x == (r.model_id.clone(), r.shot_count().unwrap())).unwrap();
        cells.push((row, col, best(r)?.cross_seed.expect("best has scores"), r.name.clone()));
    }
    let g = grid(rows.len(), cols.len(), cells)?;
    let mut header = vec!["Dataset".to_string(), "Method".to_string()];
    for (m, k) in &cols {
        header.extend([format!("{m} {k}-shot EM"), format!("{m} {k}-shot C.BLEU")]);
    }
    let body: Vec<Vec<String>> = rows
        .iter()
        .zip(&g)
        .map(|((d, method), cells)| {
            let mut line = vec![d.clone(), method.clone()];
            for s in cells {
                line.extend([format!("{:.2}", s.em), format!("{:.2}", s.codebleu)]);
            }
            line
        })
        .collect();
    Ok(table(&header, 2, &body))
}

fn csv(results: &[ExperimentResult]) -> String {
    let mut out = String::from("run,dataset,model,method,template,seed,instances,em,sc,codebleu\n");
    let quote = |s: &str| {
        if s.contains([',', '"', '\n']) {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_string()
        }
    };
    for r in results {
        let prefix = [&r.name, &r.dataset, &r.model_id, &r.method].map(|s| quote(s)).join(",");
        for t in &r.templates {
            for row in &t.per_seed {
                let s = row.scores;
                out.push_str(&format!(
                    "{prefix},{},{},{},{:.2},{:.2},{:.2}\n",
                    quote(&t.template_id),
                    row.seed,
                    row.instances,
                    s.em,
                    s.sc,
                    s.codebleu
                ));
            }
            if let Some(s) = t.cross_seed {
                out.push_str(&format!("{prefix},{},mean,,{:.2},{:.2},{:.2}\n", quote(&t.template_id), s.em, s.sc, s.codebleu));
            }
        }
    }
    out
}

/// The report text for `layout`.
pub fn render_report(results: &[ExperimentResult], layout: ReportLayout) -> Result<String, HarnessError> {
    if results.is_empty() {
        return Err(HarnessError::Layout("no results to report".into()));
    }
    match layout {
        ReportLayout::TableVi => table_vi(results),
        ReportLayout::TableVii => table_vii(results),
        ReportLayout::TableIx => table_ix(results),
        ReportLayout::Csv => Ok(csv(results)),
        ReportLayout::Json => Ok(serde_json::to_string_pretty(results).expect("serializable") + "\n"),
    }
}

/// Writes `report.<ext>` into `dir` and returns its path.
pub fn emit_report(results: &[ExperimentResult], layout: ReportLayout, dir: &Path) -> Result<PathBuf, HarnessError> {
    let text = render_report(results, layout)?;
    let path = dir.join(format!("report-{layout}.{}", layout.extension()));
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}
