//! Precision/recall, PR-AUC and Hits@k over scored samples, and the
//! baseline-versus-RDDL comparison table.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::ontology::ProfileName;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no positive labels")]
    NoPositives,
    #[error("no negative labels")]
    NoNegatives,
    #[error("task {0} lacks a baseline or an rddl result")]
    Unpaired(String),
    #[error("results line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// `(precision, recall)` predicting positive when `score > threshold`.
/// Precision is 1 when nothing is predicted positive.
pub fn precision_recall(scored: &[(f64, bool)], threshold: f64) -> Result<(f64, f64), EvalError> {
    let positives = scored.iter().filter(|s| s.1).count();
    if positives == 0 {
        return Err(EvalError::NoPositives);
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    for &(s, label) in scored {
        if s > threshold {
            if label {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    let precision = if tp + fp == 0 {
        1.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    Ok((precision, tp as f64 / positives as f64))
}

fn check_labels(scored: &[(f64, bool)]) -> Result<usize, EvalError> {
    let positives = scored.iter().filter(|s| s.1).count();
    if positives == 0 {
        return Err(EvalError::NoPositives);
    }
    if positives == scored.len() {
        return Err(EvalError::NoNegatives);
    }
    Ok(positives)
}

/// Area under the precision-recall step curve: a descending sweep over
/// score groups, adding `Δrecall × precision` at each group. Tied scores
/// form one group.
pub fn pr_auc(scored: &[(f64, bool)]) -> Result<f64, EvalError> {
    let positives = check_labels(scored)? as f64;
    let mut sorted = scored.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (mut tp, mut seen, mut area, mut last_recall) = (0usize, 0usize, 0.0, 0.0);
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == s {
            tp += sorted[i].1 as usize;
            seen += 1;
            i += 1;
        }
        let recall = tp as f64 / positives;
        area += (recall - last_recall) * (tp as f64 / seen as f64);
        last_recall = recall;
    }
    Ok(area)
}

/// Per-positive hits: a positive ranks `1 + #{negatives scoring >= it}`
/// (ties go against it) and hits when that rank is at most `k`. Returns the
/// hit fraction.
pub fn hits_at_k(positives: &[f64], negatives: &[f64], k: usize) -> f64 {
    if positives.is_empty() {
        return 0.0;
    }
    let mut neg = negatives.to_vec();
    neg.sort_by(|a, b| b.total_cmp(a));
    let hits = positives
        .iter()
        .filter(|&&p| {
            let above = neg.partition_point(|&n| n >= p);
            above < k
        })
        .count();
    hits as f64 / positives.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskResult {
    pub task: String,
    pub profile: ProfileName,
    pub precision: f64,
    pub recall: f64,
    pub pr_auc: f64,
    pub hits_at_10: f64,
    pub positives: usize,
    pub negatives: usize,
    pub seed: u64,
}

impl TaskResult {
    /// Metrics from positive and negative scores, thresholded at 0.5.
    pub fn from_scores(
        task: &str,
        profile: ProfileName,
        seed: u64,
        positives: &[f64],
        negatives: &[f64],
    ) -> Result<Self, EvalError> {
        Self::from_scores_at(task, profile, seed, positives, negatives, 0.5)
    }

    pub fn from_scores_at(
        task: &str,
        profile: ProfileName,
        seed: u64,
        positives: &[f64],
        negatives: &[f64],
        threshold: f64,
    ) -> Result<Self, EvalError> {
        let scored: Vec<(f64, bool)> = positives
            .iter()
            .map(|&s| (s, true))
            .chain(negatives.iter().map(|&s| (s, false)))
            .collect();
        let (precision, recall) = precision_recall(&scored, threshold)?;
        Ok(TaskResult {
            task: task.to_string(),
            profile,
            precision,
            recall,
            pr_auc: pr_auc(&scored)?,
            hits_at_10: hits_at_k(positives, negatives, 10),
            positives: positives.len(),
            negatives: negatives.len(),
            seed,
        })
    }

    fn metrics(&self) -> [f64; 4] {
        [self.precision, self.recall, self.pr_auc, self.hits_at_10]
    }

    pub const TSV_HEADER: &'static str =
        "task\tprofile\tprecision\trecall\tpr_auc\thits_at_10\tpositives\tnegatives\tseed";

    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.task,
            self.profile,
            self.precision,
            self.recall,
            self.pr_auc,
            self.hits_at_10,
            self.positives,
            self.negatives,
            self.seed
        )
    }
}

/// Parses a results file written with [`TaskResult::to_tsv`] lines, with
/// or without the header.
pub fn parse_results(text: &str) -> Result<Vec<TaskResult>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line == TaskResult::TSV_HEADER {
            continue;
        }
        let err = |msg: String| EvalError::Parse { line: i + 1, msg };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 9 {
            return Err(err(format!("{} fields, expected 9", f.len())));
        }
        fn num<T: FromStr>(s: &str, err: impl Fn(String) -> EvalError) -> Result<T, EvalError> {
            s.parse().map_err(|_| err(format!("bad number {s:?}")))
        }
        out.push(TaskResult {
            task: f[0].to_string(),
            profile: f[1]
                .parse()
                .map_err(|_| err(format!("bad profile {:?}", f[1])))?,
            precision: num(f[2], err)?,
            recall: num(f[3], err)?,
            pr_auc: num(f[4], err)?,
            hits_at_10: num(f[5], err)?,
            positives: num(f[6], err)?,
            negatives: num(f[7], err)?,
            seed: num(f[8], err)?,
        });
    }
    Ok(out)
}

/// Signed two-decimal delta, `-` when it rounds to zero.
fn delta(d: f64) -> String {
    let r = (d * 100.0).round() / 100.0;
    if r == 0.0 {
        "-".to_string()
    } else {
        format!("{r:+.2}")
    }
}

fn display_name(task: &str) -> String {
    let mut c = task.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Baseline and RDDL rows per task (in order of first appearance), RDDL
/// metrics followed by their delta in parentheses, and a final row with the
/// mean delta per metric.
pub fn report(results: &[TaskResult]) -> Result<String, EvalError> {
    let pairs = pair_up(results)?;
    let mut out = String::new();
    let width = pairs
        .iter()
        .map(|(t, _, _)| t.len())
        .max()
        .unwrap_or(4)
        .max("Average improvement".len());
    let _ = writeln!(
        out,
        "{:<width$}  {:<8}  {:<12}  {:<12}  {:<12}  {:<12}",
        "Task", "Ontology", "Precision", "Recall", "AUC", "Hits@10"
    );
    let mut sums = [0.0; 4];
    for (task, base, rddl) in &pairs {
        let name = display_name(task);
        let b = base.metrics();
        let r = rddl.metrics();
        let _ = write!(out, "{:<width$}  {:<8}", name, "baseline");
        for v in b {
            let _ = write!(out, "  {:<12}", format!("{v:.2}"));
        }
        out.push('\n');
        let _ = write!(out, "{:<width$}  {:<8}", name, "RDDL");
        for k in 0..4 {
            sums[k] += r[k] - b[k];
            let _ = write!(
                out,
                "  {:<12}",
                format!("{:.2}({})", r[k], delta(r[k] - b[k]))
            );
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<width$}  {:<8}", "Average improvement", "");
    for s in sums {
        let _ = write!(out, "  {:<12}", format!("{:.2}", s / pairs.len() as f64));
    }
    out.push('\n');
    Ok(out
        .lines()
        .map(str::trim_end)
        .collect::<Vec<_>>()
        .join("\n")
        + "\n")
}

/// The same comparison as tab-separated values.
pub fn report_tsv(results: &[TaskResult]) -> Result<String, EvalError> {
    let pairs = pair_up(results)?;
    let mut out = String::from(
        "task\tbaseline_precision\tbaseline_recall\tbaseline_pr_auc\tbaseline_hits_at_10\t\
         rddl_precision\trddl_recall\trddl_pr_auc\trddl_hits_at_10\t\
         delta_precision\tdelta_recall\tdelta_pr_auc\tdelta_hits_at_10\n",
    );
    for (task, base, rddl) in &pairs {
        let (b, r) = (base.metrics(), rddl.metrics());
        let cols: Vec<String> = b
            .iter()
            .chain(&r)
            .map(f64::to_string)
            .chain((0..4).map(|k| (r[k] - b[k]).to_string()))
            .collect();
        let _ = writeln!(out, "{task}\t{}", cols.join("\t"));
    }
    Ok(out)
}

/// Mean RDDL minus baseline delta per metric.
pub fn mean_improvement(results: &[TaskResult]) -> Result<[f64; 4], EvalError> {
    let pairs = pair_up(results)?;
    let mut sums = [0.0; 4];
    for (_, b, r) in &pairs {
        let (b, r) = (b.metrics(), r.metrics());
        for k in 0..4 {
            sums[k] += r[k] - b[k];
        }
    }
    Ok(sums.map(|s| s / pairs.len().max(1) as f64))
}

fn pair_up(results: &[TaskResult]) -> Result<Vec<(String, &TaskResult, &TaskResult)>, EvalError> {
    let mut tasks: Vec<&str> = Vec::new();
    for r in results {
        if !tasks.contains(&r.task.as_str()) {
            tasks.push(&r.task);
        }
    }
    tasks
        .into_iter()
        .map(|t| {
            let find = |p| results.iter().find(|r| r.task == t && r.profile == p);
            match (find(ProfileName::Baseline), find(ProfileName::Rddl)) {
                (Some(b), Some(r)) => Ok((t.to_string(), b, r)),
                _ => Err(EvalError::Unpaired(t.to_string())),
            }
        })
        .collect()
}
