use serde::{Deserialize, Serialize};

use crate::locale::Locale;

use super::{FrrAtFar, Prf};

/// Ranks reported in identification tables.
pub const IR_RANKS: [usize; 4] = [1, 3, 5, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrolmentMetrics {
    pub postcode: Prf,
    pub name: Prf,
    pub dob: Prf,
    pub profile: Prf,
    pub mean_turns: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub theta: f64,
    pub far: f64,
    pub frr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyTermination {
    /// Threshold the early-terminating policy ran at.
    pub theta: f64,
    pub mean_turns: f64,
    /// Trials whose decision differed from the full run (0 when sound).
    pub decision_mismatches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationMetrics {
    pub n_genuine: usize,
    pub n_impostor: usize,
    pub eer: f64,
    pub far_target: f64,
    pub frr_at_far: FrrAtFar,
    pub det_interpolated: bool,
    /// Mean turns without early termination.
    pub mean_turns: f64,
    pub operating_point: Option<OperatingPoint>,
    pub early_termination: Option<EarlyTermination>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationMetrics {
    pub n_dialogues: usize,
    /// (r, IR@r) for each of [`IR_RANKS`].
    pub ir: Vec<(usize, f64)>,
    /// Fraction of dialogues whose true profile was ranked at all.
    pub retrieved: f64,
    pub mean_turns: f64,
}

impl IdentificationMetrics {
    pub fn ir_at(&self, r: usize) -> Option<f64> {
        self.ir.iter().find(|(k, _)| *k == r).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum TaskMetrics {
    Enrolment(EnrolmentMetrics),
    Verification(VerificationMetrics),
    Identification(IdentificationMetrics),
}

/// Aggregated metrics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub label: String,
    pub locale: Locale,
    pub metrics: TaskMetrics,
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn aligned(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut s = String::new();
        for (i, (c, w)) in cells.zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = w - c.chars().count();
            // first two columns are text
            if i < 2 {
                s.push_str(c);
                s.push_str(&" ".repeat(pad));
            } else {
                s.push_str(&" ".repeat(pad));
                s.push_str(c);
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(&mut header.iter().copied());
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&line(&mut row.iter().map(String::as_str)));
    }
    out
}

/// Human-readable tables, one per task present, rows in input order.
pub fn render_table(reports: &[MetricReport]) -> String {
    let mut enrol = Vec::new();
    let mut verify = Vec::new();
    let mut ident = Vec::new();
    for r in reports {
        let mut row = vec![r.label.clone(), r.locale.to_string()];
        match &r.metrics {
            TaskMetrics::Enrolment(m) => {
                for p in [&m.postcode, &m.name, &m.dob, &m.profile] {
                    row.extend([pct(p.precision), pct(p.recall), pct(p.f1)]);
                }
                row.push(format!("{:.2}", m.mean_turns));
                enrol.push(row);
            }
            TaskMetrics::Verification(m) => {
                row.push(pct(m.eer));
                let flag = if m.frr_at_far.resolution_limited { "*" } else { "" };
                row.push(format!("{}{flag}", pct(m.frr_at_far.frr)));
                row.push(format!("{:.2}", m.mean_turns));
                row.push(
                    m.early_termination
                        .map_or("-".into(), |e| format!("{:.2}", e.mean_turns)),
                );
                match m.operating_point {
                    Some(op) => row.extend([format!("{:.3}", op.theta), pct(op.far), pct(op.frr)]),
                    None => row.extend(["sweep".into(), "-".into(), "-".into()]),
                }
                verify.push(row);
            }
            TaskMetrics::Identification(m) => {
                row.extend(IR_RANKS.iter().map(|&k| m.ir_at(k).map_or("-".into(), pct)));
                row.push(pct(m.retrieved));
                row.push(format!("{:.2}", m.mean_turns));
                ident.push(row);
            }
        }
    }
    let mut out = String::new();
    if !enrol.is_empty() {
        out.push_str("Enrolment (P / R / F1 %)\n");
        out.push_str(&aligned(
            &[
                "run", "locale", "PC P", "PC R", "PC F1", "Name P", "Name R", "Name F1", "DoB P", "DoB R", "DoB F1",
                "Prof P", "Prof R", "Prof F1", "L",
            ],
            &enrol,
        ));
    }
    if !verify.is_empty() {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str("Verification (* FRR at the lowest observable FAR)\n");
        out.push_str(&aligned(
            &[
                "run",
                "locale",
                "EER%",
                "FRR%",
                "L",
                "L(ET)",
                "theta",
                "FAR%",
                "FRR%@theta",
            ],
            &verify,
        ));
    }
    if !ident.is_empty() {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str("Identification\n");
        let mut header = vec!["run".to_string(), "locale".into()];
        header.extend(IR_RANKS.iter().map(|k| format!("IR@{k}")));
        header.extend(["retrieved%".into(), "L".into()]);
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        out.push_str(&aligned(&header, &ident));
    }
    out
}

/// Long-format TSV: run, locale, task, metric, value.
pub fn render_tsv(reports: &[MetricReport]) -> String {
    let mut out = String::from("run\tlocale\ttask\tmetric\tvalue\n");
    for r in reports {
        let mut emit = |task: &str, metric: &str, value: String| {
            out.push_str(&format!("{}\t{}\t{task}\t{metric}\t{value}\n", r.label, r.locale));
        };
        match &r.metrics {
            TaskMetrics::Enrolment(m) => {
                for (item, p) in [
                    ("postcode", &m.postcode),
                    ("name", &m.name),
                    ("dob", &m.dob),
                    ("profile", &m.profile),
                ] {
                    emit("enrolment", &format!("{item}_precision"), p.precision.to_string());
                    emit("enrolment", &format!("{item}_recall"), p.recall.to_string());
                    emit("enrolment", &format!("{item}_f1"), p.f1.to_string());
                }
                emit("enrolment", "mean_turns", m.mean_turns.to_string());
            }
            TaskMetrics::Verification(m) => {
                emit("verification", "eer", m.eer.to_string());
                emit("verification", "far_target", m.far_target.to_string());
                emit("verification", "frr_at_far", m.frr_at_far.frr.to_string());
                emit("verification", "frr_at_far_theta", m.frr_at_far.theta.to_string());
                emit(
                    "verification",
                    "frr_at_far_resolution_limited",
                    m.frr_at_far.resolution_limited.to_string(),
                );
                emit("verification", "mean_turns", m.mean_turns.to_string());
                if let Some(e) = m.early_termination {
                    emit("verification", "et_theta", e.theta.to_string());
                    emit("verification", "et_mean_turns", e.mean_turns.to_string());
                    emit(
                        "verification",
                        "et_decision_mismatches",
                        e.decision_mismatches.to_string(),
                    );
                }
                if let Some(op) = m.operating_point {
                    emit("verification", "theta", op.theta.to_string());
                    emit("verification", "far", op.far.to_string());
                    emit("verification", "frr", op.frr.to_string());
                }
            }
            TaskMetrics::Identification(m) => {
                for (k, v) in &m.ir {
                    emit("identification", &format!("ir@{k}"), v.to_string());
                }
                emit("identification", "retrieved", m.retrieved.to_string());
                emit("identification", "mean_turns", m.mean_turns.to_string());
            }
        }
    }
    out
}
