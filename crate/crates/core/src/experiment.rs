//! Experiment configuration, batch runs over a dataset and the results file.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dialogue::{
    run_enrolment, run_identification, run_verification, DialogueTranscript, IdMode, IdentifyParams, KbMode,
    RankedCandidate, TurnSelector, VerifyParams,
};
use crate::error::{Error, Result};
use crate::eval::{
    det_sweep, eer, enrolled_name, enrolment_metrics, frr_at_far, ir_at_r, mean, sample_impostors, DetCurve,
    EarlyTermination, IdentificationMetrics, MetricReport, OperatingPoint, TaskMetrics, TrialSet, VerificationMetrics,
    IR_RANKS,
};
use crate::fuzzy::{FuzzyConfig, ScorerModel};
use crate::io::write_atomic;
use crate::kb::KnowledgeBase;
use crate::locale::Locale;
use crate::nlu::{Nlu, NluMode};

pub const RESULTS_SCHEMA: &str = "evi-results";
pub const RESULTS_VERSION: u32 = 1;
pub const DEFAULT_FAR_TARGET: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Enrolment,
    Verification,
    Identification,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Enrolment => "e",
            Task::Verification => "v",
            Task::Identification => "i",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "e" | "enrol" | "enroll" | "enrolment" | "enrollment" => Ok(Task::Enrolment),
            "v" | "verify" | "verification" => Ok(Task::Verification),
            "i" | "identify" | "identification" => Ok(Task::Identification),
            _ => Err(Error::Config(format!("unknown task `{s}` (expected e, v or i)"))),
        }
    }
}

/// Verification threshold: a fixed decision point or a full DET sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theta {
    Fixed(f64),
    Sweep,
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theta::Fixed(t) => write!(f, "{t}"),
            Theta::Sweep => f.write_str("sweep"),
        }
    }
}

impl FromStr for Theta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("sweep") {
            return Ok(Theta::Sweep);
        }
        match s.parse::<f64>() {
            Ok(t) if (0.0..=1.0).contains(&t) => Ok(Theta::Fixed(t)),
            _ => Err(Error::Config(format!(
                "threshold `{s}` must be `sweep` or a number in [0, 1]"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: Task,
    pub locale: Locale,
    pub nlu_mode: NluMode,
    pub model: ScorerModel,
    pub cfg: FuzzyConfig,
    pub theta: Option<Theta>,
    pub kb_mode: KbMode,
    pub id_mode: Option<IdMode>,
    pub early_term: bool,
    pub selector: TurnSelector,
    pub seed: u64,
    pub far_target: f64,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub dataset_path: Option<String>,
    #[serde(default)]
    pub kb_path: Option<String>,
}

impl ExperimentConfig {
    /// Task defaults: verification uses min/max, identification infinity-one with alpha 0.5.
    pub fn new(task: Task, locale: Locale) -> Self {
        ExperimentConfig {
            task,
            locale,
            nlu_mode: NluMode::Seeking,
            model: ScorerModel::Fuzzy,
            cfg: match task {
                Task::Identification => FuzzyConfig::InfinityOne { alpha: 0.5 },
                _ => FuzzyConfig::Standard,
            },
            theta: match task {
                Task::Verification => Some(Theta::Sweep),
                _ => None,
            },
            kb_mode: KbMode::Normal,
            id_mode: (task == Task::Identification).then_some(IdMode::Scored),
            early_term: false,
            selector: TurnSelector::Multi,
            seed: 0,
            far_target: DEFAULT_FAR_TARGET,
            label: None,
            dataset_path: None,
            kb_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        self.cfg.validate()?;
        if !(self.far_target > 0.0 && self.far_target < 1.0) {
            return bad("FAR target must be in (0, 1)");
        }
        if let Some(Theta::Fixed(t)) = self.theta {
            if !(0.0..=1.0).contains(&t) {
                return bad("threshold must be in [0, 1]");
            }
        }
        if self.task != Task::Identification {
            if self.id_mode.is_some() {
                return bad("an identification mode only applies to the identification task");
            }
            if self.kb_mode == KbMode::Oracle {
                return bad("the KB oracle only applies to the identification task");
            }
        }
        if self.early_term && self.task != Task::Verification {
            return bad("early termination only applies to the verification task");
        }
        match self.task {
            Task::Enrolment if self.theta.is_some() => bad("enrolment takes no threshold"),
            Task::Verification if self.theta.is_none() => bad("verification needs a threshold (a number or `sweep`)"),
            Task::Identification if self.theta == Some(Theta::Sweep) => bad("identification needs a fixed threshold"),
            Task::Identification if self.id_mode.is_none() => bad("identification needs an identification mode"),
            _ => Ok(()),
        }
    }

    /// A short row label for report tables.
    pub fn display_label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        match self.task {
            Task::Enrolment => format!("{} {}", self.nlu_mode, self.selector),
            Task::Verification => {
                let et = if self.early_term { " et" } else { "" };
                format!("{} {} {}{et}", self.nlu_mode, self.model, self.cfg)
            }
            Task::Identification => {
                let id = self.id_mode.unwrap_or(IdMode::Scored);
                let oracle = if self.kb_mode == KbMode::Oracle {
                    " kb-oracle"
                } else {
                    ""
                };
                match id {
                    IdMode::None => format!("{} none{oracle}", self.nlu_mode),
                    _ => format!("{} {id} {} {}{oracle}", self.nlu_mode, self.model, self.cfg),
                }
            }
        }
    }

    fn verify_params(&self, theta: f64, early_term: bool) -> VerifyParams {
        VerifyParams {
            nlu_mode: self.nlu_mode,
            model: self.model,
            cfg: self.cfg,
            theta,
            early_term,
            selector: self.selector,
            seed: self.seed,
        }
    }

    fn identify_params(&self) -> IdentifyParams {
        IdentifyParams {
            nlu_mode: self.nlu_mode,
            model: self.model,
            cfg: self.cfg,
            theta: match self.theta {
                Some(Theta::Fixed(t)) => t,
                _ => 0.0,
            },
            kb_mode: self.kb_mode,
            id_mode: self.id_mode.unwrap_or(IdMode::Scored),
            selector: self.selector,
            seed: self.seed,
        }
    }
}

/// Per-dialogue (or per-trial) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum Record {
    Enrolment {
        dialogue_id: String,
        true_profile_id: String,
        postcode: Option<String>,
        name: Option<String>,
        dob: Option<NaiveDate>,
        /// Postcode, name and DOB correct.
        correct: [bool; 3],
        turns: [usize; 3],
    },
    Verification {
        dialogue_id: String,
        claimed_id: String,
        genuine: bool,
        score: f64,
        turns: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        early_term: Option<EarlyTermRecord>,
    },
    Identification {
        dialogue_id: String,
        true_profile_id: String,
        rank: Option<usize>,
        turns: usize,
        n_candidates: usize,
        /// Leading entries of the ranking.
        top: Vec<RankedCandidate>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyTermRecord {
    pub theta: f64,
    pub score: f64,
    pub turns: usize,
    pub accepted: bool,
    pub terminated: bool,
}

const TOP_KEPT: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub report: MetricReport,
    pub det: Option<DetCurve>,
    pub records: Vec<Record>,
}

fn check_inputs(cfg: &ExperimentConfig, dialogues: &[DialogueTranscript], kb: &KnowledgeBase, nlu: &Nlu) -> Result<()> {
    let mismatch = |dataset: Locale, kb: Locale| Error::LocaleMismatch {
        dataset: dataset.to_string(),
        kb: kb.to_string(),
    };
    if kb.locale() != cfg.locale {
        return Err(mismatch(cfg.locale, kb.locale()));
    }
    if nlu.locale() != cfg.locale {
        return Err(Error::Config(format!(
            "NLU resources are {}, experiment is {}",
            nlu.locale(),
            cfg.locale
        )));
    }
    for d in dialogues {
        if d.locale != kb.locale() {
            return Err(mismatch(d.locale, kb.locale()));
        }
        if kb.get(&d.true_profile_id).is_none() {
            return Err(Error::UnknownProfile(d.true_profile_id.clone()));
        }
    }
    if dialogues.is_empty() {
        return Err(Error::Config("the dataset has no dialogues".into()));
    }
    Ok(())
}

/// Runs one configured task over every dialogue.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    dialogues: &[DialogueTranscript],
    kb: &KnowledgeBase,
    nlu: &Nlu,
) -> Result<RunOutput> {
    cfg.validate()?;
    check_inputs(cfg, dialogues, kb, nlu)?;
    let (metrics, det, records) = match cfg.task {
        Task::Enrolment => run_enrol(cfg, dialogues, kb, nlu)?,
        Task::Verification => run_verify(cfg, dialogues, kb, nlu)?,
        Task::Identification => run_identify(cfg, dialogues, kb, nlu)?,
    };
    Ok(RunOutput {
        report: MetricReport {
            label: cfg.display_label(),
            locale: cfg.locale,
            metrics,
        },
        det,
        records,
    })
}

type TaskRun = (TaskMetrics, Option<DetCurve>, Vec<Record>);

fn run_enrol(
    cfg: &ExperimentConfig,
    dialogues: &[DialogueTranscript],
    kb: &KnowledgeBase,
    nlu: &Nlu,
) -> Result<TaskRun> {
    let runs: Vec<_> = dialogues
        .par_iter()
        .map(|d| {
            let truth = kb.get(&d.true_profile_id).expect("checked");
            (run_enrolment(d, nlu, cfg.nlu_mode, cfg.selector), truth)
        })
        .collect();
    let metrics = enrolment_metrics(&runs)?;
    let records = runs
        .iter()
        .zip(dialogues)
        .map(|((o, truth), d)| {
            let name = enrolled_name(o);
            Record::Enrolment {
                dialogue_id: d.dialogue_id.clone(),
                true_profile_id: d.true_profile_id.clone(),
                correct: [
                    o.postcode.as_deref() == Some(truth.postcode.as_str()),
                    name.as_deref() == Some(truth.name_full.as_str()),
                    o.dob == Some(truth.dob),
                ],
                postcode: o.postcode.clone(),
                name,
                dob: o.dob,
                turns: o.turns,
            }
        })
        .collect();
    Ok((TaskMetrics::Enrolment(metrics), None, records))
}

fn run_verify(
    cfg: &ExperimentConfig,
    dialogues: &[DialogueTranscript],
    kb: &KnowledgeBase,
    nlu: &Nlu,
) -> Result<TaskRun> {
    let trials = sample_impostors(dialogues, kb, cfg.seed)?;
    let fixed = match cfg.theta {
        Some(Theta::Fixed(t)) => Some(t),
        _ => None,
    };
    // without early termination the score does not depend on the threshold
    let full_params = cfg.verify_params(fixed.unwrap_or(0.5), false);
    let full: Vec<_> = trials
        .par_iter()
        .map(|t| {
            run_verification(
                &dialogues[t.dialogue],
                kb.get(&t.claimed_id).expect("sampled"),
                nlu,
                &full_params,
            )
        })
        .collect();
    let split = |genuine: bool| -> Vec<f64> {
        trials
            .iter()
            .zip(&full)
            .filter(|(t, _)| t.genuine == genuine)
            .map(|(_, o)| o.score)
            .collect()
    };
    let set = TrialSet::new(split(true), split(false))?;
    let curve = det_sweep(&set)?;
    let at_far = frr_at_far(&curve, cfg.far_target)?;
    let operating_point = fixed.map(|theta| {
        let rate =
            |xs: &[f64], accept: bool| xs.iter().filter(|&&s| (s >= theta) == accept).count() as f64 / xs.len() as f64;
        OperatingPoint {
            theta,
            far: rate(&set.impostor, true),
            frr: rate(&set.genuine, false),
        }
    });

    let mut et_records = vec![None; trials.len()];
    let early_termination = if cfg.early_term {
        let theta = fixed.unwrap_or(at_far.theta);
        let params = cfg.verify_params(theta, true);
        let et: Vec<_> = trials
            .par_iter()
            .map(|t| {
                run_verification(
                    &dialogues[t.dialogue],
                    kb.get(&t.claimed_id).expect("sampled"),
                    nlu,
                    &params,
                )
            })
            .collect();
        let mismatches = et
            .iter()
            .zip(&full)
            .filter(|(e, f)| e.accepted != (f.score >= theta))
            .count();
        for (slot, o) in et_records.iter_mut().zip(&et) {
            *slot = Some(EarlyTermRecord {
                theta,
                score: o.score,
                turns: o.turns,
                accepted: o.accepted,
                terminated: o.early_terminated,
            });
        }
        Some(EarlyTermination {
            theta,
            mean_turns: mean(et.iter().map(|o| o.turns as f64)),
            decision_mismatches: mismatches,
        })
    } else {
        None
    };

    let metrics = VerificationMetrics {
        n_genuine: set.genuine.len(),
        n_impostor: set.impostor.len(),
        eer: eer(&curve),
        far_target: cfg.far_target,
        frr_at_far: at_far,
        det_interpolated: curve.interpolated,
        mean_turns: mean(full.iter().map(|o| o.turns as f64)),
        operating_point,
        early_termination,
    };
    let records = trials
        .iter()
        .zip(&full)
        .zip(et_records)
        .map(|((t, o), et)| Record::Verification {
            dialogue_id: dialogues[t.dialogue].dialogue_id.clone(),
            claimed_id: t.claimed_id.clone(),
            genuine: t.genuine,
            score: o.score,
            turns: o.turns,
            early_term: et,
        })
        .collect();
    Ok((TaskMetrics::Verification(metrics), Some(curve), records))
}

fn run_identify(
    cfg: &ExperimentConfig,
    dialogues: &[DialogueTranscript],
    kb: &KnowledgeBase,
    nlu: &Nlu,
) -> Result<TaskRun> {
    let params = cfg.identify_params();
    let outcomes = dialogues
        .par_iter()
        .map(|d| run_identification(d, kb, nlu, &params))
        .collect::<Result<Vec<_>>>()?;
    let ranks: Vec<Option<usize>> = outcomes
        .iter()
        .zip(dialogues)
        .map(|(o, d)| o.rank_of(&d.true_profile_id))
        .collect();
    let ir = IR_RANKS
        .iter()
        .map(|&r| ir_at_r(&ranks, r).map(|v| (r, v)))
        .collect::<Result<Vec<_>>>()?;
    let metrics = IdentificationMetrics {
        n_dialogues: dialogues.len(),
        ir,
        retrieved: ranks.iter().filter(|r| r.is_some()).count() as f64 / ranks.len() as f64,
        mean_turns: mean(outcomes.iter().map(|o| o.turns as f64)),
    };
    let records = outcomes
        .into_iter()
        .zip(dialogues)
        .zip(&ranks)
        .map(|((o, d), rank)| Record::Identification {
            dialogue_id: d.dialogue_id.clone(),
            true_profile_id: d.true_profile_id.clone(),
            rank: *rank,
            turns: o.turns,
            n_candidates: o.ranking.len(),
            top: o.ranking.into_iter().take(TOP_KEPT).collect(),
        })
        .collect();
    Ok((TaskMetrics::Identification(metrics), None, records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsHeader {
    pub schema: String,
    pub version: u32,
    pub config: ExperimentConfig,
    pub report: MetricReport,
    #[serde(default)]
    pub det: Option<DetCurve>,
}

/// A results file: a header line followed by one record per line.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultsFile {
    pub header: ResultsHeader,
    pub records: Vec<Record>,
}

impl ResultsFile {
    pub fn new(config: ExperimentConfig, run: RunOutput) -> Self {
        ResultsFile {
            header: ResultsHeader {
                schema: RESULTS_SCHEMA.into(),
                version: RESULTS_VERSION,
                config,
                report: run.report,
                det: run.det,
            },
            records: run.records,
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_jsonl().as_bytes())
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines
            .next()
            .ok_or_else(|| Error::parse(origin, 1, "empty results file"))?;
        let probe: serde_json::Value =
            serde_json::from_str(first).map_err(|e| Error::parse(origin, 1, e.to_string()))?;
        let schema = probe.get("schema").and_then(|v| v.as_str());
        let version = probe.get("version").and_then(|v| v.as_u64());
        if schema != Some(RESULTS_SCHEMA) || version != Some(u64::from(RESULTS_VERSION)) {
            return Err(Error::parse(
                origin,
                1,
                format!(
                    "unsupported results schema {:?} version {:?} (expected {RESULTS_SCHEMA} version {RESULTS_VERSION})",
                    schema.unwrap_or("?"),
                    version
                ),
            ));
        }
        let header: ResultsHeader =
            serde_json::from_value(probe).map_err(|e| Error::parse(origin, 1, e.to_string()))?;
        let records = lines
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(origin, i + 1, e.to_string())))
            .collect::<Result<Vec<Record>>>()?;
        Ok(ResultsFile { header, records })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{generate_kb, GenerationSpec};
    use crate::locale::LocaleResources;
    use crate::sim::{simulate, SimSpec};

    fn setup(n: usize) -> (KnowledgeBase, Vec<DialogueTranscript>, Nlu) {
        let kb = generate_kb(&GenerationSpec::for_locale(Locale::EnGb, 300, 60, 5).unwrap()).unwrap();
        let res = LocaleResources::builtin(Locale::EnGb);
        let ds = simulate(
            &kb,
            &res,
            &SimSpec {
                n_dialogues: n,
                seed: 2,
                ..Default::default()
            },
        )
        .unwrap();
        (kb, ds, Nlu::new(res))
    }

    #[test]
    fn config_validation() {
        let v = ExperimentConfig::new(Task::Verification, Locale::EnGb);
        assert!(v.validate().is_ok());
        assert!(ExperimentConfig {
            theta: None,
            ..v.clone()
        }
        .validate()
        .is_err());
        assert!(ExperimentConfig {
            id_mode: Some(IdMode::Oracle),
            ..v.clone()
        }
        .validate()
        .is_err());
        assert!(ExperimentConfig {
            kb_mode: KbMode::Oracle,
            ..v.clone()
        }
        .validate()
        .is_err());
        let i = ExperimentConfig::new(Task::Identification, Locale::EnGb);
        assert!(i.validate().is_ok());
        assert!(ExperimentConfig {
            early_term: true,
            ..i.clone()
        }
        .validate()
        .is_err());
        assert!(ExperimentConfig {
            theta: Some(Theta::Sweep),
            ..i
        }
        .validate()
        .is_err());
        let e = ExperimentConfig::new(Task::Enrolment, Locale::EnGb);
        assert!(ExperimentConfig {
            theta: Some(Theta::Fixed(0.5)),
            ..e
        }
        .validate()
        .is_err());
        assert_eq!("sweep".parse::<Theta>().unwrap(), Theta::Sweep);
        assert!("1.5".parse::<Theta>().is_err());
        assert_eq!("I".parse::<Task>().unwrap(), Task::Identification);
    }

    #[test]
    fn verification_run_with_early_termination() {
        let (kb, ds, nlu) = setup(80);
        let cfg = ExperimentConfig {
            early_term: true,
            ..ExperimentConfig::new(Task::Verification, Locale::EnGb)
        };
        let out = run_experiment(&cfg, &ds, &kb, &nlu).unwrap();
        let TaskMetrics::Verification(m) = &out.report.metrics else {
            panic!()
        };
        assert_eq!((m.n_genuine, m.n_impostor), (80, 80));
        let et = m.early_termination.unwrap();
        assert_eq!(et.decision_mismatches, 0);
        assert!(et.mean_turns <= m.mean_turns);
        assert!(m.frr_at_far.resolution_limited);
        assert_eq!(out.records.len(), 160);
        assert_eq!(out, run_experiment(&cfg, &ds, &kb, &nlu).unwrap());
    }

    #[test]
    fn results_file_round_trip() {
        let (kb, ds, nlu) = setup(20);
        let dir = tempfile::tempdir().unwrap();
        for task in [Task::Enrolment, Task::Verification, Task::Identification] {
            let cfg = ExperimentConfig::new(task, Locale::EnGb);
            let out = run_experiment(&cfg, &ds, &kb, &nlu).unwrap();
            let file = ResultsFile::new(cfg, out);
            let path = dir.path().join(format!("{task}.jsonl"));
            file.save(&path).unwrap();
            assert_eq!(ResultsFile::load(&path).unwrap(), file);
        }
        let bad = r#"{"schema":"evi-results","version":99}"#;
        assert!(matches!(
            ResultsFile::parse(bad, Path::new("r")),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn oracle_identification_is_perfect() {
        let (kb, ds, nlu) = setup(40);
        let cfg = ExperimentConfig {
            kb_mode: KbMode::Oracle,
            id_mode: Some(IdMode::Oracle),
            ..ExperimentConfig::new(Task::Identification, Locale::EnGb)
        };
        let out = run_experiment(&cfg, &ds, &kb, &nlu).unwrap();
        let TaskMetrics::Identification(m) = out.report.metrics else {
            panic!()
        };
        assert_eq!(m.ir_at(1), Some(1.0));
        assert_eq!(m.mean_turns, 1.0);
    }

    #[test]
    fn mismatched_inputs_are_data_errors() {
        let (kb, ds, nlu) = setup(5);
        let fr = ExperimentConfig::new(Task::Enrolment, Locale::FrFr);
        assert!(run_experiment(&fr, &ds, &kb, &nlu).is_err());
        let mut stray = ds.clone();
        stray[0].true_profile_id = "missing".into();
        let e = ExperimentConfig::new(Task::Enrolment, Locale::EnGb);
        let err = run_experiment(&e, &stray, &kb, &nlu).unwrap_err();
        assert!(err.is_data_error(), "{err}");
    }
}
