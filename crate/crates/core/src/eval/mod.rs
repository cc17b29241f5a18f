//! Metrics: P/R/F1, impostor sampling, DET sweeps, EER, FRR at a FAR target, IR@r.

mod report;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dialogue::{DialogueTranscript, EnrolOutcome};
use crate::error::{Error, Result};
use crate::kb::{KnowledgeBase, Profile};
use crate::rng::keyed_rng;

pub use report::{
    render_table, render_tsv, EarlyTermination, EnrolmentMetrics, IdentificationMetrics, MetricReport, OperatingPoint,
    TaskMetrics, VerificationMetrics, IR_RANKS,
};

/// Precision, recall and F1 with the counts they came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub extracted: usize,
    pub correct: usize,
    pub total: usize,
    /// Nothing was extracted, so precision is reported as 0.
    pub precision_undefined: bool,
}

impl Prf {
    pub fn from_counts(extracted: usize, correct: usize, total: usize) -> Result<Prf> {
        if total == 0 {
            return Err(Error::Contract("P/R/F1 over an empty outcome list".into()));
        }
        if correct > extracted || extracted > total {
            return Err(Error::Contract(format!(
                "inconsistent counts: {correct} correct, {extracted} extracted, {total} total"
            )));
        }
        let precision = if extracted == 0 {
            0.0
        } else {
            correct as f64 / extracted as f64
        };
        let recall = correct as f64 / total as f64;
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Ok(Prf {
            precision,
            recall,
            f1,
            extracted,
            correct,
            total,
            precision_undefined: extracted == 0,
        })
    }
}

/// P/R/F1 over (extracted, truth) pairs; correct means equal.
pub fn prf<T: PartialEq>(outcomes: &[(Option<T>, T)]) -> Result<Prf> {
    let extracted = outcomes.iter().filter(|(e, _)| e.is_some()).count();
    let correct = outcomes.iter().filter(|(e, t)| e.as_ref() == Some(t)).count();
    Prf::from_counts(extracted, correct, outcomes.len())
}

/// The canonical string enrolment compares against `name_full`.
pub fn enrolled_name(outcome: &EnrolOutcome) -> Option<String> {
    let n = outcome.name.as_ref()?;
    n.full_or_join().or_else(|| n.first.clone()).or_else(|| n.last.clone())
}

/// Per-item and profile-level P/R/F1 plus mean turns.
pub fn enrolment_metrics(runs: &[(EnrolOutcome, &Profile)]) -> Result<EnrolmentMetrics> {
    let postcode: Vec<_> = runs
        .iter()
        .map(|(o, p)| (o.postcode.clone(), p.postcode.clone()))
        .collect();
    let name: Vec<_> = runs
        .iter()
        .map(|(o, p)| (enrolled_name(o), p.name_full.clone()))
        .collect();
    let dob: Vec<_> = runs.iter().map(|(o, p)| (o.dob, p.dob)).collect();
    let extracted = runs.iter().filter(|(o, _)| o.is_complete()).count();
    let correct = (0..runs.len())
        .filter(|&i| {
            postcode[i].0 == Some(postcode[i].1.clone())
                && name[i].0 == Some(name[i].1.clone())
                && dob[i].0 == Some(dob[i].1)
        })
        .count();
    Ok(EnrolmentMetrics {
        postcode: prf(&postcode)?,
        name: prf(&name)?,
        dob: prf(&dob)?,
        profile: Prf::from_counts(extracted, correct, runs.len())?,
        mean_turns: mean(runs.iter().map(|(o, _)| o.turns_consumed() as f64)),
    })
}

pub(crate) fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// One verification trial: a dialogue paired with a claimed profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub dialogue: usize,
    pub claimed_id: String,
    pub genuine: bool,
}

/// Pairs every dialogue with its true profile and with one uniformly drawn other profile.
pub fn sample_impostors(dialogues: &[DialogueTranscript], kb: &KnowledgeBase, seed: u64) -> Result<Vec<Trial>> {
    if kb.len() < 2 {
        return Err(Error::Contract("impostor sampling needs at least two profiles".into()));
    }
    let mut out = Vec::with_capacity(2 * dialogues.len());
    for (i, d) in dialogues.iter().enumerate() {
        let truth = kb
            .profiles()
            .iter()
            .position(|p| p.profile_id == d.true_profile_id)
            .ok_or_else(|| Error::UnknownProfile(d.true_profile_id.clone()))?;
        let mut rng = keyed_rng(seed, &["impostor", &d.dialogue_id]);
        let mut j = rng.gen_range(0..kb.len() - 1);
        if j >= truth {
            j += 1;
        }
        out.push(Trial {
            dialogue: i,
            claimed_id: d.true_profile_id.clone(),
            genuine: true,
        });
        out.push(Trial {
            dialogue: i,
            claimed_id: kb.profiles()[j].profile_id.clone(),
            genuine: false,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrialSet {
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
}

impl TrialSet {
    pub fn new(genuine: Vec<f64>, impostor: Vec<f64>) -> Result<TrialSet> {
        let t = TrialSet { genuine, impostor };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.genuine.is_empty() || self.impostor.is_empty() {
            return Err(Error::Contract("trial set needs genuine and impostor scores".into()));
        }
        if let Some(s) = self
            .genuine
            .iter()
            .chain(&self.impostor)
            .find(|s| !(0.0..=1.0).contains(*s))
        {
            return Err(Error::Contract(format!("score {s} outside [0, 1]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetPoint {
    pub theta: f64,
    pub far: f64,
    pub frr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetCurve {
    /// Ascending in threshold.
    pub points: Vec<DetPoint>,
    pub n_genuine: usize,
    pub n_impostor: usize,
    /// At most two distinct scores were observed, so the curve is a single
    /// operating point joined to the corners by straight segments.
    pub interpolated: bool,
}

/// Threshold just above every score.
pub const THETA_MAX: f64 = 1.0 + 1e-9;

/// FAR and FRR at every observed score plus 0 and just above 1.
pub fn det_sweep(trials: &TrialSet) -> Result<DetCurve> {
    trials.validate()?;
    let mut gen = trials.genuine.clone();
    let mut imp = trials.impostor.clone();
    gen.sort_by(f64::total_cmp);
    imp.sort_by(f64::total_cmp);
    let mut observed: Vec<f64> = gen.iter().chain(&imp).copied().collect();
    observed.sort_by(f64::total_cmp);
    observed.dedup();
    let distinct = observed.len();
    let mut thetas = observed;
    thetas.extend([0.0, THETA_MAX]);
    thetas.sort_by(f64::total_cmp);
    thetas.dedup();
    let points = thetas
        .into_iter()
        .map(|theta| {
            let below_imp = imp.partition_point(|&s| s < theta);
            let below_gen = gen.partition_point(|&s| s < theta);
            DetPoint {
                theta,
                far: (imp.len() - below_imp) as f64 / imp.len() as f64,
                frr: below_gen as f64 / gen.len() as f64,
            }
        })
        .collect();
    Ok(DetCurve {
        points,
        n_genuine: gen.len(),
        n_impostor: imp.len(),
        interpolated: distinct <= 2,
    })
}

impl DetCurve {
    /// Three-column TSV: theta, FAR, FRR.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("theta\tfar\tfrr\n");
        for p in &self.points {
            out.push_str(&format!("{}\t{}\t{}\n", p.theta, p.far, p.frr));
        }
        out
    }
}

/// Rate where FAR = FRR, interpolating linearly between sweep points.
pub fn eer(curve: &DetCurve) -> f64 {
    let mut prev: Option<&DetPoint> = None;
    for p in &curve.points {
        let d = p.far - p.frr;
        if d <= 0.0 {
            return match prev {
                _ if d == 0.0 => p.far,
                None => (p.far + p.frr) / 2.0,
                Some(q) => {
                    let dq = q.far - q.frr;
                    let t = dq / (dq - d);
                    q.far + t * (p.far - q.far)
                }
            };
        }
        prev = Some(p);
    }
    // FAR exceeds FRR everywhere, which only happens without the top threshold
    curve.points.last().map_or(0.0, |p| (p.far + p.frr) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrrAtFar {
    pub frr: f64,
    /// FAR actually achieved at `theta`.
    pub far: f64,
    pub theta: f64,
    /// Fewer impostor trials than 1/target: the value is FRR at the lowest observable FAR.
    pub resolution_limited: bool,
}

/// FRR at the lowest threshold whose FAR does not exceed `far_target`.
pub fn frr_at_far(curve: &DetCurve, far_target: f64) -> Result<FrrAtFar> {
    if !(far_target > 0.0 && far_target < 1.0) {
        return Err(Error::Contract(format!("FAR target {far_target} outside (0, 1)")));
    }
    let p = curve
        .points
        .iter()
        .find(|p| p.far <= far_target)
        .or(curve.points.last())
        .ok_or_else(|| Error::Contract("empty DET curve".into()))?;
    Ok(FrrAtFar {
        frr: p.frr,
        far: p.far,
        theta: p.theta,
        resolution_limited: (curve.n_impostor as f64) * far_target < 1.0,
    })
}

/// Fraction of runs whose true profile is ranked at `r` or better; ranks are 1-based.
pub fn ir_at_r(ranks: &[Option<usize>], r: usize) -> Result<f64> {
    if r == 0 {
        return Err(Error::Contract("IR@r needs r >= 1".into()));
    }
    if ranks.is_empty() {
        return Ok(0.0);
    }
    Ok(ranks.iter().filter(|k| k.is_some_and(|k| k <= r)).count() as f64 / ranks.len() as f64)
}
