//! Crowd quality control: qualifying quiz, hidden gold questions mixed into
//! job streams, and cumulative-accuracy enforcement.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pretag::tokenize;
use crate::tagschema::CsTag;

pub const QUIZ_LENGTH: usize = 20;

/// Crowd thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrowdPolicy {
    /// Correct answers needed out of [`QUIZ_LENGTH`].
    pub quiz_pass: usize,
    pub min_accuracy: f64,
    /// Gold items seen before accuracy can disqualify.
    pub gold_min_evidence: u32,
}

impl Default for CrowdPolicy {
    fn default() -> Self {
        CrowdPolicy {
            quiz_pass: 15,
            min_accuracy: 0.75,
            gold_min_evidence: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldItem {
    pub text: String,
    pub target: usize,
    pub tag: CsTag,
    #[serde(default)]
    pub provenance: String,
}

impl GoldItem {
    pub fn new(text: &str, target: usize, tag: CsTag) -> Result<Self> {
        if !tag.is_crowd_label() {
            return Err(Error::Parse(format!("{tag} is not in the crowd label set")));
        }
        let tokens = tokenize(text).len();
        if target >= tokens {
            return Err(Error::Parse(format!(
                "target {target} out of range for {tokens} tokens"
            )));
        }
        Ok(GoldItem {
            text: text.to_string(),
            target,
            tag,
            provenance: String::new(),
        })
    }
}

/// Parses a gold pool: one `text<TAB>target index<TAB>tag` record per line.
pub fn parse_gold_pool(input: &str) -> Result<Vec<GoldItem>> {
    let mut pool = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| Error::MalformedLine {
            line: i + 1,
            reason,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(bad(format!("expected 3 columns, got {}", cols.len())));
        }
        let target = cols[1]
            .parse::<usize>()
            .map_err(|e| bad(format!("bad target index: {e}")))?;
        let tag = cols[2].parse::<CsTag>().map_err(|e| bad(e.to_string()))?;
        let mut item = GoldItem::new(cols[0], target, tag).map_err(|e| bad(e.to_string()))?;
        item.provenance = format!("line {}", i + 1);
        pool.push(item);
    }
    Ok(pool)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Qualification {
    Unqualified,
    Qualified,
    Disqualified,
}

impl std::fmt::Display for Qualification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Qualification::Unqualified => "unqualified",
            Qualification::Qualified => "qualified",
            Qualification::Disqualified => "disqualified",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Worker {
    pub id: String,
    pub status: Qualification,
    pub gold_seen: u32,
    pub gold_correct: u32,
}

impl Worker {
    pub fn new(id: &str) -> Self {
        Worker {
            id: id.to_string(),
            status: Qualification::Unqualified,
            gold_seen: 0,
            gold_correct: 0,
        }
    }

    pub fn accuracy(&self) -> Option<f64> {
        (self.gold_seen > 0).then(|| f64::from(self.gold_correct) / f64::from(self.gold_seen))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizResult {
    pub passed: bool,
    pub correct: usize,
}

/// Grades a qualifying quiz and updates the worker's status.
pub fn grade_quiz(
    worker: &mut Worker,
    responses: &[CsTag],
    quiz: &[GoldItem],
    policy: &CrowdPolicy,
) -> Result<QuizResult> {
    if responses.len() != QUIZ_LENGTH || quiz.len() != QUIZ_LENGTH {
        let got = if quiz.len() != QUIZ_LENGTH {
            quiz.len()
        } else {
            responses.len()
        };
        return Err(Error::QuizLength {
            expected: QUIZ_LENGTH,
            got,
        });
    }
    if worker.status == Qualification::Disqualified {
        return Err(Error::State(format!(
            "worker {} is disqualified",
            worker.id
        )));
    }
    let correct = responses
        .iter()
        .zip(quiz)
        .filter(|(r, g)| **r == g.tag)
        .count();
    let passed = correct >= policy.quiz_pass;
    worker.status = if passed {
        Qualification::Qualified
    } else {
        Qualification::Unqualified
    };
    Ok(QuizResult { passed, correct })
}

/// Records an answer to a hidden gold item. The worker is disqualified as
/// soon as enough gold has been seen and accuracy drops below the minimum.
pub fn record_gold_result(
    worker: &Worker,
    item: &GoldItem,
    answer: CsTag,
    policy: &CrowdPolicy,
) -> Result<Worker> {
    match worker.status {
        Qualification::Disqualified => {
            return Err(Error::State(format!(
                "worker {} is disqualified",
                worker.id
            )))
        }
        Qualification::Unqualified => {
            return Err(Error::State(format!(
                "worker {} has not qualified",
                worker.id
            )))
        }
        Qualification::Qualified => {}
    }
    let mut next = worker.clone();
    next.gold_seen += 1;
    if answer == item.tag {
        next.gold_correct += 1;
    }
    if next.gold_seen >= policy.gold_min_evidence
        && next.accuracy().is_some_and(|a| a < policy.min_accuracy)
    {
        next.status = Qualification::Disqualified;
    }
    Ok(next)
}

/// A token to label, as the worker sees it. Gold and work items look the same.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobPayload {
    pub job_id: String,
    pub text: String,
    pub target: usize,
    pub choices: Vec<CsTag>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkItem {
    pub id: String,
    pub text: String,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum JobSource {
    Work { item: String },
    Gold { pool_index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobItem {
    pub payload: JobPayload,
    pub source: JobSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobStream {
    pub items: Vec<JobItem>,
    pub rate: f64,
    pub seed: u64,
}

impl JobStream {
    pub fn gold_count(&self) -> usize {
        self.items
            .iter()
            .filter(|i| matches!(i.source, JobSource::Gold { .. }))
            .count()
    }

    pub fn payloads(&self) -> Vec<JobPayload> {
        self.items.iter().map(|i| i.payload.clone()).collect()
    }
}

fn crowd_choices() -> Vec<CsTag> {
    CsTag::ALL
        .iter()
        .copied()
        .filter(|t| t.is_crowd_label())
        .collect()
}

/// Interleaves work items with hidden gold so that gold makes up `rate` of
/// the stream. Gold is drawn without replacement until the pool runs out,
/// then with replacement.
pub fn build_job_stream(
    work: &[WorkItem],
    pool: &[GoldItem],
    rate: f64,
    seed: u64,
) -> Result<JobStream> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!(
            "gold rate must lie in [0, 1), got {rate}"
        )));
    }
    if rate > 0.0 && pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gold = if rate > 0.0 {
        (rate * work.len() as f64 / (1.0 - rate)).round() as usize
    } else {
        0
    };

    let mut work_order: Vec<&WorkItem> = work.iter().collect();
    work_order.shuffle(&mut rng);

    let mut draws: Vec<usize> = (0..pool.len()).collect();
    draws.shuffle(&mut rng);
    while draws.len() < gold {
        draws.push(rng.gen_range(0..pool.len()));
    }
    draws.truncate(gold);

    let mut kinds = vec![false; work.len()];
    kinds.extend(std::iter::repeat_n(true, gold));
    kinds.shuffle(&mut rng);

    let choices = crowd_choices();
    let (mut w, mut g) = (work_order.into_iter(), draws.into_iter());
    let items = kinds
        .into_iter()
        .map(|is_gold| {
            let job_id = format!("{:016x}", rng.gen::<u64>());
            if is_gold {
                let idx = g.next().unwrap();
                let item = &pool[idx];
                JobItem {
                    payload: JobPayload {
                        job_id,
                        text: item.text.clone(),
                        target: item.target,
                        choices: choices.clone(),
                    },
                    source: JobSource::Gold { pool_index: idx },
                }
            } else {
                let item = w.next().unwrap();
                JobItem {
                    payload: JobPayload {
                        job_id,
                        text: item.text.clone(),
                        target: item.target,
                        choices: choices.clone(),
                    },
                    source: JobSource::Work {
                        item: item.id.clone(),
                    },
                }
            }
        })
        .collect();
    Ok(JobStream { items, rate, seed })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "tag")]
pub enum Aggregate {
    Resolved(CsTag),
    Unresolved,
}

/// Plurality vote per work item, ignoring disqualified workers' answers.
/// Ties are reported as unresolved.
pub fn aggregate_labels(
    answers: &[(String, String, CsTag)],
    workers: &BTreeMap<String, Worker>,
) -> BTreeMap<String, Aggregate> {
    let mut votes: BTreeMap<String, BTreeMap<CsTag, usize>> = BTreeMap::new();
    for (worker, item, tag) in answers {
        let ok = workers
            .get(worker)
            .is_some_and(|w| w.status != Qualification::Disqualified);
        if ok {
            *votes
                .entry(item.clone())
                .or_default()
                .entry(*tag)
                .or_default() += 1;
        }
    }
    votes
        .into_iter()
        .map(|(item, counts)| {
            let best = counts.values().copied().max().unwrap_or(0);
            let top: Vec<CsTag> = counts
                .iter()
                .filter(|(_, c)| **c == best)
                .map(|(t, _)| *t)
                .collect();
            let agg = if top.len() == 1 {
                Aggregate::Resolved(top[0])
            } else {
                Aggregate::Unresolved
            };
            (item, agg)
        })
        .collect()
}
