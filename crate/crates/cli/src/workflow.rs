use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use chrono::{DateTime, Duration, Utc};
use clap::Subcommand;
use csanno::agreement::{parse_ratings, render_disagreements, render_table};
use csanno::crowd::parse_gold_pool;
use csanno::platform::{hash_secret, Event, HashCost, Settings, Store};
use csanno::workflow::{
    batch_disagreements, progress_report, ProgressScope, Role, User, WorkSession,
};
use rand::Rng;

#[derive(Subcommand)]
pub enum Cmd {
    /// Register a user. The secret is read from an environment variable.
    AddUser {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        id: String,
        /// super-user, lead-annotator or annotator
        #[arg(long)]
        role: String,
        #[arg(long)]
        dialect: Option<String>,
        #[arg(long, default_value = "CSANNO_SECRET")]
        secret_env: String,
    },
    /// Create a batch and distribute its units over the dialect's annotators.
    Assign {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        batch: String,
        /// Period label such as 2026-W42.
        #[arg(long)]
        period: String,
        #[arg(long)]
        dialect: String,
        /// File with one unit id per line; defaults to every unit of the
        /// dialect not yet in a batch.
        #[arg(long)]
        units: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the quality gates on a batch and print the agreement report.
    Review {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        batch: String,
    },
    /// Annotation progress over a period.
    Report {
        #[arg(long)]
        store: PathBuf,
        /// Limit to one annotator.
        #[arg(long)]
        annotator: Option<String>,
        /// Period start (RFC 3339); defaults to seven days before --to.
        #[arg(long)]
        from: Option<DateTime<Utc>>,
        /// Period end (RFC 3339); defaults to now.
        #[arg(long)]
        to: Option<DateTime<Utc>>,
    },
    /// Grade a submitted task.
    Grade {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        task: String,
        #[arg(long)]
        grade: u8,
        #[arg(long)]
        comment: Option<String>,
    },
    /// Move a task to another annotator.
    Reassign {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        task: String,
        #[arg(long)]
        to: String,
    },
    /// Record an adjudicated version: CS tags from a table override one
    /// annotator's work on the listed units.
    Adjudicate {
        #[arg(long)]
        store: PathBuf,
        /// `unit_id<TAB>token_index<TAB>surface<TAB>cs` table.
        #[arg(long = "in")]
        input: PathBuf,
        /// Annotator whose POS and typo tags are kept.
        #[arg(long)]
        base: String,
    },
    /// Replace the crowd gold pool.
    Gold {
        #[arg(long)]
        store: PathBuf,
        /// `text<TAB>target<TAB>tag` lines.
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Append work sessions, one JSON object per line.
    Sessions {
        #[arg(long)]
        store: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn open(store: &Path) -> Result<Store> {
    Store::open(store).with_context(|| format!("opening store {}", store.display()))
}

pub fn run(cmd: Cmd) -> Result<()> {
    let now = Utc::now();
    match cmd {
        Cmd::AddUser {
            store,
            id,
            role,
            dialect,
            secret_env,
        } => {
            let role: Role = role.parse()?;
            let secret = std::env::var(&secret_env)
                .map_err(|_| anyhow!("set the secret in ${secret_env}"))?;
            if secret.len() < 8 {
                bail!("secrets must have at least 8 characters");
            }
            let credential = hash_secret(&secret, HashCost::default())?;
            let user = User {
                credentials_ref: format!("cred:{id}"),
                id,
                role,
                dialect,
            };
            open(&store)?.commit(Event::RegisterUser { user, credential }, now)?;
        }
        Cmd::Assign {
            store,
            batch,
            period,
            dialect,
            units,
            seed,
        } => {
            let mut s = open(&store)?;
            let settings = Settings::load(&store)?;
            let unit_ids = match units {
                Some(p) => crate::read(&p)?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(String::from)
                    .collect(),
                None => {
                    let p = s.state();
                    let taken: BTreeSet<&String> =
                        p.tasks.values().flat_map(|t| &t.unit_ids).collect();
                    p.unit_order
                        .iter()
                        .filter(|u| p.units[*u].dialect == dialect && !taken.contains(u))
                        .cloned()
                        .collect::<Vec<_>>()
                }
            };
            let seed = seed.unwrap_or_else(|| rand::thread_rng().gen());
            s.commit(
                Event::CreateBatch {
                    batch_id: batch.clone(),
                    period,
                    dialect,
                    unit_ids,
                    seed,
                    policy: settings.qc(),
                },
                now,
            )?;
            let b = &s.state().batches[&batch];
            println!(
                "batch {batch}: {} tasks, {} shared units, seed {seed}",
                b.task_ids.len(),
                b.manifest.len()
            );
            for id in &b.task_ids {
                let t = &s.state().tasks[id];
                println!("{id}\t{}\t{} units", t.annotator, t.unit_ids.len());
            }
        }
        Cmd::Review { store, batch } => {
            let mut s = open(&store)?;
            let settings = Settings::load(&store)?;
            s.commit(
                Event::ReviewBatch {
                    batch_id: batch.clone(),
                    policy: settings.qc(),
                },
                now,
            )?;
            let p = s.state();
            let b = &p.batches[&batch];
            let outcome = b.outcome.as_ref().expect("set by review");
            println!("batch {batch}: {:?}", outcome.decision);
            if !outcome.guideline_flags.is_empty() {
                let flags: Vec<String> = outcome
                    .guideline_flags
                    .iter()
                    .map(|t| t.to_string())
                    .collect();
                println!("tags below the per-tag threshold: {}", flags.join(", "));
            }
            if let Some(r) = &b.report {
                print!("{}", render_table(r));
                print!(
                    "{}",
                    render_disagreements(&batch_disagreements(b, &p.tasks, &p.units)?)
                );
            }
        }
        Cmd::Report {
            store,
            annotator,
            from,
            to,
        } => {
            let s = open(&store)?;
            let to = to.unwrap_or(now);
            let from = from.unwrap_or(to - Duration::days(7));
            let scope = annotator.map_or(ProgressScope::Global, ProgressScope::Annotator);
            let p = s.state();
            let stats = progress_report(&scope, from, to, &p.tasks, &p.units, &p.sessions);
            println!("{}", serde_json::to_string_pretty(&stats)?);
        }
        Cmd::Grade {
            store,
            task,
            grade,
            comment,
        } => {
            open(&store)?.commit(
                Event::GradeTask {
                    task_id: task,
                    grade,
                    comment,
                },
                now,
            )?;
        }
        Cmd::Reassign { store, task, to } => {
            open(&store)?.commit(Event::ReassignTask { task_id: task, to }, now)?;
        }
        Cmd::Adjudicate { store, input, base } => {
            let mut s = open(&store)?;
            let ratings = parse_ratings(&crate::read(&input)?)?;
            let mut by_unit: BTreeMap<String, Vec<_>> = BTreeMap::new();
            for r in ratings {
                by_unit.entry(r.unit_id.clone()).or_default().push(r);
            }
            for (uid, rows) in by_unit {
                let work = s
                    .state()
                    .tasks
                    .values()
                    .filter(|t| t.annotator == base)
                    .find_map(|t| t.work.get(&uid))
                    .ok_or_else(|| anyhow!("{base} has no work on unit {uid}"))?;
                let mut tokens = work.clone();
                for r in rows {
                    let slot = tokens
                        .get_mut(r.token_index)
                        .and_then(Option::as_mut)
                        .ok_or_else(|| {
                            anyhow!("unit {uid} has no annotated token {}", r.token_index)
                        })?;
                    slot.cs = Some(r.tag);
                }
                s.commit(
                    Event::Adjudicate {
                        unit_id: uid,
                        tokens,
                    },
                    now,
                )?;
            }
        }
        Cmd::Gold { store, input } => {
            let items = parse_gold_pool(&crate::read(&input)?)?;
            println!("{} gold items", items.len());
            open(&store)?.commit(Event::LoadGoldPool { items }, now)?;
        }
        Cmd::Sessions { store, input } => {
            let mut s = open(&store)?;
            for (i, line) in crate::read(&input)?.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let session: WorkSession =
                    serde_json::from_str(line).with_context(|| format!("line {}", i + 1))?;
                s.commit(Event::LogSession { session }, now)?;
            }
        }
    }
    Ok(())
}
