use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use chrono::Utc;
use clap::Subcommand;
use csanno::corpusstore::{
    corpus_stats, export_xml, import_units, import_xml, render_stats, Selection,
};
use csanno::platform::{Event, Store};
use csanno::pretag::auto_tag;
use csanno::tagschema::{DocumentMeta, Genre};

#[derive(Subcommand)]
pub enum Cmd {
    /// Clean, tokenize and pre-tag units, then add them to the store.
    Import {
        #[arg(long)]
        store: PathBuf,
        /// Units as `id<TAB>genre<TAB>dialect<TAB>text`.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        gazetteer: Option<PathBuf>,
        #[arg(long)]
        norm: Option<PathBuf>,
        /// Sets the corpus id; required on first import.
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        source: Option<String>,
        /// Repeat for each language of the corpus.
        #[arg(long = "language")]
        languages: Vec<String>,
        #[arg(long)]
        genre: Option<Genre>,
    },
    /// Write the selected version of every unit as XML.
    Export {
        #[arg(long)]
        store: PathBuf,
        /// lead-accepted, adjudicated or annotator:<id>
        #[arg(long, default_value = "lead-accepted")]
        selection: Selection,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Token, type and tag counts of a store or an exported file.
    Stats {
        #[arg(long, conflicts_with = "xml", required_unless_present = "xml")]
        store: Option<PathBuf>,
        #[arg(long)]
        xml: Option<PathBuf>,
        #[arg(long, default_value = "lead-accepted")]
        selection: Selection,
    },
}

pub fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Import {
            store,
            input,
            gazetteer,
            norm,
            id,
            source,
            languages,
            genre,
        } => {
            let table = crate::load_table(norm.as_deref())?;
            let gaz = crate::load_gazetteer(gazetteer.as_deref(), &table)?;
            let units = import_units(&crate::read(&input)?, &table)
                .with_context(|| format!("in {}", input.display()))?;
            let mut s = Store::open(&store)?;
            let now = Utc::now();
            if let Some(id) = id {
                let (Some(source), Some(genre)) = (source, genre) else {
                    bail!("--id needs --source, --genre and at least one --language");
                };
                s.commit(
                    Event::SetCorpus {
                        id,
                        meta: DocumentMeta {
                            source,
                            languages,
                            speaker: None,
                            genre,
                        },
                    },
                    now,
                )?;
            } else if s.state().meta.is_none() {
                bail!("the store has no corpus metadata yet; pass --id, --source, --genre and --language");
            }
            let pretags: BTreeMap<_, _> = units
                .iter()
                .map(|u| (u.id.clone(), auto_tag(u, &gaz).annotations))
                .collect();
            let n = units.len();
            s.commit(Event::ImportUnits { units, pretags }, now)?;
            println!("imported {n} units");
        }
        Cmd::Export {
            store,
            selection,
            out,
        } => {
            let corpus = Store::open(&store)?.state().corpus()?;
            crate::write_out(out.as_deref(), &export_xml(&corpus, &selection)?)?;
        }
        Cmd::Stats {
            store,
            xml,
            selection,
        } => {
            let corpus = match (store, xml) {
                (Some(dir), _) => Store::open(&dir)?.state().corpus()?,
                (None, Some(path)) => {
                    let bytes = std::fs::read(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    import_xml(&bytes)?
                }
                (None, None) => unreachable!("clap requires one"),
            };
            print!("{}", render_stats(&[corpus_stats(&corpus, &selection)]));
        }
    }
    Ok(())
}
