use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use csanno::pretag::{auto_tag, Gazetteer, NormalizationTable};

mod corpus;
mod iaa;
mod workflow;

#[derive(Parser)]
#[command(name = "csanno", version, about = "Code-switching annotation tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean, tokenize and machine-tag a unit file.
    Pretag {
        /// Units as `id<TAB>genre<TAB>dialect<TAB>text`.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        gazetteer: Option<PathBuf>,
        /// Character normalization table.
        #[arg(long)]
        norm: Option<PathBuf>,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Agreement over annotation tables, one file per annotator.
    Iaa {
        /// Directory of `<annotator>.tsv` files, or of batch subdirectories
        /// holding such files.
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Also list the disagreeing tokens.
        #[arg(long)]
        disagreements: bool,
    },
    #[command(subcommand)]
    Workflow(workflow::Cmd),
    #[command(subcommand)]
    Corpus(corpus::Cmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
}

pub(crate) fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub(crate) fn load_table(norm: Option<&Path>) -> Result<NormalizationTable> {
    match norm {
        Some(p) => {
            NormalizationTable::parse(&read(p)?).with_context(|| format!("in {}", p.display()))
        }
        None => Ok(NormalizationTable::default()),
    }
}

pub(crate) fn load_gazetteer(path: Option<&Path>, table: &NormalizationTable) -> Result<Gazetteer> {
    Ok(match path {
        Some(p) => Gazetteer::parse(&read(p)?, Some(table)),
        None => Gazetteer::default(),
    })
}

pub(crate) fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            Ok(stdout.flush()?)
        }
    }
}

fn pretag(
    input: &Path,
    gazetteer: Option<&Path>,
    norm: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let table = load_table(norm)?;
    let gaz = load_gazetteer(gazetteer, &table)?;
    let units = csanno::corpusstore::import_units(&read(input)?, &table)
        .with_context(|| format!("in {}", input.display()))?;
    let mut buf = String::from("unit_id\ttoken_index\tsurface\tmachine_tag\n");
    for unit in &units {
        let res = auto_tag(unit, &gaz);
        for (tok, ann) in unit.tokens.iter().zip(&res.annotations) {
            let tag = ann
                .as_ref()
                .and_then(|a| a.cs)
                .map(|t| t.to_string())
                .unwrap_or_default();
            buf.push_str(&format!(
                "{}\t{}\t{}\t{tag}\n",
                unit.id, tok.index, tok.surface
            ));
        }
    }
    write_out(out, buf.as_bytes())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Pretag {
            input,
            gazetteer,
            norm,
            out,
        } => pretag(
            &input,
            gazetteer.as_deref(),
            norm.as_deref(),
            out.as_deref(),
        ),
        Command::Iaa {
            annotations,
            format,
            disagreements,
        } => {
            if !annotations.is_dir() {
                bail!("{} is not a directory", annotations.display());
            }
            let text = iaa::run(&annotations, matches!(format, Format::Csv), disagreements)?;
            write_out(None, text.as_bytes())
        }
        Command::Workflow(cmd) => workflow::run(cmd),
        Command::Corpus(cmd) => corpus::run(cmd),
    }
}
