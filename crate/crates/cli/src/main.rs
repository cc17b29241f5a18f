use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use evi_core::dataset::{import_evi_profiles, import_evi_turns, load_transcripts, save_transcripts};
use evi_core::dialogue::{IdMode, KbMode};
use evi_core::eval::{render_table, render_tsv, MetricReport};
use evi_core::io::write_atomic;
use evi_core::locale::{read_wordlist, RESOURCE_DIR_ENV};
use evi_core::{
    generate_kb, run_experiment, simulate, Error, ExperimentConfig, FuzzyConfig, GenerationSpec, KnowledgeBase, Locale,
    LocaleResources, Nlu, NluMode, ResultsFile, ScorerModel, SimSpec, Task, Theta, TurnSelector,
};

type Result<T> = evi_core::Result<T>;

#[derive(Parser)]
#[command(
    name = "evi",
    version,
    about = "Knowledge-based enrolment, verification and identification benchmarks"
)]
struct Cli {
    /// Locale resource directory (overrides the built-in wordlists; same as EVI_RESOURCES).
    #[arg(long, global = true, value_name = "DIR")]
    resources: Option<PathBuf>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic profile knowledge base.
    GenKb(GenKbArgs),
    /// Simulate noisy dialogue transcripts over a knowledge base.
    Simulate(SimulateArgs),
    /// Convert the published EVI dataset layout into transcript and KB files.
    Import(ImportArgs),
    /// Run one task over a dataset and write results and a report.
    Run(RunArgs),
    /// Merge results files into comparison tables.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenKbArgs {
    #[arg(long)]
    locale: Locale,
    #[arg(long, default_value_t = 10_000)]
    profiles: usize,
    #[arg(long, default_value_t = 2_000)]
    postcodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// First-name wordlist (default: the locale's list).
    #[arg(long, value_name = "PATH")]
    first_names: Option<PathBuf>,
    /// Last-name wordlist (default: the locale's list).
    #[arg(long, value_name = "PATH")]
    last_names: Option<PathBuf>,
    #[arg(long, value_name = "DATE")]
    dob_from: Option<NaiveDate>,
    #[arg(long, value_name = "DATE")]
    dob_to: Option<NaiveDate>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    kb: PathBuf,
    #[arg(long, default_value_t = 500)]
    dialogues: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = SimSpec::default().nbest)]
    nbest: usize,
    #[arg(long, default_value_t = SimSpec::default().p_fail)]
    p_fail: f64,
    #[arg(long, default_value_t = SimSpec::default().p_noise)]
    p_noise: f64,
    #[arg(long, default_value_t = SimSpec::default().p_carrier)]
    p_carrier: f64,
    #[arg(long, default_value_t = SimSpec::default().p_spell)]
    p_spell: f64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct ImportArgs {
    #[arg(long)]
    locale: Locale,
    /// Per-turn JSON lines (dialogue_id, turn_id, target_profile_id, asr_nbest).
    #[arg(long, value_name = "PATH")]
    turns: PathBuf,
    /// Profiles CSV/TSV to convert into a KB file.
    #[arg(long, value_name = "PATH", requires = "kb_out")]
    profiles: Option<PathBuf>,
    #[arg(long, value_name = "PATH", requires = "profiles")]
    kb_out: Option<PathBuf>,
    /// Transcript file to write.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    E,
    V,
    I,
}

#[derive(Clone, Copy, ValueEnum)]
enum IdModel {
    None,
    Random,
    Exact,
    Fuzzy,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Operator {
    Standard,
    Pnorm,
    InfinityOne,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    task: TaskArg,
    /// Transcript file (one dialogue per line).
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    kb: PathBuf,
    /// Output directory for results.jsonl, report.txt, report.tsv and det.tsv.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value = "seeking")]
    nlu: NluMode,
    /// Verification scorer.
    #[arg(long)]
    model: Option<ScorerModel>,
    /// Identification ranking: none, a scorer, or the identification oracle.
    #[arg(long, value_enum)]
    id_model: Option<IdModel>,
    /// Fuzzy operator family (default: standard for v, infinity-one for i).
    #[arg(long, value_enum)]
    operator: Option<Operator>,
    /// Infinity-one interpolation weight.
    #[arg(long)]
    alpha: Option<f64>,
    /// p-norm exponent.
    #[arg(long)]
    p: Option<f64>,
    /// Threshold, or `sweep` for a DET sweep (verification).
    #[arg(long)]
    theta: Option<Theta>,
    #[arg(long)]
    kb_oracle: bool,
    #[arg(long)]
    early_term: bool,
    /// `multi` or `single:k`.
    #[arg(long, default_value = "multi")]
    turns: TurnSelector,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = evi_core::experiment::DEFAULT_FAR_TARGET)]
    far_target: f64,
    /// Row label in reports.
    #[arg(long)]
    label: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Results files written by `run`.
    #[arg(required = true)]
    results: Vec<PathBuf>,
    /// Also write report.txt, report.tsv and DET point files here.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Tsv,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 2 } else { 1 })
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(dir) = &cli.resources {
        std::env::set_var(RESOURCE_DIR_ENV, dir);
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::GenKb(a) => gen_kb(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Import(a) => import(a),
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
    }
}

fn wordlist(flag: &str, path: &Path) -> Result<Vec<String>> {
    if !path.is_file() {
        return Err(Error::Config(format!("{flag}: no such file {}", path.display())));
    }
    read_wordlist(path)
}

fn gen_kb(a: GenKbArgs) -> Result<()> {
    let mut spec = GenerationSpec::for_locale(a.locale, a.profiles, a.postcodes, a.seed)?;
    if let Some(p) = &a.first_names {
        spec.first_name_pool = wordlist("--first-names", p)?;
    }
    if let Some(p) = &a.last_names {
        spec.last_name_pool = wordlist("--last-names", p)?;
    }
    let (from, to) = GenerationSpec::default_dob_range();
    spec.dob_range = (a.dob_from.unwrap_or(from), a.dob_to.unwrap_or(to));
    let kb = generate_kb(&spec)?;
    kb.save(&a.out)?;
    eprintln!(
        "wrote {} profiles ({} distinct postcodes) to {}",
        kb.len(),
        kb.distinct_postcodes(),
        a.out.display()
    );
    Ok(())
}

fn simulate_cmd(a: SimulateArgs) -> Result<()> {
    let kb = KnowledgeBase::load(&a.kb)?;
    let res = LocaleResources::load(kb.locale())?;
    let spec = SimSpec {
        n_dialogues: a.dialogues,
        seed: a.seed,
        nbest: a.nbest,
        p_fail: a.p_fail,
        p_noise: a.p_noise,
        p_carrier: a.p_carrier,
        p_spell: a.p_spell,
    };
    let dialogues = simulate(&kb, &res, &spec)?;
    save_transcripts(&a.out, &dialogues)?;
    eprintln!("wrote {} dialogues to {}", dialogues.len(), a.out.display());
    Ok(())
}

fn import(a: ImportArgs) -> Result<()> {
    let dialogues = import_evi_turns(&a.turns, a.locale)?;
    save_transcripts(&a.out, &dialogues)?;
    eprintln!("wrote {} dialogues to {}", dialogues.len(), a.out.display());
    if let (Some(profiles), Some(kb_out)) = (&a.profiles, &a.kb_out) {
        let kb = import_evi_profiles(profiles, a.locale)?;
        kb.save(kb_out)?;
        eprintln!("wrote {} profiles to {}", kb.len(), kb_out.display());
    }
    Ok(())
}

fn fuzzy_config(a: &RunArgs, task: Task) -> Result<FuzzyConfig> {
    let op = match (a.operator, a.alpha, a.p) {
        (Some(op), _, _) => op,
        (None, Some(_), None) => Operator::InfinityOne,
        (None, None, Some(_)) => Operator::Pnorm,
        (None, Some(_), Some(_)) => return Err(Error::Config("--alpha and --p need an explicit --operator".into())),
        (None, None, None) if task == Task::Identification => Operator::InfinityOne,
        (None, None, None) => Operator::Standard,
    };
    let cfg = match op {
        Operator::Standard if a.alpha.is_some() || a.p.is_some() => {
            return Err(Error::Config(
                "--alpha and --p do not apply to the standard operators".into(),
            ))
        }
        Operator::Standard => FuzzyConfig::Standard,
        Operator::Pnorm if a.alpha.is_some() => return Err(Error::Config("--alpha applies to infinity-one".into())),
        Operator::Pnorm => FuzzyConfig::Pnorm {
            p: a.p.unwrap_or(FuzzyConfig::DEFAULT_P),
        },
        Operator::InfinityOne if a.p.is_some() => return Err(Error::Config("--p applies to pnorm".into())),
        Operator::InfinityOne => FuzzyConfig::InfinityOne {
            alpha: a.alpha.unwrap_or(0.5),
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

fn experiment_config(a: &RunArgs, locale: Locale) -> Result<ExperimentConfig> {
    let task = match a.task {
        TaskArg::E => Task::Enrolment,
        TaskArg::V => Task::Verification,
        TaskArg::I => Task::Identification,
    };
    let mut cfg = ExperimentConfig::new(task, locale);
    cfg.nlu_mode = a.nlu;
    cfg.selector = a.turns;
    cfg.seed = a.seed;
    cfg.far_target = a.far_target;
    cfg.label = a.label.clone();
    cfg.early_term = a.early_term;
    cfg.dataset_path = Some(a.dataset.display().to_string());
    cfg.kb_path = Some(a.kb.display().to_string());
    if task != Task::Enrolment {
        cfg.cfg = fuzzy_config(a, task)?;
    } else if a.operator.is_some() || a.alpha.is_some() || a.p.is_some() {
        return Err(Error::Config(
            "enrolment does not score: drop --operator/--alpha/--p".into(),
        ));
    }
    if task == Task::Identification {
        if a.model.is_some() {
            return Err(Error::Config("identification takes --id-model, not --model".into()));
        }
        let (id_mode, model) = match a.id_model.unwrap_or(IdModel::Fuzzy) {
            IdModel::None => (IdMode::None, ScorerModel::Fuzzy),
            IdModel::Random => (IdMode::Scored, ScorerModel::Random),
            IdModel::Exact => (IdMode::Scored, ScorerModel::Exact),
            IdModel::Fuzzy => (IdMode::Scored, ScorerModel::Fuzzy),
            IdModel::Oracle => (IdMode::Oracle, ScorerModel::Fuzzy),
        };
        cfg.id_mode = Some(id_mode);
        cfg.model = model;
        cfg.kb_mode = if a.kb_oracle { KbMode::Oracle } else { KbMode::Normal };
        cfg.theta = Some(a.theta.unwrap_or(Theta::Fixed(0.0)));
    } else {
        if a.id_model.is_some() {
            return Err(Error::Config("--id-model only applies to --task i".into()));
        }
        if a.kb_oracle {
            return Err(Error::Config("--kb-oracle only applies to --task i".into()));
        }
        cfg.model = a.model.unwrap_or(ScorerModel::Fuzzy);
        cfg.theta = match task {
            Task::Verification => Some(a.theta.unwrap_or(Theta::Sweep)),
            _ => a.theta,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(a: RunArgs) -> Result<()> {
    let kb = KnowledgeBase::load(&a.kb)?;
    let cfg = experiment_config(&a, kb.locale())?;
    let dialogues = load_transcripts(&a.dataset)?;
    let nlu = Nlu::new(LocaleResources::load(kb.locale())?);
    let out = run_experiment(&cfg, &dialogues, &kb, &nlu)?;
    let reports = [out.report.clone()];
    let table = render_table(&reports);
    write_atomic(&a.out.join("report.txt"), table.as_bytes())?;
    write_atomic(&a.out.join("report.tsv"), render_tsv(&reports).as_bytes())?;
    if let Some(det) = &out.det {
        write_atomic(&a.out.join("det.tsv"), det.to_tsv().as_bytes())?;
    }
    ResultsFile::new(cfg, out).save(&a.out.join("results.jsonl"))?;
    print!("{table}");
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let files = a
        .results
        .iter()
        .map(|p| ResultsFile::load(p))
        .collect::<Result<Vec<_>>>()?;
    let reports: Vec<MetricReport> = files.iter().map(|f| f.header.report.clone()).collect();
    let table = render_table(&reports);
    let tsv = render_tsv(&reports);
    if let Some(dir) = &a.out {
        write_atomic(&dir.join("report.txt"), table.as_bytes())?;
        write_atomic(&dir.join("report.tsv"), tsv.as_bytes())?;
        for (i, f) in files.iter().enumerate() {
            if let Some(det) = &f.header.det {
                write_atomic(&dir.join(format!("det-{i:02}.tsv")), det.to_tsv().as_bytes())?;
            }
        }
    }
    match a.format {
        Format::Table => print!("{table}"),
        Format::Tsv => print!("{tsv}"),
    }
    Ok(())
}
