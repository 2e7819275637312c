use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use patchbench::backend::BackendConfig;
use patchbench::corpus::{load_dataset, read_dataset, split_ids, write_canonical, DatasetSchema, RepairInstance, SamplingMode, SamplingPlan};
use patchbench::harness::{
    compare_runs, emit_report, parse_fraction, parse_seeds, render_comparison, render_report, run_experiment,
    ExperimentResult, ExperimentSpec, HarnessError, ReportLayout,
};
use patchbench::metrics::{aggregate, evaluate_batch, AggregateMode, EvalItem};
use patchbench::template::{
    builtin, builtin_templates, instantiate_with_budget, parse_template, render_debug, to_dsl, validate_for_style,
    ModelStyle, PromptTemplate, TemplateSet, DEFAULT_CHAR_BUDGET,
};
use patchbench::CodeBleuConfig;

#[derive(Parser)]
#[command(name = "patchbench", version, about = "Prompt-tuning experiments for automated program repair")]
struct Cli {
    /// Seeds, comma separated (default 1,2,3).
    #[arg(long, global = true, value_parser = seed_list)]
    seed_list: Option<SeedList>,
    /// Backend for `run`: stub:copy | stub:table=<file> | stub:fixed=<text> | remote:<url>.
    /// Without it, the config's backend, then $PATCHBENCH_WORKER_URL, then stub:copy.
    #[arg(long, global = true)]
    backend: Option<BackendConfig>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone)]
struct SeedList(Vec<u64>);

fn seed_list(s: &str) -> Result<SeedList, String> {
    parse_seeds(s).map(SeedList).ok_or_else(|| format!("invalid seed list `{s}`"))
}

#[derive(Args)]
struct DatasetArgs {
    /// Dataset file (JSONL).
    dataset: PathBuf,
    #[arg(long, default_value = "canonical")]
    schema: DatasetSchema,
}

impl DatasetArgs {
    fn load(&self) -> Result<Vec<RepairInstance>> {
        load_dataset(&self.dataset, self.schema).with_context(|| format!("loading {}", self.dataset.display()))
    }

    fn ids(&self) -> Result<Vec<String>> {
        Ok(self.load()?.into_iter().map(|i| i.id).collect())
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SetArg {
    Bp,
    Kp,
    All,
}

#[derive(Subcommand)]
enum TemplatesCommand {
    /// Lists builtin templates.
    List {
        #[arg(long, value_enum, default_value = "all")]
        set: SetArg,
        #[arg(long, default_value = "infilling")]
        style: ModelStyle,
    },
    /// Shows one template (builtin id or DSL file) in table and DSL form.
    Render {
        template: String,
        #[arg(long, default_value = "infilling")]
        style: ModelStyle,
    },
}

#[derive(Subcommand)]
enum Command {
    /// Converts a dataset export to canonical JSONL.
    Ingest {
        #[command(flatten)]
        data: DatasetArgs,
    },
    /// Writes train/val/test manifests per seed.
    Split {
        #[command(flatten)]
        data: DatasetArgs,
    },
    /// Writes training-sample manifests per seed.
    Sample {
        #[command(flatten)]
        data: DatasetArgs,
        /// Fraction of the training split, as `a/b` or a decimal.
        #[arg(long, conflicts_with = "shots", required_unless_present = "shots")]
        fraction: Option<String>,
        #[arg(long)]
        shots: Option<usize>,
        /// Reserve a test set of this size before sampling.
        #[arg(long)]
        fixed_test_size: Option<usize>,
    },
    /// Lists or renders prompt templates.
    Templates {
        #[command(subcommand)]
        command: TemplatesCommand,
    },
    /// Instantiates a template for every instance of a dataset.
    Compile {
        #[command(flatten)]
        data: DatasetArgs,
        /// Builtin template id or DSL file.
        #[arg(long)]
        template: String,
        #[arg(long, default_value = "infilling")]
        style: ModelStyle,
        #[arg(long, default_value_t = DEFAULT_CHAR_BUDGET)]
        budget: usize,
        /// Print readable prompts instead of JSONL.
        #[arg(long)]
        debug: bool,
    },
    /// Scores JSONL of {id, language, prediction, reference[, seed]}.
    Evaluate {
        input: PathBuf,
        /// CodeBLEU weights as four comma-separated numbers.
        #[arg(long, value_parser = weights)]
        weights: Option<[f64; 4]>,
        #[arg(long, default_value = "rate")]
        mode: AggregateMode,
        /// Whitespace tokenization for the n-gram terms.
        #[arg(long)]
        compat_tokenizer: bool,
    },
    /// Runs an experiment from a key-value config file.
    Run { config: PathBuf },
    /// Relative EM of runs against a baseline (`name` or `name/template`).
    Compare {
        #[arg(long)]
        baseline: String,
        #[arg(required = true)]
        results: Vec<PathBuf>,
    },
    /// Renders result files in a report layout.
    Report {
        #[arg(long, default_value = "tableVI")]
        layout: ReportLayout,
        #[arg(required = true)]
        results: Vec<PathBuf>,
    },
}

fn weights(s: &str) -> Result<[f64; 4], String> {
    let parts: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    parts.try_into().map_err(|_| "expected four weights".to_string())
}

/// Writes to `--out` when given, else stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => Ok(std::io::stdout().lock().write_all(text.as_bytes())?),
    }
}

fn to_jsonl<T: serde::Serialize>(rows: &[T]) -> String {
    rows.iter().map(|r| serde_json::to_string(r).expect("serializable") + "\n").collect()
}

fn resolve_template(name: &str, style: ModelStyle) -> Result<PromptTemplate> {
    if let Some(t) = builtin(name, style) {
        return Ok(t);
    }
    let text = std::fs::read_to_string(name).with_context(|| format!("`{name}` is neither a builtin id nor a readable file"))?;
    Ok(parse_template(&text)?)
}

fn read_results(paths: &[PathBuf]) -> Result<Vec<ExperimentResult>> {
    paths
        .iter()
        .map(|p| {
            let path = if p.is_dir() { p.join("result.json") } else { p.clone() };
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
        })
        .collect()
}

fn seeds(cli: &Cli) -> Vec<u64> {
    cli.seed_list.clone().map_or_else(|| patchbench::corpus::DEFAULT_SEEDS.to_vec(), |s| s.0)
}

/// One manifest per seed: `<out>/<stem>-seed-<s>.json`, or JSON lines on stdout.
fn emit_manifests(cli: &Cli, stem: &str, manifests: &[patchbench::corpus::DatasetSplit]) -> Result<()> {
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            for m in manifests {
                let path = dir.join(format!("{stem}-seed-{}.json", m.seed));
                std::fs::write(&path, serde_json::to_string_pretty(m)? + "\n")?;
                eprintln!("{}: train {} val {} test {}", path.display(), m.train.len(), m.val.len(), m.test.len());
            }
            Ok(())
        }
        None => emit(None, &to_jsonl(manifests)),
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Ingest { data } => {
            let file = std::fs::File::open(&data.dataset).with_context(|| format!("opening {}", data.dataset.display()))?;
            let instances = read_dataset(std::io::BufReader::new(file), data.schema)?;
            let mut buf = Vec::new();
            write_canonical(&instances, &mut buf)?;
            emit(cli.out.as_deref(), std::str::from_utf8(&buf)?)?;
            eprintln!("{} instances", instances.len());
        }
        Command::Split { data } => {
            let ids = data.ids()?;
            let manifests = seeds(cli).into_iter().map(|s| split_ids(&ids, s)).collect::<Result<Vec<_>, _>>()?;
            emit_manifests(cli, "split", &manifests)?;
        }
        Command::Sample { data, fraction, shots, fixed_test_size } => {
            let mode = match (fraction, shots) {
                (Some(f), _) => SamplingMode::Fraction {
                    fraction: parse_fraction(f).with_context(|| format!("invalid fraction `{f}`"))?,
                },
                (None, Some(k)) => SamplingMode::Shots { shot_count: *k },
                (None, None) => bail!("give --fraction or --shots"),
            };
            let plan = SamplingPlan { mode, seeds: seeds(cli), fixed_test_size: *fixed_test_size };
            plan.validate()?;
            let ids = data.ids()?;
            let manifests = plan.seeds.iter().map(|&s| plan.manifest(&ids, s)).collect::<Result<Vec<_>, _>>()?;
            emit_manifests(cli, "sample", &manifests)?;
        }
        Command::Templates { command: TemplatesCommand::List { set, style } } => {
            let sets: &[TemplateSet] = match set {
                SetArg::Bp => &[TemplateSet::Bp],
                SetArg::Kp => &[TemplateSet::Kp],
                SetArg::All => &[TemplateSet::Bp, TemplateSet::Kp],
            };
            let mut text = String::new();
            for &s in sets {
                for t in builtin_templates(s, *style) {
                    text.push_str(&format!("{}\t{}\t{}\n", t.id, t.kind, t.table_form()));
                }
            }
            emit(cli.out.as_deref(), &text)?;
        }
        Command::Templates { command: TemplatesCommand::Render { template, style } } => {
            let t = resolve_template(template, *style)?;
            let mut text = format!("id: {}\nkind: {}\nstyle: {}\ntable: {}\ndsl: {}\n", t.id, t.kind, t.model_style, t.table_form(), to_dsl(&t));
            for w in validate_for_style(&t, *style) {
                text.push_str(&format!("warning: {w}\n"));
            }
            emit(cli.out.as_deref(), &text)?;
        }
        Command::Compile { data, template, style, budget, debug } => {
            let t = resolve_template(template, *style)?;
            for w in validate_for_style(&t, *style) {
                log::warn!("{w}");
            }
            let mut text = String::new();
            let mut failed = 0;
            for inst in data.load()? {
                match instantiate_with_budget(&t, &inst, *budget) {
                    Ok(p) if *debug => text.push_str(&format!("{}\t{}\n", p.instance_id, render_debug(&p))),
                    Ok(p) => text.push_str(&(serde_json::to_string(&p)? + "\n")),
                    Err(e) => {
                        failed += 1;
                        eprintln!("{}: {e}", inst.id);
                    }
                }
            }
            emit(cli.out.as_deref(), &text)?;
            if failed > 0 {
                eprintln!("{failed} instance(s) failed to compile");
                return Ok(ExitCode::from(1));
            }
        }
        Command::Evaluate { input, weights, mode, compat_tokenizer } => {
            let file = std::fs::File::open(input).with_context(|| format!("opening {}", input.display()))?;
            let mut items = Vec::new();
            for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let item: EvalItem = serde_json::from_str(&line).with_context(|| format!("{} line {}", input.display(), i + 1))?;
                items.push(item);
            }
            let mut config = CodeBleuConfig::default();
            if let Some(w) = weights {
                config.weights = *w;
            }
            if *compat_tokenizer {
                config = config.compat();
            }
            config.validate()?;
            let reports = evaluate_batch(&items, &config);
            let summary = serde_json::to_string_pretty(&aggregate(&reports, *mode)?)? + "\n";
            match &cli.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    std::fs::write(dir.join("reports.jsonl"), to_jsonl(&reports))?;
                    std::fs::write(dir.join("summary.json"), &summary)?;
                    eprint!("{summary}");
                }
                None => {
                    emit(None, &to_jsonl(&reports))?;
                    eprint!("{summary}");
                }
            }
        }
        Command::Run { config } => {
            let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
            let mut spec = ExperimentSpec::from_config(&text)?;
            if let Some(seeds) = &cli.seed_list {
                spec.sampling.seeds = seeds.0.clone();
            }
            if let Some(b) = &cli.backend {
                spec.backend = b.clone();
            }
            if let Some(out) = &cli.out {
                spec.output = out.clone();
            }
            spec.validate()?;
            let (result, code) = match run_experiment(&spec) {
                Ok(r) => (r, ExitCode::SUCCESS),
                Err(HarnessError::Incomplete(r)) => {
                    for f in &r.failed_seeds {
                        eprintln!("seed {} failed: {}", f.seed, f.error);
                    }
                    (*r, ExitCode::from(2))
                }
                Err(e) => return Err(e.into()),
            };
            for t in &result.templates {
                if let Some(s) = t.cross_seed {
                    println!("{}\tEM {:.2}\tSC {:.2}\tCodeBLEU {:.2}", t.template_id, s.em, s.sc, s.codebleu);
                }
            }
            eprintln!("results in {}", spec.output.join("result.json").display());
            return Ok(code);
        }
        Command::Compare { baseline, results } => {
            let comparison = compare_runs(&read_results(results)?, baseline)?;
            emit(cli.out.as_deref(), &render_comparison(&comparison))?;
        }
        Command::Report { layout, results } => {
            let results = read_results(results)?;
            match &cli.out {
                Some(dir) => {
                    let path = emit_report(&results, *layout, dir)?;
                    eprintln!("wrote {}", path.display());
                }
                None => emit(None, &render_report(&results, *layout)?)?,
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
