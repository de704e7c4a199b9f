//! Command-line front end. Every failure prints one `error: ...` line and maps to an exit code.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use ampforge_core::ampmodel::{serialize_model, AmpModel};
use ampforge_core::audio::{prepare_pair, read_wav, DatasetPair, WavData};
use ampforge_core::filterbank::{design_filterbank, FilterBankSpec, Profile};
use ampforge_core::training::{init_model, train_from};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::parse_train_config;
use crate::error::ShellError;
use crate::inspect::{activation_report, filterbank_report, weights_report};
use crate::registry::{load_audio, load_model, Registry};
use crate::render::{encode_wav, render, ModelSelection};
use crate::service::{self, ServiceConfig, DEFAULT_CACHE_ENTRIES, DEFAULT_CLIP_CAP_S};

pub const REGISTRY_ENV: &str = "AMPFORGE_REGISTRY";

#[derive(Debug, Parser)]
#[command(name = "ampforge", version, about = "Train, blend and render filterbank amplifier models")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Filterbank utilities.
    Filterbank {
        #[command(subcommand)]
        command: FilterbankCommand,
    },
    /// Fit a model to an input/target recording pair.
    Train(TrainArgs),
    /// Render a WAV through a model, an interpolation or a blend.
    Render(RenderArgs),
    /// Write a blended model file.
    Blend(BlendArgs),
    /// Print a model's weights (and optionally activations) as JSON.
    Inspect(InspectArgs),
    /// Run the HTTP render service.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
enum FilterbankCommand {
    /// Print centers, group delay and optionally kernels as JSON.
    Inspect {
        #[arg(long, default_value = "latency")]
        profile: Profile,
        #[arg(long, default_value_t = 44_100.0)]
        sample_rate: f64,
        #[arg(long)]
        kernels: bool,
    },
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, requires = "val_target")]
    val_input: Option<PathBuf>,
    #[arg(long, requires = "val_input")]
    val_target: Option<PathBuf>,
    /// JSON-lines epoch history; defaults to `<output stem>.history.jsonl`.
    #[arg(long)]
    history: Option<PathBuf>,
    #[arg(long, default_value = "trained")]
    name: String,
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct SelectionArgs {
    /// Model id in the registry, or a path to a model file.
    #[arg(long, conflicts_with_all = ["model_i", "blend"])]
    model: Option<String>,
    #[arg(long, requires_all = ["model_j", "alpha"], conflicts_with = "blend")]
    model_i: Option<String>,
    #[arg(long, requires = "model_i")]
    model_j: Option<String>,
    #[arg(long, requires = "model_i", allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// `id=weight`, repeatable.
    #[arg(long, value_parser = parse_blend_entry)]
    blend: Vec<(String, f64)>,
    #[arg(long, env = REGISTRY_ENV)]
    registry: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[command(flatten)]
    selection: SelectionArgs,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    gain_db: f64,
    /// Impulse response WAV path, or an IR id in the registry.
    #[arg(long)]
    ir: Option<String>,
    #[arg(long)]
    profile: Option<Profile>,
}

#[derive(Debug, Args)]
struct BlendArgs {
    #[command(flatten)]
    selection: SelectionArgs,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long)]
    name: Option<String>,
}

#[derive(Debug, Args)]
struct InspectArgs {
    /// Model file. Without it, `--filterbank` describes the default filterbank.
    #[arg(required_unless_present = "filterbank")]
    model: Option<PathBuf>,
    #[arg(long)]
    filterbank: bool,
    /// Also render this WAV and summarize per-block activations.
    #[arg(long)]
    activations: Option<PathBuf>,
    #[arg(long, default_value_t = 1024)]
    hop: usize,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = REGISTRY_ENV)]
    registry: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    #[arg(long)]
    static_dir: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CLIP_CAP_S)]
    clip_cap_s: f64,
    #[arg(long, default_value_t = DEFAULT_CACHE_ENTRIES)]
    cache_entries: usize,
}

fn parse_blend_entry(s: &str) -> Result<(String, f64), String> {
    let (id, w) = s.rsplit_once('=').ok_or_else(|| format!("expected id=weight, got `{s}`"))?;
    let w: f64 = w.parse().map_err(|_| format!("bad weight in `{s}`"))?;
    Ok((id.to_string(), w))
}

impl SelectionArgs {
    fn selection(&self) -> Result<ModelSelection, ShellError> {
        match (&self.model, &self.model_i, &self.model_j, self.alpha, self.blend.is_empty()) {
            (Some(m), None, None, None, true) => Ok(ModelSelection::Single(m.clone())),
            (None, Some(i), Some(j), Some(alpha), true) => {
                Ok(ModelSelection::Pair { model_i: i.clone(), model_j: j.clone(), alpha })
            }
            (None, None, None, None, false) => Ok(ModelSelection::Blend(self.blend.clone())),
            _ => Err(ShellError::Invalid("give one of --model, --model-i/--model-j/--alpha, or --blend".into())),
        }
    }

    /// Resolve every referenced name to a model: existing files first, then the registry.
    fn models(&self, selection: &ModelSelection) -> Result<BTreeMap<String, AmpModel>, ShellError> {
        let names: Vec<&String> = match selection {
            ModelSelection::Single(m) => vec![m],
            ModelSelection::Pair { model_i, model_j, .. } => vec![model_i, model_j],
            ModelSelection::Blend(entries) => entries.iter().map(|(id, _)| id).collect(),
        };
        let mut registry: Option<Registry> = None;
        let mut out = BTreeMap::new();
        for name in names {
            let path = Path::new(name);
            let model = if path.is_file() {
                load_model(path)?
            } else {
                let root = self.registry.as_ref().ok_or_else(|| ShellError::UnknownModel(name.clone()))?;
                if registry.is_none() {
                    registry = Some(Registry::open(root)?);
                }
                registry.as_ref().unwrap().model(name).cloned().ok_or_else(|| ShellError::UnknownModel(name.clone()))?
            };
            out.insert(name.clone(), model);
        }
        Ok(out)
    }

    fn resolve(&self) -> Result<AmpModel, ShellError> {
        let selection = self.selection()?;
        selection.resolve(&self.models(&selection)?)
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, ShellError> {
    fs::read(path).map_err(|e| ShellError::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ShellError> {
    fs::write(path, bytes).map_err(|e| ShellError::io(path, e))
}

fn read_wav_file(path: &Path) -> Result<WavData, ShellError> {
    read_wav(&read_file(path)?).map_err(|e| ShellError::BadAudio(format!("{}: {e}", path.display())))
}

fn print_json(value: &impl serde::Serialize) -> Result<(), ShellError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| ShellError::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

/// `foo.ampmodel.json` -> `foo.history.jsonl`.
pub fn default_history_path(model_path: &Path) -> PathBuf {
    let name = model_path.file_name().and_then(|n| n.to_str()).unwrap_or("model");
    let stem = name.strip_suffix(".ampmodel.json").or_else(|| name.strip_suffix(".json")).unwrap_or(name);
    model_path.with_file_name(format!("{stem}.history.jsonl"))
}

fn load_pair(input: &Path, target: &Path, opts: &ampforge_core::audio::PrepareOptions) -> Result<DatasetPair, ShellError> {
    let x = read_wav_file(input)?;
    let y = read_wav_file(target)?;
    Ok(prepare_pair(&x, &y, opts)?)
}

fn cmd_train(args: &TrainArgs) -> Result<(), ShellError> {
    let text = String::from_utf8(read_file(&args.config)?)
        .map_err(|_| ShellError::Parse(format!("{}: not UTF-8", args.config.display())))?;
    let cfg = parse_train_config(&text)?;
    let opts = cfg.data.prepare_options();

    let pair = load_pair(&args.input, &args.target, &opts)?;
    let (train_pair, val_pair) = match (&args.val_input, &args.val_target) {
        (Some(vi), Some(vt)) => (pair, load_pair(vi, vt, &opts)?),
        _ => {
            let f = cfg.data.validation_fraction;
            if !(f > 0.0 && f < 1.0) {
                return Err(ShellError::Parse("data.validation_fraction must be in (0, 1)".into()));
            }
            pair.split_tail(f)
        }
    };
    if val_pair.sample_rate_hz() != train_pair.sample_rate_hz() {
        return Err(ShellError::RateMismatch("validation and training audio differ".into()));
    }

    let spec = cfg.filterbank.spec(train_pair.sample_rate_hz());
    let bank = design_filterbank(&spec).map_err(|e| ShellError::Parse(format!("config: {e}")))?;
    let initial = init_model(&args.name, spec, cfg.train.rng_seed)?;

    let history_path = args.history.clone().unwrap_or_else(|| default_history_path(&args.output));
    let mut history = fs::File::create(&history_path).map_err(|e| ShellError::io(&history_path, e))?;
    let mut write_err = None;
    let quiet = args.quiet;
    let outcome = train_from(initial, &[train_pair], &[val_pair], &cfg.train, &bank, &mut |rec| {
        if !quiet {
            eprintln!(
                "epoch {:>4}  train {:.6e}  val {:.6e}{}",
                rec.epoch,
                rec.train_loss,
                rec.val_loss,
                if rec.best_flag { "  *" } else { "" }
            );
        }
        let line = serde_json::to_string(rec).expect("record serializes");
        if let Err(e) = writeln!(history, "{line}") {
            write_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = write_err {
        return Err(ShellError::io(&history_path, e));
    }

    let mut model = outcome.model;
    model.name = args.name.clone();
    write_file(&args.output, &serialize_model(&model)?)?;
    if !quiet {
        eprintln!(
            "best epoch {} (val {:.6e}), {} epochs{}",
            outcome.best_epoch,
            outcome.best_val_loss,
            outcome.history.len(),
            if outcome.stopped_early { ", stopped early" } else { "" }
        );
    }
    Ok(())
}

fn cmd_render(args: &RenderArgs) -> Result<(), ShellError> {
    let model = args.selection.resolve()?;
    let input = load_audio(&args.input)?;
    let ir = match &args.ir {
        None => None,
        Some(ir) if Path::new(ir).is_file() => Some(load_audio(Path::new(ir))?),
        Some(ir) => {
            let root = args.selection.registry.as_ref().ok_or_else(|| ShellError::NotFound(ir.clone()))?;
            Some(Registry::open(root)?.ir(ir)?)
        }
    };
    let out = render(&model, &input, args.gain_db, ir.as_ref(), args.profile)?;
    write_file(&args.output, &encode_wav(&out)?)
}

fn cmd_blend(args: &BlendArgs) -> Result<(), ShellError> {
    let mut model = args.selection.resolve()?;
    if let Some(name) = &args.name {
        model.name = name.clone();
    }
    write_file(&args.output, &serialize_model(&model)?)
}

fn cmd_inspect(args: &InspectArgs) -> Result<(), ShellError> {
    let Some(path) = &args.model else {
        return print_json(&filterbank_report(&FilterBankSpec::default(), true)?);
    };
    let model = load_model(path)?;
    let mut doc = json!({ "weights": weights_report(None, &model)? });
    if args.filterbank {
        doc["filterbank"] = json!(filterbank_report(&model.filterbank_spec, true)?);
    }
    if let Some(wav) = &args.activations {
        doc["activations"] = json!(activation_report(&model, &load_audio(wav)?, args.hop)?);
    }
    print_json(&doc)
}

fn cmd_serve(args: &ServeArgs) -> Result<(), ShellError> {
    let registry = Registry::open(&args.registry)?;
    if !registry.is_homogeneous() {
        eprintln!("warning: registry models use more than one filterbank; blends across them are rejected");
    }
    let config = ServiceConfig {
        clip_cap_s: args.clip_cap_s,
        cache_entries: args.cache_entries,
        static_dir: args.static_dir.clone(),
    };
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| ShellError::Io(e.to_string()))?;
    rt.block_on(service::serve(registry, config, args.bind)).map_err(|e| ShellError::Io(e.to_string()))
}

fn dispatch(cli: &Cli) -> Result<(), ShellError> {
    match &cli.command {
        Command::Filterbank { command: FilterbankCommand::Inspect { profile, sample_rate, kernels } } => {
            print_json(&filterbank_report(&FilterBankSpec::with_profile(*sample_rate, *profile), *kernels)?)
        }
        Command::Train(a) => cmd_train(a),
        Command::Render(a) => cmd_render(a),
        Command::Blend(a) => cmd_blend(a),
        Command::Inspect(a) => cmd_inspect(a),
        Command::Serve(a) => cmd_serve(a),
    }
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
