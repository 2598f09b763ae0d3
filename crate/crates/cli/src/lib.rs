//! `sar-attn` command dispatch, kept in a library so tests can drive it
//! without spawning processes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use sar_attention::attention::AttentionKind;
use sar_attention::backbone::ResNet;
use sar_attention::data::dataset::write_synth_split;
use sar_attention::data::image::{read_pgm, write_image, Image};
use sar_attention::data::{fit_to_size, load_dataset, load_split_dir, min_max_normalize, Dataset, Split, SynthConfig};
use sar_attention::explain::{gradcam_map, overlay_heatmap};
use sar_attention::harness::{
    assign_deltas, format_report, perturb_dataset, render_protocol, run_protocol, top1_accuracy, train_model,
    ExperimentConfig, NoiseScale, PerturbSpec, TrialReport,
};
use sar_attention::nn::checkpoint;
use sar_attention::rng::derive_seed;
use sar_attention::{Error, Result, Tensor};

const COMMANDS: &str = "train, eval, perturb-eval, gradcam, synth-gen";

#[derive(Parser, Debug)]
#[command(name = "sar-attn", about = "Attention-augmented ResNet experiments on SAR imagery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one model and write its checkpoint (plus a `.cfg` sidecar).
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        attention: Option<AttentionKind>,
        /// Directory with `train/` (and optionally `test/`) class folders.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a checkpoint, optionally under Gaussian input noise.
    Eval {
        #[arg(long)]
        model: PathBuf,
        /// Split directory (or a root holding `test/`); defaults to the
        /// checkpoint's configured test split.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, conflicts_with = "perturb_var")]
        perturb_std: Option<f64>,
        #[arg(long)]
        perturb_var: Option<f64>,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full protocol: every variant, every trial, clean and perturbed.
    PerturbEval {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write each trained checkpoint here as `<variant>-<trial>.ckpt`.
        #[arg(long)]
        checkpoints: Option<PathBuf>,
    },
    /// Grad-CAM overlay for one image.
    Gradcam {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        class: usize,
        #[arg(long)]
        out: PathBuf,
        /// Tagged layer; defaults to the last block.
        #[arg(long)]
        layer: Option<String>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Also write the normalized map as a PGM.
        #[arg(long)]
        map_out: Option<PathBuf>,
    },
    /// Write a synthetic speckle dataset as PGM files plus `manifest.tsv`.
    SynthGen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 50)]
        per_class: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        size: usize,
        /// `train`, `test`, or `both` (writes `out/train` and `out/test`).
        #[arg(long, default_value = "train")]
        split: String,
    },
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns 0 on success, 1 on usage errors, 2 on runtime errors.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                ErrorKind::InvalidSubcommand | ErrorKind::MissingSubcommand | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    eprintln!("{}", e.render().to_string().trim_end());
                    eprintln!("commands: {COMMANDS}");
                    1
                }
                _ => {
                    let _ = e.print();
                    1
                }
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e @ Error::InvalidConfig(_)) => {
            eprintln!("error: {e}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn sidecar(ckpt: &Path) -> PathBuf {
    let mut s = ckpt.as_os_str().to_owned();
    s.push(".cfg");
    PathBuf::from(s)
}

fn load_model(ckpt: &Path) -> Result<(ExperimentConfig, ResNet)> {
    let cfg = ExperimentConfig::load(&sidecar(ckpt))?;
    let mut model = ResNet::build(&cfg.model, 0)?;
    checkpoint::load_into(&mut model, ckpt)?;
    Ok((cfg, model))
}

/// `dir/<split>` when present, otherwise `dir` itself.
fn load_dir(dir: &Path, split: Split, size: usize) -> Result<Dataset> {
    let nested = dir.join(split.as_str());
    let mut ds = if nested.is_dir() { load_split_dir(&nested, size)? } else { load_split_dir(dir, size)? };
    ds.split = split;
    Ok(ds)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    print!("{text}");
    let _ = std::io::stdout().flush();
    if let Some(p) = out {
        fs::write(p, text).map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train { cfg, out, attention, data, epochs, seed } => {
            let mut cfg = cfg.resolve()?;
            if let Some(k) = attention {
                cfg.model.attention = k;
            }
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(d) = &data {
                cfg.set("data.dir", &d.display().to_string())?;
            }
            cfg.validate()?;
            let size = cfg.model.input_size[0];
            let train = match &data {
                Some(d) => load_dir(d, Split::Train, size)?,
                None => load_dataset(&cfg.data_source(), Split::Train, size)?,
            };
            if train.num_classes() != cfg.model.classes {
                cfg.model.classes = train.num_classes();
                cfg.validate()?;
            }
            let mut model = ResNet::build(&cfg.model, cfg.seed)?;
            let log = train_model(&mut model, &train, &cfg.train, derive_seed(cfg.seed, &[1]), cfg.exec)?;
            checkpoint::save(&model, &out)?;
            let side = sidecar(&out);
            fs::write(&side, cfg.to_text()).map_err(|e| Error::io(&side, e))?;
            let acc = top1_accuracy(&model, &train, cfg.eval_batch)?;
            println!(
                "trained {} for {} epochs: final loss {:.4}, train accuracy {:.2}%",
                cfg.model.attention.model_label(),
                cfg.train.epochs,
                log.epoch_loss.last().copied().unwrap_or(f64::NAN),
                acc * 100.0
            );
            println!("wrote {} and {}", out.display(), side.display());
            Ok(())
        }
        Command::Eval { model, data, perturb_std, perturb_var, trials, seed, out } => {
            if trials == 0 {
                return Err(Error::InvalidConfig("--trials must be >= 1".into()));
            }
            let (cfg, net) = load_model(&model)?;
            let size = cfg.model.input_size[0];
            let test = match &data {
                Some(d) => load_dir(d, Split::Test, size)?,
                None => load_dataset(&cfg.data_source(), Split::Test, size)?,
            };
            let kind = cfg.model.attention;
            let clean = top1_accuracy(&net, &test, cfg.eval_batch)?;
            let mut text = format!("# model = {}\n# images = {}\n\n", model.display(), test.len());
            text.push_str(&format_report("Top-1 accuracy (clean)", &[TrialReport::new(kind, vec![clean])]));
            let spec = match (perturb_std, perturb_var) {
                (Some(s), _) => Some(PerturbSpec { scale: s, seed, ..PerturbSpec::default() }),
                (_, Some(v)) => Some(PerturbSpec { scale: v, interpretation: NoiseScale::Variance, seed, ..PerturbSpec::default() }),
                _ => None,
            };
            if let Some(spec) = spec {
                spec.validate()?;
                let accs = (0..trials)
                    .map(|t| {
                        let noisy = perturb_dataset(&test, &PerturbSpec { seed: spec.seed + t as u64, ..spec });
                        top1_accuracy(&net, &noisy, cfg.eval_batch)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut rows = vec![TrialReport::new(kind, accs)];
                assign_deltas(&mut rows);
                let title = format!(
                    "\nTop-1 accuracy under N({}, {:.6}) input perturbation ({}, sigma = {:.6})",
                    spec.mean,
                    spec.scale,
                    spec.interpretation,
                    spec.sigma()
                );
                text.push_str(&format_report(&title, &rows));
            }
            emit(&text, out.as_deref())
        }
        Command::PerturbEval { cfg, trials, out, checkpoints } => {
            let mut cfg = cfg.resolve()?;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            cfg.perturb_enabled = true;
            let result = run_protocol(&cfg)?;
            if let Some(dir) = &checkpoints {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                for (kind, trial, bytes) in &result.checkpoints {
                    let path = dir.join(format!("{kind}-{trial}.ckpt"));
                    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
                    let side = sidecar(&path);
                    let mut c = cfg.clone();
                    c.model.attention = *kind;
                    c.seed = cfg.seed + *trial as u64;
                    fs::write(&side, c.to_text()).map_err(|e| Error::io(&side, e))?;
                }
            }
            emit(&render_protocol(&cfg, &result), out.as_deref())
        }
        Command::Gradcam { model, image, class, out, layer, alpha, map_out } => {
            let (cfg, net) = load_model(&model)?;
            if class >= cfg.model.classes {
                return Err(Error::LabelOutOfRange { label: class, classes: cfg.model.classes });
            }
            let size = cfg.model.input_size[0];
            let gray = read_pgm(&image)?;
            let mut values = fit_to_size(&gray.values, gray.height, gray.width, size);
            min_max_normalize(&mut values);
            let x = Tensor::new([1, 1, size, size], values.clone())?;
            let layer = layer.unwrap_or_else(|| cfg.model.default_cam_layer());
            let map = gradcam_map(&net, &x, class, &layer)?;
            let base = sar_attention::data::GrayImage { width: size, height: size, values };
            write_image(&out, &Image::Rgb(overlay_heatmap(&base, &map, alpha)?))?;
            if let Some(p) = &map_out {
                let m = sar_attention::data::GrayImage { width: map.width, height: map.height, values: map.values.clone() };
                write_image(p, &Image::Gray(m))?;
            }
            println!("wrote {} (layer {layer}, class {class})", out.display());
            Ok(())
        }
        Command::SynthGen { out, classes, per_class, seed, size, split } => {
            if classes == 0 || per_class == 0 || size == 0 {
                return Err(Error::InvalidConfig("--classes, --per-class and --size must be >= 1".into()));
            }
            let cfg = SynthConfig { classes, train_per_class: per_class, test_per_class: per_class, size, seed, ..SynthConfig::default() };
            let written = match split.as_str() {
                "both" => {
                    write_synth_split(&cfg, Split::Train, &out.join("train"))?
                        + write_synth_split(&cfg, Split::Test, &out.join("test"))?
                }
                s => write_synth_split(&cfg, s.parse()?, &out)?,
            };
            println!("wrote {written} images to {}", out.display());
            Ok(())
        }
    }
}
