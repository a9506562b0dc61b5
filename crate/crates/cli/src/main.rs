//! `adasmooth` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adasmooth::harness::{
    compare, gradcheck_suite, quadratic_trajectory, run_experiment, write_trajectory, write_trajectory_csv, DatasetKind,
    ExperimentConfig, ModelConfig, RunOutput, DATA_DIR_ENV,
};
use adasmooth::optim::{OptimizerInit, OptimizerRegistry, WindowMode};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "adasmooth", version, about = "AdaSmooth optimizer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration and write its metrics.
    Run(CommonArgs),
    /// Train several optimizers on shared data, initialization and batch orders.
    Compare(CommonArgs),
    /// Trace an optimizer on the ravine quadratic and emit the trajectory as CSV.
    Quadratic(QuadraticArgs),
    /// Check every model's analytic gradient against finite differences.
    Gradcheck(GradcheckArgs),
    /// List the registered optimizers and their defaults.
    Optimizers,
}

#[derive(Args, Debug, Default)]
struct HyperArgs {
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    rho1: Option<f64>,
    #[arg(long)]
    rho2: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON config; for `compare` either one config or an array of configs.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Optimizer name; `compare` takes a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    optimizer: Vec<String>,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
    /// mnist, census or blobs.
    #[arg(long)]
    dataset: Option<DatasetKind>,
    /// quadratic, logreg or mlp.
    #[arg(long)]
    model: Option<String>,
    /// Seeded subsample of the training rows.
    #[arg(long)]
    subset: Option<usize>,
    /// epoch (window restarts every epoch) or growing.
    #[arg(long)]
    window: Option<WindowMode>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also dump every batch loss.
    #[arg(long)]
    per_batch: bool,
}

#[derive(Args, Debug)]
struct QuadraticArgs {
    #[arg(long, default_value = "sgd")]
    optimizer: String,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    #[arg(long, default_value = "growing")]
    window: WindowMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 20)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl HyperArgs {
    fn apply(&self, hp: &mut adasmooth::optim::HyperParams) {
        if let Some(v) = self.eta {
            hp.eta = v;
        }
        if let Some(v) = self.rho {
            hp.rho = v;
        }
        if let Some(v) = self.rho1 {
            hp.rho1 = v;
        }
        if let Some(v) = self.rho2 {
            hp.rho2 = v;
        }
        if let Some(v) = self.epsilon {
            hp.epsilon = v;
        }
    }
}

impl CommonArgs {
    /// Config documents in file order: the file's contents, or one empty document.
    fn documents(&self) -> Result<Vec<Value>> {
        match &self.config {
            None => Ok(vec![Value::Object(Default::default())]),
            Some(p) => match read_json(p)? {
                Value::Array(docs) => Ok(docs),
                doc => Ok(vec![doc]),
            },
        }
    }

    fn apply(&self, mut doc: Value, optimizer: Option<&str>) -> Result<ExperimentConfig> {
        if let (Some(name), Value::Object(map)) = (optimizer, &mut doc) {
            map.insert("optimizer".into(), Value::String(name.into()));
        }
        let mut cfg = ExperimentConfig::from_json_value(doc)?;
        self.hyper.apply(&mut cfg.hyper);
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.model {
            cfg.model = ModelConfig::parse(v)?;
            if cfg.model == ModelConfig::Quadratic {
                cfg.dataset.kind = DatasetKind::None;
            }
        }
        if let Some(v) = self.dataset {
            cfg.dataset.kind = v;
        }
        if self.data_dir.is_some() {
            cfg.dataset.data_dir = self.data_dir.clone();
        }
        if self.subset.is_some() {
            cfg.dataset.subset = self.subset;
        }
        if let Some(v) = self.window {
            cfg.window = v;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        cfg.per_batch |= self.per_batch;
        cfg.validate(&OptimizerRegistry::builtin())?;
        Ok(cfg)
    }

    fn configs(&self) -> Result<Vec<ExperimentConfig>> {
        let docs = self.documents()?;
        let mut out = Vec::new();
        if self.optimizer.is_empty() {
            for d in docs {
                out.push(self.apply(d, None)?);
            }
        } else {
            for d in &docs {
                for name in &self.optimizer {
                    out.push(self.apply(d.clone(), Some(name))?);
                }
            }
        }
        Ok(out)
    }
}

fn print_run(out: &RunOutput) {
    for r in &out.records {
        let pct = |v: Option<f64>| v.map_or("-".to_string(), |a| format!("{:.2}%", a * 100.0));
        eprintln!(
            "epoch {:>4}  loss {:.6}  train acc {}  test acc {}",
            r.epoch,
            r.train_loss,
            pct(r.train_accuracy),
            pct(r.test_accuracy)
        );
    }
    for n in &out.notes {
        eprintln!("note: {n}");
    }
}

fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

fn cmd_run(args: CommonArgs) -> Result<()> {
    let cfgs = args.configs()?;
    let [cfg] = cfgs.as_slice() else {
        bail!("run takes exactly one configuration; use `compare` for several");
    };
    let out = run_experiment(cfg)?;
    print_run(&out);
    if let Some(best) = out.best_train_accuracy() {
        println!("{}: best train accuracy {:.2}%", cfg.display_label(), best * 100.0);
    }
    if let Some(dir) = &cfg.out {
        eprintln!("wrote {}", dir.display());
    }
    Ok(())
}

fn cmd_compare(args: CommonArgs) -> Result<()> {
    let mut cfgs = args.configs()?;
    let root = cfgs.first().and_then(|c| c.out.clone());
    for c in &mut cfgs {
        if let Some(dir) = &root {
            c.out = Some(dir.join(slug(&c.display_label())));
        }
    }
    let cmp = compare(&cfgs)?;
    let table = cmp.best_table().to_csv_string()?;
    if let Some(dir) = &root {
        cmp.write_wide_csv(&dir.join("compare.csv"))?;
        std::fs::write(dir.join("best_accuracy.csv"), &table)?;
        eprintln!("wrote {}", dir.display());
    }
    print!("{table}");
    Ok(())
}

fn cmd_quadratic(args: QuadraticArgs) -> Result<()> {
    let reg = OptimizerRegistry::builtin();
    let mut hp = reg.defaults(&args.optimizer)?;
    args.hyper.apply(&mut hp);
    let init = OptimizerInit::new(2)
        .with_window(args.window)
        .with_rng(adasmooth::Rng::derive(args.seed, adasmooth::rng::streams::OPTIMIZER));
    let mut opt = reg.build(&args.optimizer, hp, init)?;
    let points = quadratic_trajectory(opt.as_mut(), args.iterations)?;
    match &args.out {
        Some(p) => {
            write_trajectory_csv(&points, p)?;
            let last = points.last().expect("start point");
            eprintln!(
                "final x = ({:.6}, {:.6}), loss {:.6}; wrote {}",
                last.x[0],
                last.x[1],
                last.loss,
                p.display()
            );
        }
        None => write_trajectory(&points, std::io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_gradcheck(args: GradcheckArgs) -> Result<bool> {
    let reports = gradcheck_suite(args.draws, args.seed)?;
    let mut ok = true;
    for r in &reports {
        println!(
            "{:<10} draws {:>3}  max relative error {:.3e}  {}",
            r.model,
            r.draws,
            r.max_relative_error,
            if r.passed() { "ok" } else { "FAIL" }
        );
        ok &= r.passed();
    }
    Ok(ok)
}

fn cmd_optimizers() {
    for e in OptimizerRegistry::builtin().entries() {
        let hp = e.defaults;
        println!(
            "{:<17} eta={} rho={} rho1={} rho2={} epsilon={}  {}",
            e.name, hp.eta, hp.rho, hp.rho1, hp.rho2, hp.epsilon, e.description
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a).map(|_| true),
        Command::Compare(a) => cmd_compare(a).map(|_| true),
        Command::Quadratic(a) => cmd_quadratic(a).map(|_| true),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::Optimizers => {
            cmd_optimizers();
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
