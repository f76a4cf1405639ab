use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use tilda::harness::{
    gen_synthetic, render, run_experiment, run_experiment_traced, DatasetFile, ExperimentOptions, ReportFormat,
    RunConfig, StreamOrder, SyntheticSpec, TrainingLog, Variant,
};
use tilda::model::quantize_features;
use tilda::{
    resource_report, timing_report, AnchorBank, Error, FeatureVector, LpMode, ReciprocalLut, Result, SimMachine,
    StageFormats, TraceRecord,
};

#[derive(Parser)]
#[command(name = "tilda", version, about = "Incremental anchor-vector classifier and accelerator model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic train/test pair (`.csv` paths are written as CSV).
    GenData {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_train: PathBuf,
        #[arg(long)]
        out_test: PathBuf,
    },
    /// Stream a dataset through a fresh model and save it.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Write the slot chosen for every (example, part) as CSV.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Predict every group of a dataset with a saved bank or machine snapshot.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and evaluate the requested variants in one pass.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value = "float,quant,sim")]
        variants: String,
        #[arg(long, default_value = "text")]
        format: String,
    },
    /// Run the cycle-stepped machine and write its per-cycle trace.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Print cycle counts, latencies and resource figures for a configuration.
    ReportResources {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "text")]
        format: String,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn save_dataset(ds: &DatasetFile, path: &Path) -> Result<()> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        ds.write_csv(create(path)?)
    } else {
        ds.save(path)
    }
}

fn load_for(path: &Path, cfg: &RunConfig) -> Result<DatasetFile> {
    DatasetFile::load(path, Some(cfg.model.classes))
}

fn gen_data(spec: &Path, out_train: &Path, out_test: &Path) -> Result<()> {
    let spec = SyntheticSpec::from_file(spec)?;
    let data = gen_synthetic(&spec)?;
    save_dataset(&data.train, out_train)?;
    save_dataset(&data.test, out_test)?;
    println!(
        "wrote {} training and {} test records; nearest-center accuracy {:.4}",
        data.train.records.len(),
        data.test.records.len(),
        data.nearest_center_accuracy()
    );
    Ok(())
}

fn train(config: &Path, data: &Path, model: &Path, log_path: Option<&Path>) -> Result<()> {
    let cfg = RunConfig::from_file(config)?;
    let ds = load_for(data, &cfg)?;
    if ds.dim != cfg.model.dim || ds.classes != cfg.model.classes {
        return Err(Error::Config(format!(
            "data has T={} C={}, config expects T={} C={}",
            ds.dim, ds.classes, cfg.model.dim, cfg.model.classes
        )));
    }
    let order = StreamOrder::Shuffled(cfg.stream_seed).indices(&ds.records);
    let stream = order.iter().map(|&i| ds.records[i].to_feature_vector());
    let mut log = TrainingLog::new();
    let mut n = 0u64;
    if cfg.quantize {
        let formats = StageFormats::PAPER;
        let mut machine = SimMachine::new(cfg.model, formats, Arc::new(ReciprocalLut::default()))?;
        let res = formats.feature_anchor.resolution();
        for x in stream {
            let q = quantize_features(&x.values, formats.feature_anchor)?;
            let class = x.label.expect("dataset records are labeled");
            machine.sim_learn(&q, class)?;
            if log_path.is_some() {
                let on_grid = FeatureVector::labeled(q.iter().map(|&r| r as f64 * res).collect(), class, x.group);
                log.record(n, &on_grid, &machine.last_selection());
            }
            n += 1;
        }
        machine.write_snapshot(create(model)?)?;
        println!("learned {n} examples on the simulated machine in {} cycles", machine.cycle_count());
    } else {
        let mut bank = AnchorBank::new(cfg.model)?;
        bank.learn_stream(stream, |x, slots| {
            if log_path.is_some() {
                log.record(n, x, slots);
            }
            n += 1;
        })?;
        bank.write_to(create(model)?)?;
        println!("learned {n} examples");
    }
    if let Some(path) = log_path {
        log.write_csv(create(path)?)?;
    }
    Ok(())
}

fn predict(model: &Path, data: &Path, out: &Path) -> Result<()> {
    let bytes = std::fs::read(model)?;
    let mut predict_group: Box<dyn FnMut(&[FeatureVector]) -> Result<usize>> = if bytes.starts_with(AnchorBank::MAGIC)
    {
        let bank = AnchorBank::read_from(&bytes[..])?;
        Box::new(move |xs| Ok(bank.predict_group(xs)?.final_class))
    } else if bytes.starts_with(tilda::hwsim::SNAPSHOT_MAGIC) {
        let mut machine = SimMachine::read_snapshot(&bytes[..], Arc::new(ReciprocalLut::default()))?;
        if machine.lp_mode() != LpMode::Process {
            machine.set_mode(LpMode::Process)?;
        }
        let fa = machine.formats().feature_anchor;
        Box::new(move |xs| {
            let qs = xs
                .iter()
                .map(|x| quantize_features(&x.values, fa))
                .collect::<Result<Vec<_>>>()?;
            Ok(machine.sim_classify(&qs)?.0)
        })
    } else {
        return Err(Error::Usage(format!("{} is neither an anchor bank nor a machine snapshot", model.display())));
    };

    let ds = DatasetFile::load(data, None)?;
    let mut w = create(out)?;
    writeln!(w, "group,label,predicted")?;
    let (mut correct, mut total) = (0, 0);
    for g in ds.groups() {
        let xs: Vec<FeatureVector> = g.iter().map(|r| r.to_feature_vector()).collect();
        let predicted = predict_group(&xs)?;
        writeln!(w, "{},{},{}", g[0].group, g[0].label, predicted)?;
        correct += usize::from(predicted == g[0].label as usize);
        total += 1;
    }
    w.flush()?;
    println!("{total} groups, accuracy {:.4}", if total > 0 { correct as f64 / total as f64 } else { 0.0 });
    Ok(())
}

fn options(cfg: &RunConfig, variants: Vec<Variant>) -> ExperimentOptions {
    let mut opts = ExperimentOptions::new(cfg.model, variants, StreamOrder::Shuffled(cfg.stream_seed));
    opts.frequency_hz = cfg.frequency_hz();
    opts
}

fn eval(config: &Path, train: &Path, test: &Path, variants: &str, format: &str) -> Result<()> {
    let format: ReportFormat = format.parse()?;
    let variants = Variant::parse_list(variants)?;
    let cfg = RunConfig::from_file(config)?;
    let (train, test) = (load_for(train, &cfg)?, load_for(test, &cfg)?);
    let result = run_experiment(&train, &test, &options(&cfg, variants))?;
    print!("{}", render(&result, format));
    Ok(())
}

fn simulate(config: &Path, train: &Path, test: &Path, trace: &Path) -> Result<()> {
    let cfg = RunConfig::from_file(config)?;
    let (train, test) = (load_for(train, &cfg)?, load_for(test, &cfg)?);
    let mut w = create(trace)?;
    writeln!(w, "{}", TraceRecord::HEADER)?;
    let result = run_experiment_traced(&train, &test, &options(&cfg, vec![Variant::HwSim]), Some(&mut w))?;
    w.flush()?;
    print!("{}", render(&result, ReportFormat::Text));
    Ok(())
}

fn report_resources(config: &Path, format: &str) -> Result<()> {
    let cfg = RunConfig::from_file(config)?;
    let timing = timing_report(&cfg.model, cfg.frequency_hz())?;
    let res = resource_report(&cfg.model);
    match format {
        "text" => {
            println!("learn cycles per vector: {}", timing.learn_cycles_per_vector);
            println!("classify cycles: {}", timing.classify_cycles);
            println!("learn latency: {} ns", tilda::harness::sig6(timing.learn_latency_ns));
            println!("classify latency: {} ns", tilda::harness::sig6(timing.classify_latency_ns));
            println!("anchor memory: {} bits", res.anchor_memory_bits);
            println!("counter memory: {} bits", res.counter_memory_bits);
            println!("total memory: {} bits", res.total_memory_bits);
            println!("DSP: {}", res.dsp_count);
        }
        "json" => println!("{}", serde_json::json!({ "timing": timing, "resources": res })),
        other => return Err(Error::Usage(format!("unknown format {other:?} (expected text or json)"))),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData {
            spec,
            out_train,
            out_test,
        } => gen_data(&spec, &out_train, &out_test),
        Command::Train {
            config,
            data,
            model,
            log,
        } => train(&config, &data, &model, log.as_deref()),
        Command::Predict { model, data, out } => predict(&model, &data, &out),
        Command::Eval {
            config,
            train,
            test,
            variants,
            format,
        } => eval(&config, &train, &test, &variants, &format),
        Command::Simulate {
            config,
            train,
            test,
            trace,
        } => simulate(&config, &train, &test, &trace),
        Command::ReportResources { config, format } => report_resources(&config, &format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
