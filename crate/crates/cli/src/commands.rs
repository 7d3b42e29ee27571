use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use qweight::backbones::write_embeddings;
use qweight::dataio::{generate_synthetic, parse_records, write_records};
use qweight::harness::{compare_reports, render_comparison, write_comparison_csv, RunReport};
use qweight::pipeline::{featurize, run_experiment};
use qweight::{Error, Result};

use crate::args::{Cli, Command, CompareArgs, FeaturizeArgs, QdumpArgs, SynthArgs, TrainArgs};
use crate::settings;

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(args) => synth(&cli, args),
        Command::Featurize(args) => featurize_cmd(&cli, args),
        Command::Train(args) => train(&cli, args),
        Command::Compare(args) => compare(&cli, args),
        Command::Qdump(args) => qdump(args),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn synth(cli: &Cli, args: &SynthArgs) -> Result<()> {
    let config = settings::load(cli)?;
    let synth = settings::synthetic(&config, &args.synthetic);
    let (records, _) = generate_synthetic(&synth)?;
    let out = args.out.clone().unwrap_or_else(|| settings::out_dir(&config).join("records.jsonl"));
    let mut w = create(&out)?;
    write_records(&mut w, &records)?;
    w.flush()?;
    let positives = records.iter().filter(|r| r.label == 1).count();
    println!(
        "wrote {} records ({} positive, {} negative) to {}",
        records.len(),
        positives,
        records.len() - positives,
        out.display()
    );
    Ok(())
}

fn featurize_cmd(cli: &Cli, args: &FeaturizeArgs) -> Result<()> {
    let mut config = settings::load(cli)?;
    settings::apply_featurize(&mut config, &args.options)?;
    let input = args
        .input
        .clone()
        .or_else(|| config.dataset.records.clone())
        .ok_or_else(|| Error::Config("featurize needs --input or dataset.records".into()))?;
    settings::require_exists(&input)?;
    let records = parse_records(BufReader::new(File::open(&input)?))?;
    let result = featurize(records, &config.featurize, config.seed)?;
    let out = args.out.clone().unwrap_or_else(|| settings::out_dir(&config).join("embeddings.bin"));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_embeddings(&out, &result.embeddings)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let set = &result.embeddings;
    println!("rows         {}", set.rows());
    println!("dim          {}", set.dim());
    println!("duplicates   {}", result.duplicates_removed);
    println!("fingerprint  {}", set.fingerprint());
    println!("written to   {}", out.display());
    Ok(())
}

fn train(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let mut config = settings::load(cli)?;
    settings::apply_train(&mut config, args)?;
    let dir = settings::out_dir(&config);
    let run = run_experiment(&config)?;

    run.report.write_all(&dir)?;
    for (k, agent) in run.agents.iter().enumerate() {
        if let Some(agent) = agent {
            let mut w = create(&dir.join(format!("qtable_fold{k}.csv")))?;
            agent.write_csv(&mut w)?;
            w.flush()?;
        }
    }
    // The echo describes the run, not where it was written.
    config.model.input_dim = run.report.dataset.dim;
    config.out_dir = None;
    let echo = toml::to_string(&config).map_err(|e| Error::Invariant(format!("config echo: {e}")))?;
    std::fs::write(dir.join("config.toml"), echo)?;

    let d = &run.report.dataset;
    println!(
        "{} samples, dim {}, {} folds, RL {}",
        d.rows,
        d.dim,
        config.folds,
        if config.rl { "on" } else { "off" }
    );
    print!("{}", run.report.headline());
    println!("report written to {}", dir.display());
    Ok(())
}

fn report_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join("report.json")
    } else {
        path.to_owned()
    }
}

fn compare(cli: &Cli, args: &CompareArgs) -> Result<()> {
    let read = |p: &Path| {
        let path = report_path(p);
        settings::require_exists(&path)?;
        RunReport::read(&path)
    };
    let baseline = read(&args.baseline)?;
    let candidate = read(&args.candidate)?;
    let rows = compare_reports(&baseline, &candidate)?;
    print!("{}", render_comparison(&rows));
    let csv_path = args.csv.clone().or_else(|| cli.out_dir.as_ref().map(|d| d.join("comparison.csv")));
    if let Some(path) = csv_path {
        let mut w = create(&path)?;
        write_comparison_csv(&rows, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

struct QRow {
    index: usize,
    q: Vec<f64>,
    last_action: usize,
    weight: f64,
}

fn read_qtable(path: &Path) -> Result<Vec<QRow>> {
    let bad = |m: String| Error::Format(format!("{}: {m}", path.display()));
    let mut reader = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let header = reader.headers()?.clone();
    let k = header.len().checked_sub(3).filter(|&k| k > 0).ok_or_else(|| bad("too few columns".into()))?;
    if &header[0] != "index" || &header[k + 1] != "last_action" || &header[k + 2] != "assigned_weight" {
        return Err(bad("not a Q-table dump".into()));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let num = |j: usize| -> Result<f64> {
            record[j].parse::<f64>().map_err(|e| bad(format!("row {}: column {j}: {e}", line + 1)))
        };
        let int = |j: usize| -> Result<usize> {
            record[j].parse::<usize>().map_err(|e| bad(format!("row {}: column {j}: {e}", line + 1)))
        };
        let last_action = int(k + 1)?;
        if last_action >= k {
            return Err(bad(format!("row {}: action {last_action} out of range", line + 1)));
        }
        rows.push(QRow {
            index: int(0)?,
            q: (1..=k).map(num).collect::<Result<_>>()?,
            last_action,
            weight: num(k + 2)?,
        });
    }
    Ok(rows)
}

fn qdump(args: &QdumpArgs) -> Result<()> {
    let path = if args.table.is_dir() {
        args.table.join(format!("qtable_fold{}.csv", args.fold))
    } else {
        args.table.clone()
    };
    settings::require_exists(&path)?;
    let rows = read_qtable(&path)?;
    let k = rows.first().map_or(0, |r| r.q.len());
    println!("{}: {} rows, {} actions", path.display(), rows.len(), k);
    if rows.is_empty() {
        return Ok(());
    }

    let mut weights = vec![f64::NAN; k];
    let mut counts = vec![0usize; k];
    let mut sums = vec![0.0; k];
    for r in &rows {
        counts[r.last_action] += 1;
        weights[r.last_action] = r.weight;
        for (s, v) in sums.iter_mut().zip(&r.q) {
            *s += v;
        }
    }
    println!("{:<7} {:>8} {:>8} {:>10}", "action", "weight", "chosen", "mean Q");
    for a in 0..k {
        let w = if weights[a].is_nan() { "-".to_owned() } else { format!("{:.2}", weights[a]) };
        println!("{a:<7} {w:>8} {:>8} {:>10.4}", counts[a], sums[a] / rows.len() as f64);
    }

    if args.top > 0 {
        let mut order: Vec<&QRow> = rows.iter().collect();
        let best = |r: &QRow| r.q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        order.sort_by(|a, b| best(b).total_cmp(&best(a)).then(a.index.cmp(&b.index)));
        println!();
        println!("{:<7} {:>8} {:>8}  q", "index", "action", "weight");
        for r in order.into_iter().take(args.top) {
            let q: Vec<String> = r.q.iter().map(|v| format!("{v:.4}")).collect();
            println!("{:<7} {:>8} {:>8.2}  {}", r.index, r.last_action, r.weight, q.join(" "));
        }
    }
    Ok(())
}
