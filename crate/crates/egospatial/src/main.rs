use std::io::{BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use egospatial::config::{Overrides, RunConfig};
use egospatial::io::{self, Header, SceneEntry};
use egospatial::report::{balance_table, stats_table};
use egospatial::run::{generate_dataset, scenes_for};
use egospatial::service::{self, ScoreReply, ServeOptions};
use egospatial_core::bbox::NormBox;
use egospatial_core::dataset::{balance_subset, corpus_stats, validate_record};
use egospatial_core::reward::ScoreMeta;
use egospatial_core::synth::scene_id;

/// Exit codes: 0 success, 2 bad usage or config, 3 data errors, 4 transport.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: e.into() }
}

fn data(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 3, error: e.into() }
}

fn transport(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 4, error: e.into() }
}

type Outcome = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "egospatial", version, about = "Spatial supervision data and rewards")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct RunFlags {
    /// JSON config file; its values override flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    scenes_per_domain: Option<usize>,
    /// Records to generate for every task.
    #[arg(long)]
    per_task: Option<usize>,
    #[arg(long)]
    min_objects: Option<usize>,
    #[arg(long)]
    max_objects: Option<usize>,
    /// Room side length in meters.
    #[arg(long)]
    room_extent: Option<f64>,
    /// Camera height in meters.
    #[arg(long)]
    camera_height: Option<f64>,
    /// Horizontal field of view in degrees.
    #[arg(long)]
    horizontal_fov: Option<f64>,
    #[arg(long)]
    min_frames: Option<usize>,
    #[arg(long)]
    attempts_per_record: Option<usize>,
    /// Balanced-subset size per task.
    #[arg(long)]
    quota_per_task: Option<usize>,
    /// Balanced-subset size per source bucket.
    #[arg(long)]
    quota_per_bucket: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    max_in_flight: Option<usize>,
}

impl RunFlags {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let o = Overrides {
            seed: self.seed,
            scenes_per_domain: self.scenes_per_domain,
            per_task: self.per_task,
            min_objects: self.min_objects,
            max_objects: self.max_objects,
            room_extent: self.room_extent,
            camera_height: self.camera_height,
            horizontal_fov: self.horizontal_fov,
            min_frames: self.min_frames,
            attempts_per_record: self.attempts_per_record,
            quota_per_task: self.quota_per_task,
            quota_per_bucket: self.quota_per_bucket,
            workers: self.workers,
            max_in_flight: self.max_in_flight,
        };
        RunConfig::resolve(&o, self.config.as_deref()).map_err(usage)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic scenes.
    GenScenes {
        #[command(flatten)]
        run: RunFlags,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate task records for every task and domain.
    GenDataset {
        #[command(flatten)]
        run: RunFlags,
        /// Scenes file from gen-scenes; generated from the seed when absent.
        #[arg(long)]
        scenes: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Generation threads; defaults to the available parallelism.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check every record and report rejections.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
    /// Select a subset meeting the per-task and per-bucket quotas.
    Balance {
        #[command(flatten)]
        run: RunFlags,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute corpus statistics.
    Stats {
        #[command(flatten)]
        run: RunFlags,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the statistics table of a stats file.
    Report {
        #[arg(long)]
        input: PathBuf,
    },
    /// Score one response and print the reply.
    Score {
        #[arg(long)]
        task: String,
        #[arg(long)]
        response: String,
        #[arg(long)]
        reference: String,
        /// Ground-truth box for D1 as four comma-separated integers.
        #[arg(long, value_delimiter = ',')]
        gt_box: Option<Vec<i32>>,
    },
    /// Answer scoring requests on stdin, or on a TCP address.
    Serve {
        #[command(flatten)]
        run: RunFlags,
        /// Address to listen on, e.g. 127.0.0.1:7070.
        #[arg(long)]
        listen: Option<String>,
    },
}

fn gen_scenes(run: &RunFlags, out: &Path) -> Outcome {
    let cfg = run.resolve()?;
    let scenes = scenes_for(&cfg.gen_config()).map_err(usage)?;
    let entries: Vec<SceneEntry> = scenes
        .into_iter()
        .enumerate()
        .map(|(i, scene)| SceneEntry { id: scene_id(i), scene })
        .collect();
    io::write_jsonl(out, &Header::new("scenes", &cfg), &entries).map_err(transport)?;
    eprintln!("wrote {} scenes to {}", entries.len(), out.display());
    Ok(())
}

fn gen_dataset(run: &RunFlags, scenes: Option<&Path>, out: &Path, threads: Option<usize>) -> Outcome {
    let cfg = run.resolve()?;
    let gen = cfg.gen_config();
    let scenes = match scenes {
        Some(p) => {
            let (_, entries) = io::read_scenes(p).map_err(data)?;
            if entries.len() != 2 * gen.scenes_per_domain {
                return Err(data(anyhow::anyhow!(
                    "{} holds {} scenes, config expects {}",
                    p.display(),
                    entries.len(),
                    2 * gen.scenes_per_domain
                )));
            }
            entries.into_iter().map(|e| e.scene).collect()
        }
        None => scenes_for(&gen).map_err(usage)?,
    };
    let threads = threads
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1);
    let records = generate_dataset(&gen, &scenes, threads).map_err(data)?;
    io::write_jsonl(out, &Header::new("records", &cfg), &records).map_err(transport)?;
    eprintln!("wrote {} records to {}", records.len(), out.display());
    Ok(())
}

fn validate(input: &Path) -> Outcome {
    let (_, records) = io::read_records(input).map_err(data)?;
    let mut rejected = 0;
    let stdout = std::io::stdout();
    let mut w = BufWriter::new(stdout.lock());
    for r in &records {
        if let Err(rej) = validate_record(r) {
            rejected += 1;
            writeln!(w, "{}\t{}\t{}", r.id, rej.reason.code(), rej.detail).map_err(transport)?;
        }
    }
    w.flush().map_err(transport)?;
    eprintln!("{} records, {} rejected", records.len(), rejected);
    if rejected > 0 {
        return Err(data(anyhow::anyhow!("{rejected} records failed validation")));
    }
    Ok(())
}

fn balance(run: &RunFlags, input: &Path, out: &Path) -> Outcome {
    let cfg = run.resolve()?;
    let (_, records) = io::read_records(input).map_err(data)?;
    let (subset, report) = balance_subset(&records, &cfg.quota, cfg.seed).map_err(data)?;
    io::write_jsonl(out, &Header::new("records", &cfg), &subset).map_err(transport)?;
    print!("{}", balance_table(&report));
    eprintln!("wrote {} records to {}", subset.len(), out.display());
    Ok(())
}

fn stats(run: &RunFlags, input: &Path, out: &Path) -> Outcome {
    let cfg = run.resolve()?;
    let (_, records) = io::read_records(input).map_err(data)?;
    let s = corpus_stats(&records);
    io::write_jsonl(out, &Header::new("stats", &cfg), std::slice::from_ref(&s)).map_err(transport)?;
    print!("{}", stats_table(&s));
    Ok(())
}

fn report(input: &Path) -> Outcome {
    let (_, s) = io::read_stats(input).map_err(data)?;
    print!("{}", stats_table(&s));
    Ok(())
}

fn score(task: &str, response: &str, reference: &str, gt_box: Option<&[i32]>) -> Outcome {
    if gt_box.is_some_and(|b| b.len() != 4) {
        return Err(usage(anyhow::anyhow!("--gt-box takes exactly four integers")));
    }
    let meta = gt_box.map(|b| ScoreMeta {
        gt_box: Some(NormBox::new(b[0], b[1], b[2], b[3])),
    });
    let req = service::ScoreRequest {
        id: serde_json::Value::Null,
        task: task.into(),
        response: response.into(),
        reference: reference.into(),
        meta,
    };
    let reply: ScoreReply = service::handle_request(&req);
    println!("{}", serde_json::to_string(&reply).expect("reply serializes"));
    match reply.error {
        Some(code) => Err(usage(anyhow::anyhow!("{code}"))),
        None => Ok(()),
    }
}

fn serve(run: &RunFlags, listen: Option<&str>) -> Outcome {
    let cfg = run.resolve()?;
    let opts = ServeOptions {
        workers: cfg.service.workers,
        max_in_flight: cfg.service.max_in_flight,
    };
    match listen {
        Some(addr) => {
            let listener = TcpListener::bind(addr)
                .with_context(|| format!("cannot listen on {addr}"))
                .map_err(transport)?;
            eprintln!("listening on {}", listener.local_addr().map_err(transport)?);
            Err(transport(service::serve_tcp(listener, opts)))
        }
        None => {
            let stdin = std::io::stdin();
            let summary = service::serve_batch(BufReader::new(stdin.lock()), std::io::stdout(), opts)
                .map_err(transport)?;
            eprintln!("{} requests, {} replies", summary.requests, summary.replies);
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::GenScenes { run, out } => gen_scenes(&run, &out),
        Command::GenDataset {
            run,
            scenes,
            out,
            threads,
        } => gen_dataset(&run, scenes.as_deref(), &out, threads),
        Command::Validate { input } => validate(&input),
        Command::Balance { run, input, out } => balance(&run, &input, &out),
        Command::Stats { run, input, out } => stats(&run, &input, &out),
        Command::Report { input } => report(&input),
        Command::Score {
            task,
            response,
            reference,
            gt_box,
        } => score(&task, &response, &reference, gt_box.as_deref()),
        Command::Serve { run, listen } => serve(&run, listen.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
