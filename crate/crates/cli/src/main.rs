//! Command-line entry points: scene generation, single-episode runs with
//! trace dumps, benchmark suites, map inspection, and trace replay.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};

use openguide_core::config::{Policy, RunConfig, SuiteConfig};
use openguide_core::grid::point_to_cell;
use openguide_core::harness::{run_benchmark, run_episode_observed, MapSnapshot};
use openguide_core::scenegen::{generate_scene, GeneratorSpec};
use openguide_core::trace::{read_trace, TraceRecord, TraceWriter};
use openguide_core::valuemap::{dump_raster, LayerDumpMeta};

#[derive(Parser)]
#[command(
    name = "openguide",
    version,
    about = "Multi-object search in simulated grid worlds"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate scene files procedurally.
    GenScenes {
        /// Output directory (default: $OPENGUIDE_OUT_DIR or ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of scenes; seeds run seed, seed+1, ...
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 44)]
        width: usize,
        #[arg(long, default_value_t = 36)]
        height: usize,
        #[arg(long, default_value_t = 5)]
        rooms: usize,
        #[arg(long, default_value_t = 6)]
        objects: usize,
        #[arg(long, default_value_t = 2)]
        decoys: usize,
    },
    /// Run one episode from a config file.
    Run {
        config: PathBuf,
        /// Output directory (default: $OPENGUIDE_OUT_DIR or ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write one value-layer and obstacle map dump per planning step.
        #[arg(long)]
        dump_maps: bool,
    },
    /// Run a benchmark suite and write CSV + JSON reports.
    Bench {
        suite: PathBuf,
        /// Comma-separated policy subset (default: the suite's list).
        #[arg(long, value_delimiter = ',')]
        policies: Option<Vec<String>>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Step through a recorded episode trace (read-only).
    Replay {
        trace: PathBuf,
        /// Refuse the trace unless its config digest matches.
        #[arg(long)]
        expect_digest: Option<String>,
    },
    /// Render a map dump: a value-layer matrix or an obstacle ASCII map.
    InspectMap { path: PathBuf },
}

/// Exit 2 for configuration/usage problems, 1 for tool failures.
enum AppError {
    Usage(String),
    Tool(anyhow::Error),
}

impl From<anyhow::Error> for AppError {
    fn from(e: anyhow::Error) -> Self {
        AppError::Tool(e)
    }
}

fn main() -> ExitCode {
    // Dying quietly on a closed pipe (e.g. `openguide replay ... | head`)
    // beats a panic from the default ignored-SIGPIPE state.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Tool(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("OPENGUIDE_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn dispatch(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Cmd::GenScenes {
            out,
            count,
            seed,
            width,
            height,
            rooms,
            objects,
            decoys,
        } => cmd_gen_scenes(out_dir(out), count, seed, width, height, rooms, objects, decoys),
        Cmd::Run {
            config,
            out,
            dump_maps,
        } => cmd_run(&config, out_dir(out), dump_maps),
        Cmd::Bench {
            suite,
            policies,
            jobs,
            out,
        } => cmd_bench(&suite, policies, jobs, out_dir(out)),
        Cmd::Replay {
            trace,
            expect_digest,
        } => cmd_replay(&trace, expect_digest),
        Cmd::InspectMap { path } => cmd_inspect_map(&path),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen_scenes(
    out: PathBuf,
    count: usize,
    seed: u64,
    width: usize,
    height: usize,
    rooms: usize,
    objects: usize,
    decoys: usize,
) -> Result<(), AppError> {
    if count == 0 {
        return Err(AppError::Usage("--count must be at least 1".into()));
    }
    fs::create_dir_all(&out)
        .with_context(|| format!("creating {}", out.display()))
        .map_err(AppError::Tool)?;
    for i in 0..count {
        let spec = GeneratorSpec {
            width,
            height,
            rooms,
            objects,
            decoys,
            seed: seed + i as u64,
            ..GeneratorSpec::default()
        };
        let scene = generate_scene(&spec)
            .map_err(|e| AppError::Usage(format!("generator spec invalid: {e}")))?;
        let path = out.join(format!("scene_{:04}.scene", seed + i as u64));
        fs::write(&path, scene.to_text())
            .with_context(|| format!("writing {}", path.display()))
            .map_err(AppError::Tool)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_run(config_path: &Path, out: PathBuf, dump_maps: bool) -> Result<(), AppError> {
    let config = RunConfig::load(config_path).map_err(|e| AppError::Usage(e.to_string()))?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let (scene, scene_text) = config
        .scene
        .materialize(base)
        .map_err(|e| AppError::Usage(e.to_string()))?;
    let scene_name = config
        .scene
        .file
        .as_ref()
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "generated".to_string());

    fs::create_dir_all(&out)
        .with_context(|| format!("creating {}", out.display()))
        .map_err(AppError::Tool)?;

    let maps_dir = out.join("maps");
    if dump_maps {
        fs::create_dir_all(&maps_dir)
            .with_context(|| format!("creating {}", maps_dir.display()))
            .map_err(AppError::Tool)?;
    }
    let mut dump_error: Option<anyhow::Error> = None;
    let valuemap_section = config.params.valuemap;
    let mut dumper = |snap: MapSnapshot<'_>| {
        if dump_error.is_some() {
            return;
        }
        let write_all = || -> Result<()> {
            for layer in snap.layers {
                let stem = format!("step{:04}_{}", snap.decision, layer.target);
                fs::write(maps_dir.join(format!("{stem}.txt")), dump_raster(&layer.value))?;
                let meta = LayerDumpMeta {
                    target: layer.target.clone(),
                    tau: valuemap_section.tau,
                    kappa: valuemap_section.kappa,
                    step: snap.decision,
                };
                fs::write(
                    maps_dir.join(format!("{stem}.json")),
                    serde_json::to_string_pretty(&meta)?,
                )?;
            }
            fs::write(
                maps_dir.join(format!("step{:04}_obstacles.txt", snap.decision)),
                snap.map.dump_ascii(snap.frontiers),
            )?;
            Ok(())
        };
        if let Err(e) = write_all() {
            dump_error = Some(e);
        }
    };

    let observer: Option<&mut dyn FnMut(MapSnapshot<'_>)> =
        if dump_maps { Some(&mut dumper) } else { None };
    let (outcome, trace) = run_episode_observed(
        &scene,
        &scene_name,
        &config.params,
        &config.run,
        true,
        observer,
    )
    .map_err(|e| AppError::Usage(e.to_string()))?;
    if let Some(e) = dump_error {
        return Err(AppError::Tool(e.context("writing map dumps")));
    }

    let digest = openguide_core::config::episode_digest(
        &config.params,
        config.run.policy,
        &config.run.targets,
        config.run.seed,
        &config.run.start,
        &scene_text,
    );

    let trace_path = out.join("trace.jsonl");
    let file = fs::File::create(&trace_path)
        .with_context(|| format!("writing {}", trace_path.display()))
        .map_err(AppError::Tool)?;
    let mut writer = TraceWriter::new(std::io::BufWriter::new(file));
    for record in trace.as_deref().unwrap_or(&[]) {
        writer
            .write(record)
            .map_err(|e| AppError::Tool(anyhow!(e)))?;
    }

    let result = serde_json::json!({
        "config_path": config_path.display().to_string(),
        "config_digest": digest,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "output_dir": out.display().to_string(),
        "scene": scene_name,
        "policy": config.run.policy,
        "targets": config.run.targets,
        "seed": config.run.seed,
        "outcome": outcome,
    });
    let result_path = out.join("result.json");
    fs::write(&result_path, serde_json::to_string_pretty(&result).unwrap())
        .with_context(|| format!("writing {}", result_path.display()))
        .map_err(AppError::Tool)?;

    println!(
        "episode finished: success={} steps={} path={:.2} m -> {}",
        outcome.success,
        outcome.steps,
        outcome.path_length,
        result_path.display()
    );
    Ok(())
}

fn cmd_bench(
    suite_path: &Path,
    policies: Option<Vec<String>>,
    jobs: usize,
    out: PathBuf,
) -> Result<(), AppError> {
    let suite = SuiteConfig::load(suite_path).map_err(|e| AppError::Usage(e.to_string()))?;
    let policies = match policies {
        Some(names) => Some(
            names
                .iter()
                .map(|n| Policy::parse_name(n))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| AppError::Usage(e.to_string()))?,
        ),
        None => None,
    };
    let base = suite_path.parent().unwrap_or(Path::new("."));
    let report = run_benchmark(&suite, base, policies.as_deref(), jobs)
        .map_err(|e| AppError::Usage(e.to_string()))?;

    fs::create_dir_all(&out)
        .with_context(|| format!("creating {}", out.display()))
        .map_err(AppError::Tool)?;
    let csv_path = out.join(format!("{}_episodes.csv", report.suite));
    fs::write(&csv_path, report.to_csv())
        .with_context(|| format!("writing {}", csv_path.display()))
        .map_err(AppError::Tool)?;
    let json_path = out.join(format!("{}_summary.json", report.suite));
    fs::write(&json_path, serde_json::to_string_pretty(&report).unwrap())
        .with_context(|| format!("writing {}", json_path.display()))
        .map_err(AppError::Tool)?;

    println!("suite {} digest {}", report.suite, report.config_digest);
    println!(
        "{:<14} {:>9} {:>8} {:>8} {:>11} {:>8}",
        "policy", "episodes", "invalid", "SR", "MSPL", "steps"
    );
    for s in &report.policies {
        println!(
            "{:<14} {:>9} {:>8} {:>8.3} {:>11.3} {:>8.1}",
            s.policy.name(),
            s.episodes,
            s.invalid,
            s.sr,
            s.mspl,
            s.mean_steps
        );
    }
    println!("rows -> {}", csv_path.display());
    println!("summary -> {}", json_path.display());
    Ok(())
}

fn cmd_replay(trace_path: &Path, expect_digest: Option<String>) -> Result<(), AppError> {
    let file = fs::File::open(trace_path)
        .with_context(|| format!("opening {}", trace_path.display()))
        .map_err(AppError::Tool)?;
    let records = read_trace(BufReader::new(file)).map_err(|e| AppError::Usage(e.to_string()))?;

    let Some(TraceRecord::Header {
        config_digest,
        scene_name,
        resolution,
        policy,
        targets,
        seed,
        ..
    }) = records.first()
    else {
        return Err(AppError::Usage("trace has no header record".into()));
    };
    let resolution = *resolution;
    // Digest checks: an explicit expectation, or the sibling result file.
    if let Some(expected) = expect_digest {
        if &expected != config_digest {
            return Err(AppError::Usage(format!(
                "config digest mismatch: trace has {config_digest}, expected {expected}"
            )));
        }
    } else if let Some(dir) = trace_path.parent() {
        let sibling = dir.join("result.json");
        if let Ok(text) = fs::read_to_string(&sibling) {
            if let Ok(value) = serde_json::from_str::<serde_json::Value>(&text) {
                if let Some(expected) = value.get("config_digest").and_then(|v| v.as_str()) {
                    if expected != config_digest {
                        return Err(AppError::Usage(format!(
                            "config digest mismatch: trace has {config_digest}, {} has {expected}",
                            sibling.display()
                        )));
                    }
                }
            }
        }
    }

    println!("scene {scene_name} policy {policy} targets {targets:?} seed {seed}");
    println!("config digest {config_digest}");

    let mut found: Vec<(String, f64, f64)> = Vec::new();
    let mut last_map: Option<String> = None;
    for record in &records[1..] {
        match record {
            TraceRecord::Decision {
                step,
                pursued,
                actions,
                belief,
                q,
                visits,
                chosen,
                map_ascii,
            } => {
                println!("\n== decision at step {step} ==");
                if let Some(p) = pursued {
                    println!("pursuing: {p}");
                }
                print!("{map_ascii}");
                last_map = Some(map_ascii.clone());
                for (i, a) in actions.iter().enumerate() {
                    let mark = if i == *chosen { "*" } else { " " };
                    let b = belief.get(i).map(|p| format!("{p:.3}")).unwrap_or_default();
                    let qv = q.get(i).map(|v| format!("{v:.2}")).unwrap_or_default();
                    let n = visits.get(i).map(|v| v.to_string()).unwrap_or_default();
                    println!(
                        "{mark} {:?} ({:.2}, {:.2}) belief={b} q={qv} visits={n}",
                        a.kind, a.goal.x, a.goal.y
                    );
                }
            }
            TraceRecord::Command {
                step,
                command,
                x,
                y,
                blocked,
                ..
            } => {
                let flag = if *blocked { " BLOCKED" } else { "" };
                println!("step {step}: {command:?} -> ({x:.2}, {y:.2}){flag}");
            }
            TraceRecord::Detection {
                step,
                object,
                category,
            } => println!("step {step}: detected {object} ({category})"),
            TraceRecord::Found { step, category, x, y } => {
                println!("step {step}: FOUND {category} at ({x:.2}, {y:.2})");
                found.push((category.clone(), *x, *y));
            }
            TraceRecord::End {
                success,
                steps,
                path_length,
                optimal_length,
                reason,
            } => {
                println!("\n== episode end ==");
                if let Some(map) = &last_map {
                    print!("{}", overlay_found(map, &found, resolution));
                }
                println!(
                    "success={success} steps={steps} path={path_length:.2} m optimal={optimal_length:.2} m reason={reason}"
                );
            }
            TraceRecord::Header { .. } => {
                return Err(AppError::Usage("duplicate header record".into()))
            }
        }
    }
    Ok(())
}

/// Mark found target positions with `X` on the final ASCII map frame.
fn overlay_found(map_ascii: &str, found: &[(String, f64, f64)], resolution: f64) -> String {
    let mut rows: Vec<Vec<char>> = map_ascii.lines().map(|l| l.chars().collect()).collect();
    let height = rows.len();
    let width = rows.first().map(|r| r.len()).unwrap_or(0);
    for (_, x, y) in found {
        if let Some(cell) = point_to_cell(
            openguide_core::grid::Point::new(*x, *y),
            resolution,
            width,
            height,
        ) {
            rows[cell.y][cell.x] = 'X';
        }
    }
    let mut out = String::new();
    for row in rows {
        out.extend(row);
        out.push('\n');
    }
    out
}

fn cmd_inspect_map(path: &Path) -> Result<(), AppError> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(AppError::Tool)?;
    let is_ascii_map = text
        .lines()
        .all(|l| !l.is_empty() && l.chars().all(|c| matches!(c, '?' | '.' | '#' | 'F')));
    if is_ascii_map {
        let (mut unknown, mut free, mut occupied, mut frontier) = (0usize, 0usize, 0usize, 0usize);
        for c in text.chars() {
            match c {
                '?' => unknown += 1,
                '.' => free += 1,
                '#' => occupied += 1,
                'F' => frontier += 1,
                _ => {}
            }
        }
        print!("{text}");
        println!("unknown={unknown} free={free} occupied={occupied} frontier_cells={frontier}");
        return Ok(());
    }

    // Value-layer matrix: rows of fixed-point floats.
    let mut values: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
        let row = row.map_err(|_| AppError::Usage(format!("line {}: not a value row", i + 1)))?;
        values.push(row);
    }
    if values.is_empty() {
        return Err(AppError::Usage("empty map file".into()));
    }
    let sidecar = path.with_extension("json");
    if let Ok(meta_text) = fs::read_to_string(&sidecar) {
        if let Ok(meta) = serde_json::from_str::<LayerDumpMeta>(&meta_text) {
            println!(
                "target={} tau={} kappa={} step={}",
                meta.target, meta.tau, meta.kappa, meta.step
            );
        }
    }
    let flat: Vec<f64> = values.iter().flatten().copied().collect();
    let max = flat.iter().cloned().fold(0.0f64, f64::max);
    let min = flat.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = flat.iter().sum::<f64>() / flat.len() as f64;
    println!(
        "{}x{} min={min:.4} max={max:.4} mean={mean:.4}",
        values[0].len(),
        values.len()
    );
    const SHADES: &[u8] = b" .:-=+*#%@";
    for row in &values {
        let line: String = row
            .iter()
            .map(|v| {
                let idx = if max > 0.0 {
                    ((v / max) * (SHADES.len() - 1) as f64).round() as usize
                } else {
                    0
                };
                SHADES[idx.min(SHADES.len() - 1)] as char
            })
            .collect();
        println!("{line}");
    }
    Ok(())
}
