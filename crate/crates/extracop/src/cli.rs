//! Command-line front end: generate, perturb, analyze, validate, bench.
//!
//! Every run writes a JSON manifest next to its output echoing the effective
//! parameters and seeds, so any output file plus its manifest reproduces the
//! run. Manifests carry no timestamps; equal inputs give byte-identical
//! outputs.

use crate::generators::{
    generate_fcc_with_extrinsic_stacking_fault, generate_lattice, generate_penrose_vertices,
    generate_poisson_disk, FaultSpec, LatticeKind, LatticeSpec, PackingSpec,
};
use crate::neighborhoods::{robust_voronoi_neighborhood, PerturbationConfig};
use crate::seed::SeedPolicy;
use crate::system::ParticleSystem;
use crate::thermal::{apply_thermal_displacements, ThermalMode, ThermalSpec};
use crate::validate::{self, interior_indices, ValidationScale};
use crate::xyz::{read_xyz_file, write_xyz_file};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(
    name = "extracop",
    version,
    about = "Robustified Voronoi neighborhoods and extracopularity analysis"
)]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "EXTRACOP_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a reference system and write it as extended XYZ.
    Generate(GenerateArgs),
    /// Apply thermal displacements to an XYZ file.
    Perturb(PerturbArgs),
    /// Score each particle's neighborhood; writes CSV (and optional JSON).
    Analyze(AnalyzeArgs),
    /// Run the desk-scale validation suite.
    Validate(ValidateArgs),
    /// Time the full pipeline on a generated fcc crystal.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// One of the lattice names (hexagonal, square, centered-rectangular,
    /// rectangular, oblique, fcc, hcp, bcc, simple-cubic,
    /// primitive-monoclinic), or penrose, poisson-2d, poisson-3d, fcc-fault.
    #[arg(long)]
    pub kind: String,
    /// Lattice repetitions per axis, e.g. 6,6,6.
    #[arg(long, value_delimiter = ',', num_args = 1..=3, default_value = "6,6,6")]
    pub extent: Vec<u32>,
    /// Conventional-cell ratio a2/a1 where applicable.
    #[arg(long)]
    pub ratio_b: Option<f64>,
    /// Conventional-cell ratio a3/a1 where applicable.
    #[arg(long)]
    pub ratio_c: Option<f64>,
    /// Oblique/monoclinic angle in degrees.
    #[arg(long)]
    pub angle: Option<f64>,
    /// Penrose patch size (grid lines per family: -size..=size).
    #[arg(long, default_value_t = 6)]
    pub size: u32,
    /// Poisson-disk box edges, e.g. 50,50 or 20,20,20.
    #[arg(long = "box", value_delimiter = ',', num_args = 2..=3)]
    pub box_edges: Option<Vec<f64>>,
    /// Poisson-disk minimum pairwise distance.
    #[arg(long, default_value_t = 1.0)]
    pub min_distance: f64,
    /// Poisson-disk candidate attempts per active point.
    #[arg(long, default_value_t = 30)]
    pub attempts: u32,
    /// Stacking triples for fcc-fault (planes = 3*triples + 1).
    #[arg(long, default_value_t = 5)]
    pub triples: u32,
    /// Index of the inserted plane for fcc-fault.
    #[arg(long, default_value_t = 7)]
    pub fault_plane: u32,
    #[arg(long, env = "EXTRACOP_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, value_parser = parse_mode, default_value = "correlated")]
    pub mode: ThermalMode,
    /// Temperature in kelvin (copper calibration: 0.036 rms fraction at 300 K).
    #[arg(long, conflicts_with = "rms_fraction")]
    pub temperature: Option<f64>,
    /// Direct rms displacement fraction of the median nearest-neighbor distance.
    #[arg(long)]
    pub rms_fraction: Option<f64>,
    /// Zero correlations beyond this normalized distance.
    #[arg(long)]
    pub correlation_cutoff: Option<f64>,
    #[arg(long, env = "EXTRACOP_SEED", default_value_t = 0)]
    pub seed: u64,
}

fn parse_mode(s: &str) -> std::result::Result<ThermalMode, String> {
    match s {
        "correlated" => Ok(ThermalMode::Correlated),
        "uncorrelated" => Ok(ThermalMode::Uncorrelated),
        other => Err(format!("mode must be correlated or uncorrelated, got {other}")),
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// CSV output path.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Optional JSON output path.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Perturbation scale as a fraction of the median nearest-neighbor distance.
    #[arg(long, env = "EXTRACOP_SIGMA", default_value_t = 0.1)]
    pub sigma: f64,
    /// Naive-neighborhood tolerance bounding the candidate set.
    #[arg(long, env = "EXTRACOP_TAU", default_value_t = 1.0 / 3.0)]
    pub tau: f64,
    #[arg(long, env = "EXTRACOP_MAX_SAMPLES", default_value_t = 128)]
    pub max_samples: u32,
    #[arg(long, env = "EXTRACOP_RMSE_THRESHOLD", default_value_t = 5.0)]
    pub rmse_threshold: f64,
    #[arg(long, env = "EXTRACOP_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Drop particles within this many median nearest-neighbor distances of
    /// the hull of an open system.
    #[arg(long, default_value_t = 0.0)]
    pub interior_margin: f64,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Reduced workload for a fast smoke run.
    #[arg(long)]
    pub quick: bool,
    /// Also run the (slow) million-particle soft throughput check.
    #[arg(long)]
    pub full_bench: bool,
    /// Discretization threshold for the analyze-based blocks; values far
    /// from 5 degrees make the reference reproductions fail and show why.
    #[arg(long, env = "EXTRACOP_RMSE_THRESHOLD", default_value_t = 5.0)]
    pub rmse_threshold: f64,
    #[arg(long, env = "EXTRACOP_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Write the structured report here as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 100_000)]
    pub particles: usize,
    #[arg(long, env = "EXTRACOP_SEED", default_value_t = 0)]
    pub seed: u64,
}

fn write_manifest(output: &Path, body: serde_json::Value) -> Result<()> {
    let path = manifest_path(output);
    let text = serde_json::to_string_pretty(&body).map_err(|e| Error::Domain(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let mut extent = [6u32; 3];
    for (i, &e) in args.extent.iter().take(3).enumerate() {
        extent[i] = e;
    }
    let seed = SeedPolicy::new(args.seed);
    let system: ParticleSystem = match args.kind.as_str() {
        "penrose" => generate_penrose_vertices(args.size)?.system,
        "poisson-2d" | "poisson-3d" => {
            let dim2 = args.kind == "poisson-2d";
            let edges = args.box_edges.clone().ok_or_else(|| {
                Error::Domain("poisson packings need --box edge lengths".into())
            })?;
            let mut b = [0.0f64; 3];
            for (i, &e) in edges.iter().take(3).enumerate() {
                b[i] = e;
            }
            if dim2 && edges.len() != 2 || !dim2 && edges.len() != 3 {
                return Err(Error::Domain(format!(
                    "--box needs {} edges for {}",
                    if dim2 { 2 } else { 3 },
                    args.kind
                )));
            }
            let mut spec = PackingSpec::new(dim2, args.min_distance, b, seed);
            spec.attempts = args.attempts;
            generate_poisson_disk(&spec)?
        }
        "fcc-fault" => {
            generate_fcc_with_extrinsic_stacking_fault(&FaultSpec {
                nx: extent[0],
                ny: extent[1],
                triples: args.triples,
                fault_plane: args.fault_plane,
            })?
            .system
        }
        name => {
            let kind = LatticeKind::from_name(name).ok_or_else(|| {
                Error::Domain(format!("unknown system kind {name:?}"))
            })?;
            let mut spec = LatticeSpec::new(kind, extent);
            spec.ratio_b = args.ratio_b;
            spec.ratio_c = args.ratio_c;
            spec.angle_deg = args.angle;
            generate_lattice(&spec)?
        }
    };
    write_xyz_file(&args.output, &system)?;
    write_manifest(
        &args.output,
        json!({
            "command": "generate",
            "kind": args.kind,
            "extent": extent,
            "ratio_b": args.ratio_b,
            "ratio_c": args.ratio_c,
            "angle": args.angle,
            "size": args.size,
            "box": args.box_edges,
            "min_distance": args.min_distance,
            "attempts": args.attempts,
            "triples": args.triples,
            "fault_plane": args.fault_plane,
            "seed": args.seed,
            "particles": system.len(),
            "output": args.output,
        }),
    )?;
    println!("wrote {} particles to {}", system.len(), args.output.display());
    Ok(())
}

fn cmd_perturb(args: &PerturbArgs) -> Result<()> {
    let system = read_xyz_file(&args.input)?;
    let seed = SeedPolicy::new(args.seed);
    let spec = match (args.temperature, args.rms_fraction) {
        (Some(t), None) => ThermalSpec::with_temperature(args.mode, t, seed),
        (None, Some(f)) => ThermalSpec::with_rms_fraction(args.mode, f, seed),
        (None, None) => ThermalSpec::with_temperature(args.mode, 300.0, seed),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let spec = ThermalSpec {
        correlation_cutoff: args.correlation_cutoff,
        ..spec
    };
    let displaced = apply_thermal_displacements(&system, &spec)?;
    write_xyz_file(&args.output, &displaced)?;
    write_manifest(
        &args.output,
        json!({
            "command": "perturb",
            "input": args.input,
            "mode": spec.mode,
            "rms_fraction": spec.rms_fraction,
            "temperature": args.temperature,
            "correlation_cutoff": args.correlation_cutoff,
            "seed": args.seed,
            "particles": displaced.len(),
            "output": args.output,
        }),
    )?;
    println!(
        "perturbed {} particles (rms fraction {:.4})",
        displaced.len(),
        spec.rms_fraction
    );
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let system = read_xyz_file(&args.input)?;
    let mut config = PerturbationConfig::new(SeedPolicy::new(args.seed));
    config.sigma_fraction = args.sigma;
    config.tau = args.tau;
    config.max_samples = args.max_samples;
    let map = robust_voronoi_neighborhood(&system, &config)?;
    let results = crate::extracop::analyze(&system, &map, args.rmse_threshold)?;
    let keep: Vec<usize> = interior_indices(&system, args.interior_margin);
    let kept: Vec<&crate::extracop::ExtracopResult> =
        keep.iter().map(|&i| &results[i]).collect();

    let mut csv = String::from("index,k,unique_angles,E,delta\n");
    for r in &kept {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.index, r.k, r.unique_angles, r.e, r.delta
        ));
    }
    std::fs::write(&args.output, csv)?;
    if let Some(jpath) = &args.json {
        let rows: Vec<_> = kept
            .iter()
            .map(|r| {
                json!({
                    "index": r.index,
                    "k": r.k,
                    "unique_angles": r.unique_angles,
                    "E": r.e,
                    "delta": r.delta,
                })
            })
            .collect();
        std::fs::write(
            jpath,
            serde_json::to_string_pretty(&rows).map_err(|e| Error::Domain(e.to_string()))? + "\n",
        )?;
    }
    write_manifest(
        &args.output,
        json!({
            "command": "analyze",
            "input": args.input,
            "sigma": args.sigma,
            "tau": args.tau,
            "max_samples": args.max_samples,
            "convergence_window": config.convergence_window,
            "rmse_threshold": args.rmse_threshold,
            "seed": args.seed,
            "interior_margin": args.interior_margin,
            "particles": system.len(),
            "rows": kept.len(),
            "samples_used": map.samples_used(),
            "converged": map.converged(),
            "output": args.output,
            "json": args.json,
        }),
    )?;
    println!(
        "analyzed {} particles ({} rows after margin, {} samples)",
        system.len(),
        kept.len(),
        map.samples_used()
    );
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<i32> {
    let scale = if args.quick {
        ValidationScale::quick()
    } else {
        ValidationScale::full()
    }
    .with_rmse_threshold(args.rmse_threshold);
    let seed = SeedPolicy::new(args.seed);
    let results = validate::run_all(&scale, seed, args.full_bench);
    print!("{}", validate::render(&results));
    if let Some(jpath) = &args.json {
        std::fs::write(
            jpath,
            serde_json::to_string_pretty(&results).map_err(|e| Error::Domain(e.to_string()))?
                + "\n",
        )?;
    }
    Ok(if results.iter().all(|r| r.passed) { 0 } else { 1 })
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let report = validate::throughput_run(args.particles, SeedPolicy::new(args.seed))?;
    println!(
        "{} particles in {:.2} s: {:.0} particles/s ({} Monte Carlo samples)",
        report.particles, report.seconds, report.particles_per_second, report.samples_used
    );
    Ok(())
}

/// Run the CLI; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    if let Some(n) = cli.threads {
        // a second init (e.g. in tests) keeps the first pool; that is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let outcome = match &cli.command {
        Command::Generate(a) => cmd_generate(a).map(|_| 0),
        Command::Perturb(a) => cmd_perturb(a).map(|_| 0),
        Command::Analyze(a) => cmd_analyze(a).map(|_| 0),
        Command::Validate(a) => cmd_validate(a),
        Command::Bench(a) => cmd_bench(a).map(|_| 0),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
