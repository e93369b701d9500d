use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use ghostsim::fma::{estimate_alpha, fma_merge_across, AngleGrid, FmaConfig, PairPolicy, DEFAULT_PREFILTER_SIGMA};
use ghostsim::io::container::{read_container, write_container, Container, ContainerEntry};
use ghostsim::io::csv::{write_angle_curves, write_curve, write_reports};
use ghostsim::io::pgm::{read_pgm, write_pgm};
use ghostsim::reconstruct::gi_from_planes;
use ghostsim::{
    gi_progressive, make_gf, max_samples, simulate_rotation_bgfs, Distribution, GhostImage, QualityReport,
    RotationTrajectory, SpeckleSet,
};

#[derive(Parser)]
#[command(name = "ghostsim", version, about = "Ghost imaging simulation for rotating objects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Group frame of a static object.
    Simulate {
        #[arg(long)]
        object: PathBuf,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "uniform01")]
        dist: Distribution,
        #[arg(long)]
        out: PathBuf,
        /// Store every plane instead of relying on seed regeneration.
        #[arg(long)]
        include_planes: bool,
    },
    /// One group frame per time step of a rotating object.
    RotateSim {
        #[arg(long)]
        object: PathBuf,
        #[arg(long)]
        omega_deg_per_ms: f64,
        #[arg(long)]
        frames: usize,
        #[arg(long)]
        batches: usize,
        #[arg(long)]
        frame_interval_ms: f64,
        #[arg(long)]
        samples_per_frame: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "uniform01")]
        dist: Distribution,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        start_angle_deg: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        include_planes: bool,
    },
    /// Correlation reconstruction of one container entry.
    Reconstruct {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        entry: usize,
        #[arg(long)]
        out: PathBuf,
        /// Sample counts at which to score partial reconstructions.
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<usize>>,
        /// CSV of m, psnr_db, ssim against the entry's ground truth.
        #[arg(long, requires = "checkpoints")]
        curve: Option<PathBuf>,
    },
    /// Estimate the per-frame rotation and merge all frames.
    Fma {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        grid_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        grid_max: f64,
        #[arg(long)]
        grid_step: f64,
        /// Base frame as batch:frame.
        #[arg(long, value_parser = parse_base)]
        base: (usize, usize),
        #[arg(long, required_unless_present = "estimate_only")]
        out: Option<PathBuf>,
        /// Print the rotation estimate and stop without merging.
        #[arg(long, conflicts_with = "out")]
        estimate_only: bool,
        /// CSV of every pair's correlation sweep.
        #[arg(long)]
        curves: Option<PathBuf>,
        #[arg(long, default_value = "halves")]
        policy: PairPolicy,
        /// Frame distance within each pair (default: half a batch).
        #[arg(long)]
        span: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_PREFILTER_SIGMA)]
        prefilter_sigma: f64,
    },
    /// PSNR and SSIM of a test image against a reference.
    Metrics {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Largest sample count over which the object moves less than theta_r.
    MaxSamples {
        #[arg(long)]
        freq_hz: f64,
        #[arg(long)]
        omega_deg_per_s: f64,
        #[arg(long)]
        theta_r_deg: f64,
    },
    /// Render a synthetic digit.
    Phantom {
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=9))]
        digit: u8,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_base(s: &str) -> Result<(usize, usize), String> {
    let (b, f) = s.split_once(':').ok_or("expected batch:frame")?;
    let b = b.trim().parse().map_err(|e| format!("batch: {e}"))?;
    let f = f.trim().parse().map_err(|e| format!("frame: {e}"))?;
    Ok((b, f))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "object".into())
}

fn simulate(object: &Path, samples: usize, seed: u64, dist: Distribution, out: &Path, planes: bool) -> Result<()> {
    let obj = read_pgm(object)?;
    let (h, w) = obj.dims();
    let set = std::sync::Arc::new(SpeckleSet::generate(seed, samples, h, w, dist)?);
    let gf = make_gf(&obj, &set, stem(object))?;
    let mut c = Container::new(h, w, samples);
    c.push(ContainerEntry::from_group_frame(&gf, &obj, planes)?)?;
    write_container(out, &c)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn rotate_sim(
    object: &Path,
    omega: f64,
    frames: usize,
    batches: usize,
    interval: f64,
    samples: usize,
    seed: u64,
    dist: Distribution,
    start: f64,
    out: &Path,
    planes: bool,
) -> Result<()> {
    let obj = read_pgm(object)?;
    let (h, w) = obj.dims();
    let traj = RotationTrajectory::new(omega, interval, frames, batches)?.with_start_angle(start);
    let bgfs = simulate_rotation_bgfs(&obj, &traj, samples, seed, dist)?;
    let name = stem(object);
    let mut c = Container::new(h, w, samples);
    for bgf in &bgfs {
        let b = bgf.batch_index();
        for (k, f) in bgf.frames().iter().enumerate() {
            let truth = obj.rotate(traj.angle(b * traj.frames_per_batch() + k));
            let mut entry = ContainerEntry::from_group_frame(f, &truth, planes)?;
            entry.object_id = format!("{name}/b{b:03}/f{k:03}");
            c.push(entry)?;
        }
    }
    write_container(out, &c)?;
    Ok(())
}

/// Ghost images of a prefix of an entry's samples.
fn progressive(entry: &ContainerEntry, h: usize, w: usize, checkpoints: &[usize]) -> Result<Vec<GhostImage>> {
    if entry.is_derived() {
        let planes = entry.planes.as_deref().context("derived entry has no planes")?;
        let m = entry.samples();
        let mut prev = 0;
        return checkpoints
            .iter()
            .map(|&k| {
                if k < 2 || k > m || k <= prev {
                    bail!("bad checkpoints: {k} must be ascending within [2, {m}]");
                }
                prev = k;
                Ok(gi_from_planes(h, w, &planes[..k * h * w], &entry.buckets[..k])?)
            })
            .collect();
    }
    let gf = entry.to_group_frame(h, w)?;
    Ok(gi_progressive(gf.speckles(), gf.buckets(), checkpoints)?)
}

fn reconstruct(input: &Path, index: usize, out: &Path, checkpoints: Option<&[usize]>, curve: Option<&Path>) -> Result<()> {
    let c = read_container(input)?;
    let entry = c
        .entries
        .get(index)
        .with_context(|| format!("entry {index} out of range ({} entries)", c.entries.len()))?;
    let g = entry.ghost_image(c.height, c.width)?;
    write_pgm(out, &g.image)?;

    let truth = entry.ground_truth_image(c.height, c.width)?;
    if let Some(points) = checkpoints {
        let rows = progressive(entry, c.height, c.width, points)?
            .iter()
            .map(|gi| Ok((gi.m_used, QualityReport::compare(gi.m_used.to_string(), &truth, &gi.image)?)))
            .collect::<Result<Vec<_>>>()?;
        for (m, r) in &rows {
            println!("m={m} psnr_db={} ssim={:.6}", r.psnr, r.ssim);
        }
        if let Some(path) = curve {
            write_curve(path, &rows)?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn fma(
    input: &Path,
    grid: AngleGrid,
    base: (usize, usize),
    out: Option<&Path>,
    curves: Option<&Path>,
    policy: PairPolicy,
    span: Option<usize>,
    prefilter_sigma: f64,
) -> Result<()> {
    let c = read_container(input)?;
    let bgfs = c.to_bgfs()?;
    if bgfs.is_empty() {
        bail!("container has no entries");
    }
    let config = FmaConfig {
        grid,
        policy,
        span,
        prefilter_sigma,
    };
    let estimate = estimate_alpha(&bgfs, &config)?;
    println!("alpha_deg_per_frame={:.6}", estimate.alpha_deg);
    if let Some(path) = curves {
        write_angle_curves(path, &estimate.per_batch)?;
    }

    let Some(out) = out else {
        return Ok(());
    };
    let merged = fma_merge_across(&bgfs, estimate.alpha_deg, base)?;
    let offset: usize = bgfs[..base.0].iter().map(|b| b.len()).sum();
    let base_entry = &c.entries[offset + base.1];
    let truth = base_entry.ground_truth_image(c.height, c.width)?;
    let label = format!("merged/b{:03}/f{:03}", base.0, base.1);
    let entry = ContainerEntry::from_merged(&merged, label, &truth)?;
    let mut result = Container::new(c.height, c.width, merged.len());
    result.push(entry)?;
    write_container(out, &result)?;
    Ok(())
}

fn metrics(reference: &Path, test: &Path, csv: Option<&Path>) -> Result<()> {
    let r = read_pgm(reference)?;
    let t = read_pgm(test)?;
    let id = format!("{}:{}", stem(reference), stem(test));
    let report = QualityReport::compare(id, &r, &t)?;
    println!("psnr_db={} ssim={:.6}", report.psnr, report.ssim);
    if let Some(path) = csv {
        write_reports(path, std::slice::from_ref(&report))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            object,
            samples,
            seed,
            dist,
            out,
            include_planes,
        } => simulate(&object, samples, seed, dist, &out, include_planes),
        Command::RotateSim {
            object,
            omega_deg_per_ms,
            frames,
            batches,
            frame_interval_ms,
            samples_per_frame,
            seed,
            dist,
            start_angle_deg,
            out,
            include_planes,
        } => rotate_sim(
            &object,
            omega_deg_per_ms,
            frames,
            batches,
            frame_interval_ms,
            samples_per_frame,
            seed,
            dist,
            start_angle_deg,
            &out,
            include_planes,
        ),
        Command::Reconstruct {
            input,
            entry,
            out,
            checkpoints,
            curve,
        } => reconstruct(&input, entry, &out, checkpoints.as_deref(), curve.as_deref()),
        Command::Fma {
            input,
            grid_min,
            grid_max,
            grid_step,
            base,
            out,
            estimate_only: _,
            curves,
            policy,
            span,
            prefilter_sigma,
        } => fma(
            &input,
            AngleGrid::new(grid_min, grid_max, grid_step)?,
            base,
            out.as_deref(),
            curves.as_deref(),
            policy,
            span,
            prefilter_sigma,
        ),
        Command::Metrics { reference, test, csv } => metrics(&reference, &test, csv.as_deref()),
        Command::MaxSamples {
            freq_hz,
            omega_deg_per_s,
            theta_r_deg,
        } => {
            println!("{}", max_samples(freq_hz, omega_deg_per_s, theta_r_deg)?);
            Ok(())
        }
        Command::Phantom { digit, size, out } => {
            write_pgm(&out, &ghostsim::phantom::digit(digit, size)?)?;
            Ok(())
        }
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("GHOSTSIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("GHOSTSIM_THREADS must be a non-negative integer, got `{raw}`"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
