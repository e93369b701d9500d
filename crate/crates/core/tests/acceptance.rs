//! End-to-end acceptance checks. Each prints one PASS/FAIL line; the process
//! exits non-zero if any fails.

use std::sync::Arc;
use std::time::{Duration, Instant};

use ghostsim::fma::{estimate_alpha, fma_merge_across, AngleGrid, FmaConfig};
use ghostsim::io::container::{Container, ContainerEntry};
use ghostsim::phantom::digit;
use ghostsim::{
    gi, gi_from_gf, make_gf, max_samples, psnr, simulate_rotation_bgfs, ssim, BatchGroupFrame, Distribution, Image,
    Psnr, QualityReport, RotationTrajectory, SpeckleSet,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Check = Result<String, String>;

struct Suite {
    failures: usize,
}

impl Suite {
    fn run(&mut self, name: &str, limit: Duration, check: impl FnOnce() -> Check) {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= limit => (true, d),
            Ok(d) => (false, format!("{d}; too slow, limit {limit:?}")),
            Err(d) => (false, d),
        };
        if !ok {
            self.failures += 1;
        }
        println!(
            "{} {name}: {detail} [{:.2}s]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
}

fn err(e: ghostsim::Error) -> String {
    e.to_string()
}

fn seven() -> Image {
    digit(7, 64).unwrap()
}

/// Mean PSNR and SSIM of raw GI over seeds `0..seeds`.
fn raw_gi_quality(object: &Image, m: usize, seeds: u64) -> Result<(f64, f64), String> {
    let (h, w) = object.dims();
    let (mut p, mut s) = (0.0, 0.0);
    for seed in 0..seeds {
        let set = Arc::new(SpeckleSet::generate(seed, m, h, w, Distribution::Uniform01).map_err(err)?);
        let gf = make_gf(object, &set, "seven").map_err(err)?;
        let g = gi(gf.speckles(), gf.buckets()).map_err(err)?;
        let r = QualityReport::compare(seed.to_string(), object, &g.image).map_err(err)?;
        p += r.psnr.as_f64();
        s += r.ssim;
    }
    Ok((p / seeds as f64, s / seeds as f64))
}

fn protocol() -> RotationTrajectory {
    RotationTrajectory::new(0.0375, 4.0, 300, 3).unwrap()
}

fn protocol_config() -> FmaConfig {
    FmaConfig {
        grid: AngleGrid::new(0.0, 0.5, 0.05).unwrap(),
        ..FmaConfig::default()
    }
}

fn protocol_bgfs(seed: u64) -> Result<Vec<BatchGroupFrame>, String> {
    simulate_rotation_bgfs(&seven(), &protocol(), 4096, seed, Distribution::Uniform01).map_err(err)
}

fn raw_band() -> Check {
    let (p, s) = raw_gi_quality(&seven(), 128, 10)?;
    let d = format!("mean ssim {s:.4}, mean psnr {p:.2} dB over 10 seeds");
    if (0.0..=0.15).contains(&s) && (4.0..=10.0).contains(&p) {
        Ok(d)
    } else {
        Err(d)
    }
}

fn oracle_equivalence() -> Check {
    let mut rng = StdRng::seed_from_u64(20);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let (h, w) = (rng.random_range(4..24), rng.random_range(4..24));
        let m = rng.random_range(2..300);
        let dist = if k % 2 == 0 { Distribution::Uniform01 } else { Distribution::Binary };
        let object = Image::new(h, w, (0..h * w).map(|_| rng.random::<f64>()).collect()).map_err(err)?;
        let set = Arc::new(SpeckleSet::generate(rng.random(), m, h, w, dist).map_err(err)?);
        let gf = make_gf(&object, &set, format!("d{k}")).map_err(err)?;
        let fast = gi(gf.speckles(), gf.buckets()).map_err(err)?;
        let literal = gi_from_gf(&gf).map_err(err)?;
        for (a, b) in fast.image.data().iter().zip(literal.image.data()) {
            worst = worst.max((a - b).abs());
        }
    }
    let d = format!("max per-pixel difference {worst:.2e} over 20 datasets");
    if worst <= 1e-10 {
        Ok(d)
    } else {
        Err(d)
    }
}

fn convergence() -> Check {
    let object = seven();
    let mut ssims = Vec::new();
    for m in [128, 1024, 4096] {
        ssims.push(raw_gi_quality(&object, m, 10)?.1);
    }
    let d = format!("mean ssim at m=128,1024,4096: {ssims:.4?}");
    if ssims.windows(2).all(|w| w[1] > w[0]) {
        Ok(d)
    } else {
        Err(d)
    }
}

fn alpha_with_threads(threads: usize, bgfs: &[BatchGroupFrame]) -> Result<(f64, Duration), String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    let start = Instant::now();
    let alpha = pool.install(|| estimate_alpha(bgfs, &protocol_config())).map_err(err)?;
    Ok((alpha.alpha_deg, start.elapsed()))
}

fn angle_recovery() -> Check {
    let start = Instant::now();
    let bgfs = protocol_bgfs(0)?;
    let sim = start.elapsed();
    let (single, t1) = alpha_with_threads(1, &bgfs)?;
    let (multi, t8) = alpha_with_threads(8, &bgfs)?;
    let d = format!(
        "alpha {single:.4} deg/frame (1 worker, {:.1}s + {:.1}s sim), {multi:.4} (8 workers, {:.1}s)",
        t1.as_secs_f64(),
        sim.as_secs_f64(),
        t8.as_secs_f64()
    );
    let within = |a: f64| (a - 0.15).abs() <= 0.05 + 1e-9;
    if !within(single) || !within(multi) {
        return Err(d);
    }
    if sim + t1 > Duration::from_secs(120) || sim + t8 > Duration::from_secs(30) {
        return Err(format!("{d}; too slow"));
    }
    Ok(d)
}

fn deblur_gain() -> Check {
    let object = seven();
    let mut wins = 0;
    let mut gains = Vec::new();
    for seed in 0..10 {
        let bgfs = protocol_bgfs(seed)?;
        let alpha = estimate_alpha(&bgfs, &protocol_config()).map_err(err)?.alpha_deg;
        let merged = fma_merge_across(&bgfs, alpha, (0, 0)).and_then(|m| m.ghost_image()).map_err(err)?;
        let naive = fma_merge_across(&bgfs, 0.0, (0, 0)).and_then(|m| m.ghost_image()).map_err(err)?;
        let rm = QualityReport::compare("merged", &object, &merged.image).map_err(err)?;
        let rn = QualityReport::compare("naive", &object, &naive.image).map_err(err)?;
        let gain = rm.psnr.as_f64() - rn.psnr.as_f64();
        if gain >= 3.0 && rm.ssim > rn.ssim {
            wins += 1;
        }
        gains.push(gain);
    }
    let min = gains.iter().cloned().fold(f64::INFINITY, f64::min);
    let d = format!("{wins}/10 seeds with >= 3 dB and higher ssim; psnr gain min {min:.2} dB");
    if wins >= 9 {
        Ok(d)
    } else {
        Err(d)
    }
}

fn sample_limit() -> Check {
    let n = max_samples(250.0, 37.5, 1.5).map_err(err)?;
    if n == 10 {
        Ok(format!("max_samples(250, 37.5, 1.5) = {n}"))
    } else {
        Err(format!("max_samples(250, 37.5, 1.5) = {n}, expected 10"))
    }
}

fn metric_fixtures() -> Check {
    let a = Image::filled(64, 64, 255.0).map_err(err)?;
    let b = Image::filled(64, 64, 254.0).map_err(err)?;
    let p = match psnr(&a, &b).map_err(err)? {
        Psnr::Db(v) => v,
        Psnr::Identical => return Err("distinct images scored as identical".into()),
    };
    let x = ghostsim::metrics::to_peak_scale(&seven());
    let s = ssim(&x, &x).map_err(err)?;

    let traj = RotationTrajectory::new(0.5, 4.0, 6, 2).map_err(err)?;
    let object = digit(3, 24).map_err(err)?;
    let mut c = Container::new(24, 24, 64);
    for bgf in simulate_rotation_bgfs(&object, &traj, 64, 8, Distribution::Binary).map_err(err)? {
        for (k, f) in bgf.frames().iter().enumerate() {
            c.push(ContainerEntry::from_group_frame(f, &object, k == 1).map_err(err)?).map_err(err)?;
        }
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("rt.gfb");
    ghostsim::io::container::write_container(&path, &c).map_err(err)?;
    let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
    let back = ghostsim::io::container::read_container(&path).map_err(err)?;
    let exact = back.to_bytes().map_err(err)? == bytes && bytes == c.to_bytes().map_err(err)?;

    let d = format!("psnr(255, 254) = {p:.4} dB, ssim(x, x) = {s:.12}, round trip exact: {exact}");
    if (p - 48.13).abs() <= 0.01 && (s - 1.0).abs() <= 1e-9 && exact {
        Ok(d)
    } else {
        Err(d)
    }
}

fn main() {
    let mut suite = Suite { failures: 0 };
    suite.run("raw GI quality band", Duration::from_secs(5), raw_band);
    suite.run("fast and literal GI agree", Duration::from_secs(10), oracle_equivalence);
    suite.run("quality increases with samples", Duration::from_secs(120), convergence);
    // The timing limits for this one are checked inside, per worker count.
    suite.run("rotation rate recovery", Duration::from_secs(150), angle_recovery);
    suite.run("frame merging removes blur", Duration::from_secs(180), deblur_gain);
    suite.run("sample limit arithmetic", Duration::from_secs(1), sample_limit);
    suite.run("metric and container fixtures", Duration::from_secs(5), metric_fixtures);
    if suite.failures > 0 {
        println!("{} acceptance check(s) failed", suite.failures);
        std::process::exit(1);
    }
}
