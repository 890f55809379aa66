use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lidarsim::bench::{run_bench, write_csv as write_bench_csv, Baseline, BenchConfig};
use lidarsim::capabilities::capabilities;
use lidarsim::frame_io::{read_csv, read_ply, write_csv, write_ply};
use lidarsim::pattern::PatternSpec;
use lidarsim::perception::{preprocess_frame, PartitionConfig};
use lidarsim::reward::{evaluate_frame, RewardWeights, RiskConfig, RobotStateSlice};
use lidarsim::scene::file::SceneDescription;
use lidarsim::scene::recipe::{preset, PresetParams, SceneRecipe, PRESET_NAMES};
use lidarsim::sensor::{apply_randomization, simulate_scan, ScanFrame, SensorConfig};
use lidarsim::validate::{run_validate, ValidateConfig};
use lidarsim::{RigidTransform, Vec3};

/// Parallel LiDAR simulation: scans, preprocessing, rewards, benchmarks.
#[derive(Parser)]
#[command(name = "lidarsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time shared-dynamic-mesh steps against per-environment rebuilds.
    Bench(BenchArgs),
    /// Compare scene casting with an all-triangle oracle. Exit 1 on failure.
    Validate(ValidateArgs),
    /// Simulate one frame and write it as PLY or CSV.
    Scan(ScanArgs),
    /// Split, sample and sort a frame into proximal/distal arrays (CSV).
    Preprocess(PreprocessArgs),
    /// Reward term breakdown for a frame and a robot state.
    Rewards(RewardsArgs),
    /// Run the capability probes.
    Features,
}

#[derive(Args)]
struct SceneArgs {
    /// Preset name (empty, flat, clutter, bench) or a scene JSON file.
    #[arg(long, default_value = "flat")]
    scene: String,
    /// Environments for preset scenes.
    #[arg(long, default_value_t = 1)]
    envs: u32,
    /// Dynamic entities per environment for preset scenes.
    #[arg(long, default_value_t = 2)]
    entities: usize,
    /// Random static triangles per environment (clutter preset).
    #[arg(long, default_value_t = 5000)]
    static_triangles: usize,
    /// Sphere subdivisions of dynamic entities (bench preset).
    #[arg(long, default_value_t = 2)]
    subdivisions: u32,
    /// Seed for randomly generated preset geometry.
    #[arg(long, default_value_t = 0)]
    scene_seed: u64,
}

impl SceneArgs {
    fn recipe(&self) -> Result<SceneRecipe> {
        let params = PresetParams {
            num_envs: self.envs,
            entities_per_env: self.entities,
            static_triangles: self.static_triangles,
            entity_subdivisions: self.subdivisions,
            seed: self.scene_seed,
        };
        if let Some(r) = preset(&self.scene, &params) {
            return Ok(r);
        }
        let path = Path::new(&self.scene);
        if !path.exists() {
            bail!("scene {:?} is neither a preset ({}) nor an existing file", self.scene, PRESET_NAMES.join(", "));
        }
        let (desc, dir) = SceneDescription::from_path(path)?;
        Ok(desc.recipe(&dir)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Shared,
    Rebuild,
    Both,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,16,64,256")]
    envs: Vec<u32>,
    /// Rays per frame.
    #[arg(long, value_delimiter = ',', default_value = "1000,4000,16000")]
    rays: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    steps: usize,
    #[arg(long, default_value_t = 2)]
    warmup: usize,
    #[arg(long, default_value_t = 3)]
    repetitions: usize,
    /// Dynamic entities per environment.
    #[arg(long, default_value_t = 6)]
    entities: usize,
    #[arg(long, default_value_t = 4)]
    subdivisions: u32,
    #[arg(long, default_value = "mid360-like")]
    pattern: String,
    #[arg(long, value_enum, default_value = "both")]
    baseline: BaselineArg,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long, default_value_t = 1000)]
    rays: usize,
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip BVH maintenance while moving entities (negative control).
    #[arg(long)]
    inject_stale: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FrameFormat {
    Ply,
    Csv,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Pattern preset name or pattern JSON file.
    #[arg(long, default_value = "mid360-like")]
    pattern: String,
    /// Override the pattern's rays per frame.
    #[arg(long)]
    rays: Option<usize>,
    /// Base pose: x,y,z | x,y,z,yaw | qw,qx,qy,qz,x,y,z.
    #[arg(long, default_value = "0,0,0.5", allow_hyphen_values = true)]
    pose: String,
    /// Base-to-sensor mount, same syntax as --pose.
    #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
    mount: String,
    #[arg(long, default_value_t = 0)]
    env: u32,
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    #[arg(long, default_value_t = 30.0)]
    max_range: f64,
    #[arg(long, default_value_t = 0.05)]
    min_range: f64,
    #[arg(long, default_value_t = 0.0)]
    mask_ratio: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_ratio: f64,
    #[arg(long, default_value_t = 0.1)]
    noise_magnitude: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to the --out extension, else ply.
    #[arg(long, value_enum)]
    format: Option<FrameFormat>,
}

#[derive(Args)]
struct FrameInput {
    /// Frame file (.ply or .csv).
    #[arg(long)]
    frame: PathBuf,
    /// Mount for CSV frames, which carry no metadata.
    #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
    mount: String,
}

impl FrameInput {
    fn load(&self) -> Result<ScanFrame> {
        let file = File::open(&self.frame).with_context(|| format!("opening {}", self.frame.display()))?;
        let is_csv = self.frame.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        Ok(if is_csv {
            read_csv(file, 0, 0.0, &parse_pose(&self.mount)?)?
        } else {
            read_ply(BufReader::new(file))?.0
        })
    }
}

#[derive(Args)]
struct PreprocessArgs {
    #[command(flatten)]
    input: FrameInput,
    /// Partition config JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    theta_threshold: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    /// Distal grid as THETAxPHI, e.g. 8x36.
    #[arg(long)]
    bins: Option<String>,
    #[arg(long)]
    d_max: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RewardsArgs {
    #[command(flatten)]
    input: FrameInput,
    /// Robot state JSON.
    #[arg(long)]
    state: PathBuf,
    /// Risk config JSON.
    #[arg(long)]
    risk: Option<PathBuf>,
    /// Reward weights JSON.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Elevation threshold of the distal rays used for r_rays.
    #[arg(long, default_value_t = -0.15, allow_hyphen_values = true)]
    theta_threshold: f64,
    /// Print the full result as JSON.
    #[arg(long)]
    json: bool,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn parse_pose(s: &str) -> Result<RigidTransform> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("pose {s:?}"))?;
    Ok(match v.as_slice() {
        [x, y, z] => RigidTransform::from_translation(Vec3::new(*x, *y, *z)),
        [x, y, z, yaw] => RigidTransform::from_yaw(*yaw, Vec3::new(*x, *y, *z)),
        [qw, qx, qy, qz, x, y, z] => RigidTransform::new([*qw, *qx, *qy, *qz], Vec3::new(*x, *y, *z))?,
        _ => bail!("pose {s:?} needs 3, 4 or 7 comma-separated numbers"),
    })
}

fn load_pattern(s: &str) -> Result<PatternSpec> {
    if let Ok(p) = PatternSpec::preset(s) {
        return Ok(p);
    }
    let path = Path::new(s);
    if !path.exists() {
        bail!("pattern {s:?} is neither a preset nor an existing file");
    }
    let p: PatternSpec = read_json(path)?;
    p.validate()?;
    Ok(p)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn bench(a: BenchArgs) -> Result<ExitCode> {
    let baselines = match a.baseline {
        BaselineArg::Shared => vec![Baseline::SharedDynamic],
        BaselineArg::Rebuild => vec![Baseline::PerEnvRebuild],
        BaselineArg::Both => vec![Baseline::SharedDynamic, Baseline::PerEnvRebuild],
    };
    let cfg = BenchConfig {
        env_counts: a.envs,
        rays_per_frame: a.rays,
        steps: a.steps,
        warmup: a.warmup,
        repetitions: a.repetitions,
        entities_per_env: a.entities,
        entity_subdivisions: a.subdivisions,
        pattern: a.pattern,
        baselines,
        dt: 0.1,
    };
    let records = run_bench(&cfg)?;
    write_bench_csv(&records, output(&a.out)?)?;
    for pair in records.chunks(2).filter(|p| p.len() == 2 && p[0].envs == p[1].envs && p[0].rays == p[1].rays) {
        eprintln!(
            "envs={} rays={}: shared/rebuild = {:.3}",
            pair[0].envs,
            pair[0].rays,
            pair[0].mean_ms / pair[1].mean_ms
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(a: ValidateArgs) -> Result<ExitCode> {
    let recipe = a.scene.recipe()?;
    let cfg = ValidateConfig {
        rays: a.rays,
        steps: a.steps,
        seed: a.seed,
        inject_stale: a.inject_stale,
        ..ValidateConfig::default()
    };
    let r = run_validate(&recipe, &cfg)?;
    println!(
        "steps={} casts={} hits={} mismatches={} max_abs_dt={:e} result={}",
        r.steps,
        r.casts,
        r.hits,
        r.mismatches,
        r.max_abs_dt,
        if r.pass { "PASS" } else { "FAIL" }
    );
    Ok(if r.pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn scan(a: ScanArgs) -> Result<ExitCode> {
    let recipe = a.scene.recipe()?;
    let (mut world, ids) = recipe.build()?;
    let initial: Vec<_> = ids.iter().copied().zip(recipe.entities.iter().map(|e| e.transform)).collect();
    world.update_dynamic(&initial, a.t)?;
    let mut pattern = load_pattern(&a.pattern)?;
    if let Some(n) = a.rays {
        pattern = pattern.with_rays_per_frame(n)?;
    }
    let sensor = SensorConfig {
        pattern,
        max_range: a.max_range,
        min_range: a.min_range,
        mount: parse_pose(&a.mount)?,
        mask_ratio: a.mask_ratio,
        noise_ratio: a.noise_ratio,
        noise_rel_magnitude: a.noise_magnitude,
        rng_seed: a.seed,
        ..SensorConfig::default()
    };
    let frame = simulate_scan(&world, a.env, &parse_pose(&a.pose)?, &sensor, a.t)?;
    let frame = apply_randomization(&frame, &sensor);
    let format = a.format.unwrap_or_else(|| match a.out.as_ref().and_then(|p| p.extension()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => FrameFormat::Csv,
        _ => FrameFormat::Ply,
    });
    let mut out = output(&a.out)?;
    match format {
        FrameFormat::Ply => write_ply(&frame, &sensor.mount, &mut out)?,
        FrameFormat::Csv => write_csv(&frame, &mut out)?,
    }
    out.flush()?;
    eprintln!("{} rays, {} hits", frame.len(), frame.hit_count());
    Ok(ExitCode::SUCCESS)
}

fn preprocess(a: PreprocessArgs) -> Result<ExitCode> {
    let frame = a.input.load()?;
    let mut cfg: PartitionConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => PartitionConfig::default(),
    };
    if let Some(t) = a.theta_threshold {
        cfg.theta_threshold = t;
    }
    if let Some(k) = a.k {
        cfg.k_proximal = k;
    }
    if let Some(d) = a.d_max {
        cfg.d_max = d;
    }
    if let Some(b) = &a.bins {
        let (t, p) = b.split_once(['x', 'X']).context("--bins expects THETAxPHI")?;
        cfg.distal_bins = (t.trim().parse()?, p.trim().parse()?);
    }
    let processed = preprocess_frame(&frame, &cfg)?;
    let mut out = output(&a.out)?;
    writeln!(out, "set,index,theta,phi,range,x,y,z,hit")?;
    for (set, points) in [("proximal", &processed.proximal), ("distal", &processed.distal)] {
        for (i, p) in points.iter().enumerate() {
            writeln!(
                out,
                "{set},{i},{},{},{},{},{},{},{}",
                p.theta, p.phi, p.range, p.position.x, p.position.y, p.position.z, p.hit as u8
            )?;
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn rewards(a: RewardsArgs) -> Result<ExitCode> {
    let frame = a.input.load()?;
    let state: RobotStateSlice = read_json(&a.state)?;
    let risk: RiskConfig = match &a.risk {
        Some(p) => read_json(p)?,
        None => RiskConfig::default(),
    };
    let weights: RewardWeights = match &a.weights {
        Some(p) => read_json(p)?,
        None => RewardWeights::default(),
    };
    let r = evaluate_frame(&frame, &state, &risk, a.theta_threshold, &weights)?;
    let mut out = io::stdout().lock();
    if a.json {
        serde_json::to_writer_pretty(&mut out, &r)?;
        writeln!(out)?;
    } else {
        writeln!(out, "v_avoid,{},{},{}", r.v_avoid.x, r.v_avoid.y, r.v_avoid.z)?;
        writeln!(out, "term,raw,weight,weighted")?;
        for t in &r.breakdown.terms {
            writeln!(out, "{},{},{},{}", t.name, t.raw, t.weight, t.weighted)?;
        }
        writeln!(out, "total,,,{}", r.breakdown.total)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn features() -> Result<ExitCode> {
    let caps = capabilities();
    for c in &caps {
        println!("[{}] {} ({})", if c.passed { "x" } else { " " }, c.feature, c.probe);
    }
    Ok(if caps.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bench(a) => bench(a),
        Command::Validate(a) => validate(a),
        Command::Scan(a) => scan(a),
        Command::Preprocess(a) => preprocess(a),
        Command::Rewards(a) => rewards(a),
        Command::Features => features(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
