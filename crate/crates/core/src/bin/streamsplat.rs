use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use streamsplat::geom::{read_trajectory, rotation_angle, write_trajectory, RigidPose};
use streamsplat::harness::{
    frames_from_scene, generate_scene, memory_report, run_protocol, sig6, stream_reconstruct, EvalConfig, EvalMode,
    OracleNoise, PredictorKind, SceneConfig, StreamConfig, SyntheticScene, TrajectoryKind,
};
use streamsplat::metrics::{optimize_target_pose, PoseOptConfig};
use streamsplat::raster::{render, write_fimg, write_ppm, FeatureImage, RenderConfig};
use streamsplat::splat::{read_scene, write_scene, AlignmentMode, AssemblyConfig, PoseSource};
use streamsplat::streamformer::{CachePolicy, ModelProfile};
use streamsplat::{Error, Result};

#[derive(Parser)]
#[command(
    name = "streamsplat",
    version,
    about = "Streaming Gaussian-splatting reconstruction on synthetic scenes"
)]
struct Cli {
    /// Render worker threads (0 = available parallelism).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene and write its Gaussians and trajectory.
    Synth {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stream a synthetic trajectory through a predictor and write the scene.
    Reconstruct {
        #[command(flatten)]
        scene: SceneArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
        /// Number of evenly spaced trajectory views rendered from the result.
        #[arg(long, default_value_t = 4)]
        renders: usize,
    },
    /// Run the held-out target protocol and print a metrics report.
    Eval {
        #[command(flatten)]
        scene: SceneArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Context views chosen by farthest point sampling.
        #[arg(long, default_value_t = 24)]
        context: usize,
        #[arg(long, conflicts_with = "unposed")]
        posed: bool,
        #[arg(long)]
        unposed: bool,
        #[arg(long)]
        json: bool,
    },
    /// Print cache token-set accounting for every (N, n) pair.
    CacheBench {
        #[arg(long, value_delimiter = ',', default_values_t = [8usize, 32, 64, 100, 128, 256])]
        images: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [4usize, 8])]
        chunks: Vec<usize>,
        #[arg(long, value_enum, default_value_t = ProfileArg::Paper)]
        profile: ProfileArg,
        /// Also stream random frames through live caches and report bytes.
        #[arg(long)]
        measure: bool,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Refine one perturbed target pose against the ground-truth scene.
    PoseOpt {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long, default_value_t = 5)]
        view: usize,
        #[arg(long, default_value_t = 2.0)]
        rot_deg: f64,
        /// Translation perturbation as a fraction of scene scale.
        #[arg(long, default_value_t = 0.02)]
        trans_frac: f64,
        #[arg(long, default_value_t = 100)]
        iterations: usize,
    },
    /// Render a scene file from one trajectory camera to PPM or FIMG.
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long, default_value_t = 0)]
        view: usize,
        /// Output path; `.fimg` writes all 12 channels, anything else PPM.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Layout {
    Object,
    Room,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Orbit,
    RandomWalk,
    ZigZag,
}

#[derive(Args)]
struct SceneArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    frames: usize,
    #[arg(long, value_enum, default_value_t = Layout::Object)]
    layout: Layout,
    #[arg(long, value_enum, default_value_t = Kind::Orbit)]
    trajectory: Kind,
    #[arg(long)]
    gaussians: Option<usize>,
}

impl SceneArgs {
    fn generate(&self) -> Result<SyntheticScene> {
        let mut cfg = match self.layout {
            Layout::Object => SceneConfig::object(self.frames),
            Layout::Room => SceneConfig::room(self.frames),
        };
        cfg.trajectory = match self.trajectory {
            Kind::Orbit => TrajectoryKind::Orbit,
            Kind::RandomWalk => TrajectoryKind::RandomWalk,
            Kind::ZigZag => TrajectoryKind::ZigZag,
        };
        if let Some(n) = self.gaussians {
            cfg.gaussian_count = n;
        }
        generate_scene(&cfg, self.seed)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PredictorArg {
    Oracle,
    Toy,
}

#[derive(Clone, Copy, ValueEnum)]
enum AssemblyArg {
    Gt,
    Pred,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlignArg {
    /// Scale GT translations by predicted/GT extent.
    Intent,
    /// Scale GT translations by GT/predicted extent.
    Literal,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Toy,
    Paper,
}

impl ProfileArg {
    fn profile(self, seed: u64) -> ModelProfile {
        match self {
            ProfileArg::Toy => ModelProfile::toy(seed),
            ProfileArg::Paper => ModelProfile::paper(seed),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 8)]
    chunk_size: usize,
    #[arg(long, value_enum, default_value_t = PredictorArg::Oracle)]
    predictor: PredictorArg,
    #[arg(long, default_value_t = 0.0)]
    pose_noise_deg: f64,
    /// Translation noise σ as a fraction of scene scale.
    #[arg(long, default_value_t = 0.0)]
    trans_noise: f64,
    /// Relative depth noise σ.
    #[arg(long, default_value_t = 0.0)]
    depth_noise: f64,
    #[arg(long, value_enum, default_value_t = AssemblyArg::Gt)]
    assembly: AssemblyArg,
    #[arg(long, value_enum, default_value_t = AlignArg::Intent)]
    align: AlignArg,
    #[arg(long, value_enum, default_value_t = ProfileArg::Toy)]
    profile: ProfileArg,
    /// Keep every view at every global layer in the cache.
    #[arg(long)]
    no_compress: bool,
}

impl RunArgs {
    fn predictor(&self, seed: u64) -> PredictorKind {
        match self.predictor {
            PredictorArg::Oracle => PredictorKind::Oracle(OracleNoise {
                rotation_deg: self.pose_noise_deg,
                translation_frac: self.trans_noise,
                depth_frac: self.depth_noise,
                seed,
            }),
            PredictorArg::Toy => PredictorKind::ToyNetwork(self.profile.profile(seed)),
        }
    }

    fn stream_config(&self, workers: usize) -> StreamConfig {
        StreamConfig {
            chunk_size: self.chunk_size,
            assembly: AssemblyConfig {
                pose_source: match self.assembly {
                    AssemblyArg::Gt => PoseSource::GroundTruth,
                    AssemblyArg::Pred => PoseSource::Predicted,
                },
                alignment_mode: match self.align {
                    AlignArg::Intent => AlignmentMode::PredictedScaleConsistent,
                    AlignArg::Literal => AlignmentMode::GtOverPredicted,
                },
                ..AssemblyConfig::default()
            },
            cache: if self.no_compress {
                CachePolicy::uncompressed()
            } else {
                CachePolicy::compressed()
            },
            render: RenderConfig::default().with_workers(workers),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_image(path: &Path, img: &FeatureImage) -> Result<()> {
    let mut out = create(path)?;
    if path.extension().is_some_and(|e| e == "fimg") {
        write_fimg(&mut out, img)?;
    } else {
        write_ppm(&mut out, img)?;
    }
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    let render_cfg = RenderConfig::default().with_workers(cli.workers);
    match cli.command {
        Command::Synth { scene, out } => {
            let s = scene.generate()?;
            fs::create_dir_all(&out)?;
            let mut w = create(&out.join("scene.splat"))?;
            write_scene(&mut w, &s.gaussians)?;
            w.flush()?;
            let mut w = create(&out.join("trajectory.jsonl"))?;
            write_trajectory(&mut w, &s.frames)?;
            w.flush()?;
            fs::write(out.join("config.json"), serde_json::to_string_pretty(&s.config)?)?;
            writeln!(
                stdout,
                "{} gaussians, {} frames -> {}",
                s.gaussians.len(),
                s.len(),
                out.display()
            )?;
        }
        Command::Reconstruct {
            scene,
            run,
            out,
            renders,
        } => {
            let s = scene.generate()?;
            let views: Vec<usize> = (0..s.len()).collect();
            let cfg = run.stream_config(cli.workers);
            let frames = frames_from_scene(&s, &views, &cfg.render)?;
            let recon = stream_reconstruct(&frames, &run.predictor(scene.seed), Some(&s), &cfg)?;
            fs::create_dir_all(&out)?;
            let mut w = create(&out.join("scene.splat"))?;
            write_scene(&mut w, &recon.scene)?;
            w.flush()?;
            fs::write(out.join("log.json"), serde_json::to_string_pretty(&recon.log)?)?;
            for i in 0..renders.min(s.len()) {
                let view = i * s.len() / renders;
                let pose = s.pose(view).with_scaled_translation(recon.scale_factor);
                let img = render(&recon.scene, &pose, &s.intrinsics, &cfg.render)?;
                write_image(&out.join(format!("view_{view:03}.ppm")), &img)?;
                write_image(&out.join(format!("view_{view:03}.fimg")), &img)?;
            }
            for entry in &recon.log {
                let tokens = entry.cached_token_sets.map_or("-".to_string(), |t| t.to_string());
                writeln!(
                    stdout,
                    "chunk {:>3}: {} views, +{} gaussians, {} pruned, scene {}, cached token sets {}, {:.1} ms",
                    entry.chunk,
                    entry.views.len(),
                    entry.added,
                    entry.pruned,
                    entry.scene_size,
                    tokens,
                    entry.elapsed_ms
                )?;
            }
        }
        Command::Eval {
            scene,
            run,
            context,
            posed: _,
            unposed,
            json,
        } => {
            let s = scene.generate()?;
            let mut cfg = EvalConfig::new(context, scene.seed);
            cfg.mode = if unposed { EvalMode::Unposed } else { EvalMode::Posed };
            cfg.pose_opt.render = render_cfg;
            let (_, _, report) = run_protocol(&s, &run.predictor(scene.seed), &run.stream_config(cli.workers), &cfg)?;
            if json {
                writeln!(stdout, "{}", report.to_json()?)?;
            } else {
                write!(stdout, "{}", report.to_text())?;
            }
        }
        Command::CacheBench {
            images,
            chunks,
            profile,
            measure,
            json,
            seed,
        } => {
            let report = memory_report(&images, &chunks, &profile.profile(seed), measure)?;
            if json {
                writeln!(stdout, "{}", report.to_json()?)?;
            } else {
                write!(stdout, "{}", report.to_text())?;
            }
        }
        Command::PoseOpt {
            scene,
            view,
            rot_deg,
            trans_frac,
            iterations,
        } => {
            let s = scene.generate()?;
            let target = s.observe(view, &render_cfg)?;
            let truth = *s.pose(view);
            let axis = nalgebra::Vector3::new(1.0, 2.0, -1.0).normalize() * rot_deg.to_radians();
            let shift = nalgebra::Vector3::new(-1.0, 1.0, 2.0).normalize() * trans_frac * s.scale();
            let init = truth
                .retract(&[axis.x, axis.y, axis.z, 0.0, 0.0, 0.0])
                .compose(&RigidPose::from_translation(truth.rotation().transpose() * shift));
            let cfg = PoseOptConfig {
                iterations,
                render: render_cfg,
                ..PoseOptConfig::default()
            };
            let out = optimize_target_pose(&s.gaussians, &target, &s.intrinsics, &init, &cfg)?;
            let err = |p: &RigidPose| rotation_angle(&(truth.rotation().transpose() * p.rotation())).to_degrees();
            writeln!(
                stdout,
                "initial: mse {} rotation error {} deg",
                sig6(out.initial_loss),
                sig6(err(&init))
            )?;
            writeln!(
                stdout,
                "final:   mse {} rotation error {} deg",
                sig6(out.best_loss),
                sig6(err(&out.pose))
            )?;
        }
        Command::Render {
            scene,
            trajectory,
            view,
            out,
        } => {
            let world = read_scene(BufReader::new(File::open(&scene)?))?;
            let frames = read_trajectory(BufReader::new(File::open(&trajectory)?))?;
            let frame = frames
                .iter()
                .find(|f| f.index == view)
                .ok_or_else(|| Error::Argument(format!("trajectory has no frame {view}")))?;
            let k = frame
                .intrinsics
                .ok_or_else(|| Error::Argument(format!("frame {view} carries no intrinsics")))?;
            write_image(&out, &render(&world, &frame.pose, &k, &render_cfg)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed pipe downstream (e.g. `| head`) is not a failure.
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
