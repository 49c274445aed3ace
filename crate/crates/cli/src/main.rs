use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flowfield::encoding::{
    build_edited_encoding, flow_visualization_ppm, prepare_encoder, Digests,
};
use flowfield::headmodel::{apply_edit, evaluate_mesh, make_mini_model};
use flowfield::tensorio::{
    load_assets, load_camera, load_config, load_params, load_vector, save_assets, write_encoding,
};
use flowfield::{Camera, EncodeConfig, Error, ErrorClass, ModelAssets, MotionParams, SamplingMode};

const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_IO: u8 = 4;
const EXIT_NUMERIC: u8 = 5;

#[derive(Parser)]
#[command(
    name = "flowfield",
    version,
    about = "3D flow encodings for head reenactment"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "FLOWFIELD_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the procedural test head model.
    GenTestModel {
        #[arg(long)]
        seed: u64,
        #[arg(long, value_parser = clap::value_parser!(u32).range(0..=7))]
        subdiv: u32,
        #[arg(long)]
        out: PathBuf,
        /// Overwrite an existing output file.
        #[arg(long)]
        force: bool,
    },
    /// Evaluate a posed mesh and write it as OBJ.
    EvalMesh {
        #[arg(long)]
        assets: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the flow encoding for one frame.
    Encode {
        #[command(flatten)]
        common: EncodeArgs,
        #[arg(long)]
        dri_params: PathBuf,
        /// JSON array added to the driving pose.
        #[arg(long)]
        delta_theta: Option<PathBuf>,
        /// JSON array added to the driving expression.
        #[arg(long)]
        delta_psi: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Depth map of the target head (binary PGM).
        #[arg(long)]
        emit_depth: Option<PathBuf>,
        /// Mid-sample flow visualization (binary PPM).
        #[arg(long)]
        emit_vis: Option<PathBuf>,
    },
    /// Encode every frame of a driving sequence.
    EncodeSeq {
        #[command(flatten)]
        common: EncodeArgs,
        /// JSON `{"frames": [params paths...]}`; relative paths resolve against
        /// the manifest's directory.
        #[arg(long)]
        manifest: PathBuf,
        /// Receives `frame_00000.ften`, `frame_00001.ften`, ...
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    assets: PathBuf,
    #[arg(long)]
    src_params: PathBuf,
    #[arg(long)]
    camera: PathBuf,
    /// Encode config (JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's sampling mode.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<SamplingMode>,
}

fn parse_mode(s: &str) -> Result<SamplingMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Pipeline(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Pipeline(e)
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(EXIT_USAGE);
    }

    let result = match cli.threads {
        Some(n) => flowfield::with_workers(n, || run(cli.cmd)),
        None => run(cli.cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Pipeline(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Validation => EXIT_VALIDATION,
                ErrorClass::Io => EXIT_IO,
                ErrorClass::Numeric => EXIT_NUMERIC,
            })
        }
    }
}

fn run(cmd: Command) -> CmdResult {
    match cmd {
        Command::GenTestModel {
            seed,
            subdiv,
            out,
            force,
        } => {
            if out.exists() && !force {
                return Err(Failure::Usage(format!(
                    "{} exists; pass --force to overwrite",
                    out.display()
                )));
            }
            save_assets(&out, &make_mini_model(seed, subdiv))?;
            Ok(())
        }
        Command::EvalMesh {
            assets,
            params,
            out,
        } => {
            let assets = load_assets(&assets)?;
            let params = load_params(&params)?;
            let mesh = evaluate_mesh(&assets, &params)?;
            write_file(&out, mesh_to_obj(&mesh).as_bytes())
        }
        Command::Encode {
            common,
            dri_params,
            delta_theta,
            delta_psi,
            out,
            emit_depth,
            emit_vis,
        } => {
            let inputs = Inputs::load(&common)?;
            let dri = load_params(&dri_params)?;
            let dt = match delta_theta {
                Some(p) => load_vector(&p)?,
                None => vec![0.0; dri.theta.len()],
            };
            let dp = match delta_psi {
                Some(p) => load_vector(&p)?,
                None => vec![0.0; dri.psi.len()],
            };

            let enc = if emit_depth.is_some() {
                // Same result as `build_edited_encoding`, keeping the encoder
                // around for its depth map.
                let edited = apply_edit(&dri, &dt, &dp)?;
                let encoder = prepare_encoder(
                    &inputs.assets,
                    &inputs.src,
                    &edited,
                    &inputs.camera,
                    &inputs.cfg,
                )?;
                let enc = encoder.encode(inputs.digests(&edited))?;
                let far = inputs.camera.origin_depth() + inputs.cfg.sampling.d_far;
                let path = emit_depth.as_deref().unwrap();
                encoder
                    .depth()
                    .write_pgm(path, far.max(f64::MIN_POSITIVE))?;
                enc
            } else {
                build_edited_encoding(
                    &inputs.assets,
                    &inputs.src,
                    &dri,
                    &dt,
                    &dp,
                    &inputs.camera,
                    &inputs.cfg,
                )?
            };
            write_encoding(&out, &enc)?;
            if let Some(path) = emit_vis {
                let (ppm, _) = flow_visualization_ppm(&enc, &inputs.camera);
                write_file(&path, &ppm)?;
            }
            Ok(())
        }
        Command::EncodeSeq {
            common,
            manifest,
            out_dir,
        } => {
            let inputs = Inputs::load(&common)?;
            let frames = load_manifest(&manifest)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io {
                path: out_dir.clone(),
                source: e,
            })?;
            for (i, frame) in frames.iter().enumerate() {
                let dri = load_params(frame)?;
                let encoder = prepare_encoder(
                    &inputs.assets,
                    &inputs.src,
                    &dri,
                    &inputs.camera,
                    &inputs.cfg,
                )?;
                let enc = encoder.encode(inputs.digests(&dri))?;
                write_encoding(&out_dir.join(format!("frame_{i:05}.ften")), &enc)?;
            }
            Ok(())
        }
    }
}

struct Inputs {
    assets: ModelAssets,
    src: MotionParams,
    camera: Camera,
    cfg: EncodeConfig,
}

impl Inputs {
    fn load(args: &EncodeArgs) -> Result<Self, Error> {
        let assets = load_assets(&args.assets)?;
        let src = load_params(&args.src_params)?;
        let camera = load_camera(&args.camera)?;
        let mut cfg = match &args.config {
            Some(p) => load_config(p)?,
            None => EncodeConfig::default(),
        };
        if let Some(mode) = args.mode {
            cfg = cfg.with_mode(mode);
        }
        Ok(Inputs {
            assets,
            src,
            camera,
            cfg,
        })
    }

    fn digests(&self, dri: &MotionParams) -> Digests {
        Digests {
            assets: self.assets.digest(),
            src: self.src.digest(),
            dri: dri.digest(),
        }
    }
}

fn load_manifest(path: &Path) -> Result<Vec<PathBuf>, Error> {
    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Manifest {
        frames: Vec<PathBuf>,
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Schema {
        path: "frames".into(),
        reason: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(m.frames.into_iter().map(|f| base.join(f)).collect())
}

fn mesh_to_obj(mesh: &flowfield::TriMesh) -> String {
    let mut s = String::new();
    for v in mesh.vertices() {
        writeln!(s, "v {:.9} {:.9} {:.9}", v.x, v.y, v.z).unwrap();
    }
    for f in mesh.faces() {
        writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
    }
    s
}

fn write_file(path: &Path, bytes: &[u8]) -> CmdResult {
    std::fs::write(path, bytes).map_err(|e| {
        Failure::Pipeline(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}
