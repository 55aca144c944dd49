//! Command-line front end.
//!
//! Exit codes: 0 success (or exact median), 1 approximate median, 2 usage or
//! data error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{analyze, binary_profile, perm_profile, ErrorProfile};
use crate::cost::{cost, emit_rtl, TechConfig};
use crate::imaging::{self, read_pgm, write_pgm, Window};
use crate::network::{gen_batcher_sorter, gen_exact_median, gen_mom, parse_network, Network};
use crate::search::{evolve, Budget, SearchConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_APPROXIMATE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

type BoxError = Box<dyn std::error::Error>;

#[derive(Parser, Debug)]
#[command(name = "approx-median", version, about = "Analyze, cost and evolve median comparison networks")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact rank-error profile of a single-output network.
    Analyze {
        network: PathBuf,
        #[arg(long, conflicts_with = "text")]
        json: bool,
        #[arg(long)]
        text: bool,
    },
    /// Exit 0 if the network computes the exact median, 1 otherwise.
    Verify { network: PathBuf },
    /// Hardware cost report as JSON.
    Cost {
        network: PathBuf,
        #[arg(long)]
        tech: Option<PathBuf>,
    },
    /// Print a generated network.
    Gen {
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long)]
        inputs: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Error profile by exhaustive enumeration.
    Oracle {
        network: PathBuf,
        #[arg(long, value_enum, default_value = "binary")]
        mode: OracleMode,
        #[arg(long)]
        json: bool,
    },
    /// Evolve approximate medians near a target cost.
    Search {
        #[arg(long)]
        inputs: Option<usize>,
        #[arg(long)]
        seed_net: Option<PathBuf>,
        #[arg(long, conflicts_with = "target_cost")]
        target_cas: Option<usize>,
        #[arg(long)]
        target_cost: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 4)]
        lambda: usize,
        /// Genes mutated per offspring.
        #[arg(long = "mut", default_value_t = 2)]
        mutations: usize,
        /// Node capacity of the genome (default twice the seed's CAS count).
        #[arg(long)]
        capacity: Option<usize>,
        /// Evaluation count, or wall-clock seconds with an `s` suffix.
        #[arg(long, default_value = "10000")]
        budget: String,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        #[arg(long)]
        tech: Option<PathBuf>,
        #[arg(long)]
        parallel: bool,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Median-filter a PGM image with a 9- or 25-input network.
    Filter {
        input: PathBuf,
        #[arg(long)]
        network: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Corrupt a PGM image with impulse noise.
    Noise {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "salt-pepper")]
        kind: NoiseKind,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Mean SSIM of two PGM images.
    Ssim { a: PathBuf, b: PathBuf },
    /// Write a procedural test scene as PGM.
    Scene {
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 256)]
        size: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Pipelined VHDL for a network.
    ExportRtl {
        network: PathBuf,
        #[arg(long)]
        tech: Option<PathBuf>,
        #[arg(long, default_value = "median_net")]
        entity: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenKind {
    Sorter,
    Median,
    Mom,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OracleMode {
    Perm,
    Binary,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NoiseKind {
    SaltPepper,
    Shot,
}

/// Replay information written next to every search run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub args: Vec<String>,
    pub seed: u64,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub elapsed_seconds: f64,
    /// SHA-256 of each input file, hex encoded.
    pub inputs: Vec<InputDigest>,
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn read(path: &Path) -> Result<Vec<u8>, BoxError> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load_network(path: &Path) -> Result<Network, BoxError> {
    let text = String::from_utf8(read(path)?)?;
    parse_network(&text).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load_tech(path: Option<&Path>) -> Result<TechConfig, BoxError> {
    match path {
        None => Ok(TechConfig::default()),
        Some(p) => Ok(String::from_utf8(read(p)?)?.parse()?),
    }
}

fn load_image(path: &Path) -> Result<imaging::GrayImage, BoxError> {
    read_pgm(&read(path)?).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), BoxError> {
    std::fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn json_line(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("json") + "\n"
}

fn render_profile(profile: &ErrorProfile, json: bool) -> String {
    if json {
        json_line(&profile.to_json())
    } else {
        profile.render_text()
    }
}

fn parse_budget(text: &str) -> Result<Budget, BoxError> {
    match text.strip_suffix('s') {
        Some(secs) => Ok(Budget::Seconds(secs.parse()?)),
        None => Ok(Budget::Evaluations(text.parse()?)),
    }
}

fn digest(path: &Path) -> Result<InputDigest, BoxError> {
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(read(path)?)),
    })
}

fn execute(command: Command, argv: &[String], out: &mut dyn Write) -> Result<i32, BoxError> {
    match command {
        Command::Analyze { network, json, .. } => {
            let profile = analyze(&load_network(&network)?)?;
            out.write_all(render_profile(&profile, json).as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Verify { network } => {
            let profile = analyze(&load_network(&network)?)?;
            if profile.is_exact() {
                writeln!(out, "exact")?;
                Ok(EXIT_OK)
            } else {
                writeln!(out, "approximate dL={} dR={}", profile.d_left, profile.d_right)?;
                Ok(EXIT_APPROXIMATE)
            }
        }
        Command::Cost { network, tech } => {
            let report = cost(&load_network(&network)?, &load_tech(tech.as_deref())?);
            out.write_all(json_line(&report.to_json()).as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Gen { kind, inputs, output } => {
            let net = match kind {
                GenKind::Sorter => gen_batcher_sorter(inputs)?,
                GenKind::Median => gen_exact_median(inputs)?,
                GenKind::Mom => gen_mom(inputs)?,
            };
            match output {
                Some(path) => write_file(&path, net.to_text().as_bytes())?,
                None => out.write_all(net.to_text().as_bytes())?,
            }
            Ok(EXIT_OK)
        }
        Command::Oracle { network, mode, json } => {
            let net = load_network(&network)?;
            let profile = match mode {
                OracleMode::Perm => perm_profile(&net)?,
                OracleMode::Binary => binary_profile(&net)?,
            };
            out.write_all(render_profile(&profile, json).as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Search {
            inputs,
            seed_net,
            target_cas,
            target_cost,
            eps,
            lambda,
            mutations,
            capacity,
            budget,
            rng_seed,
            tech,
            parallel,
            out: dir,
        } => {
            let started = unix_now();
            let clock = Instant::now();
            let tech_cfg = load_tech(tech.as_deref())?;
            let initial = match (&seed_net, inputs) {
                (Some(path), _) => load_network(path)?,
                (None, Some(n)) => gen_exact_median(n)?,
                (None, None) => return Err("either --seed-net or --inputs is required".into()),
            };
            if let Some(n) = inputs {
                if n != initial.n() {
                    return Err(format!("--inputs {n} but the seed network has {} inputs", initial.n()).into());
                }
            }
            let target = match (target_cas, target_cost) {
                (Some(k), None) => SearchConfig::target_for_cas(&initial, k, &tech_cfg),
                (None, Some(t)) => t,
                _ => return Err("exactly one of --target-cas and --target-cost is required".into()),
            };
            let mut cfg = SearchConfig::new(initial, target, tech_cfg);
            if let Some(e) = eps {
                cfg.eps = e;
            }
            if let Some(c) = capacity {
                cfg.capacity = c;
            }
            cfg.lambda = lambda;
            cfg.mutations = mutations;
            cfg.budget = parse_budget(&budget)?;
            cfg.seed = rng_seed;
            cfg.parallel = parallel;

            let result = evolve(&cfg)?;
            result.write_run_dir(&cfg, &dir)?;
            let mut digests = Vec::new();
            for path in seed_net.iter().chain(tech.iter()) {
                digests.push(digest(path)?);
            }
            let manifest = RunManifest {
                tool: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
                subcommand: "search".into(),
                args: argv.to_vec(),
                seed: rng_seed,
                started_unix: started,
                finished_unix: unix_now(),
                elapsed_seconds: clock.elapsed().as_secs_f64(),
                inputs: digests,
            };
            write_file(&dir.join("manifest.json"), json_line(&manifest).as_bytes())?;

            let best = &result.best;
            writeln!(
                out,
                "target C = {:.1} +- {:.1}; {} evaluations; stage {}",
                cfg.target,
                cfg.eps,
                result.evaluations,
                result.stage.number()
            )?;
            writeln!(out, "best C = {:.1}, k = {}", best.cost.area, best.network.k())?;
            out.write_all(best.profile.render_text().as_bytes())?;
            writeln!(out, "archive: {} points in {}", result.archive.len(), dir.display())?;
            Ok(EXIT_OK)
        }
        Command::Filter { input, network, output } => {
            let net = load_network(&network)?;
            let window = Window::for_inputs(net.n()).ok_or("filter networks need 9 or 25 inputs")?;
            let img = imaging::median_filter(&load_image(&input)?, &net, window)?;
            write_file(&output, &write_pgm(&img))?;
            Ok(EXIT_OK)
        }
        Command::Noise {
            input,
            kind,
            p,
            rng_seed,
            output,
        } => {
            let img = load_image(&input)?;
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            let noisy = match kind {
                NoiseKind::SaltPepper => imaging::add_salt_pepper(&img, p, &mut rng)?,
                NoiseKind::Shot => imaging::add_shot_noise(&img, p, &mut rng)?,
            };
            write_file(&output, &write_pgm(&noisy))?;
            Ok(EXIT_OK)
        }
        Command::Ssim { a, b } => {
            let value = imaging::ssim(&load_image(&a)?, &load_image(&b)?)?;
            writeln!(out, "{value:.6}")?;
            Ok(EXIT_OK)
        }
        Command::Scene { name, size, output } => {
            if size == 0 {
                return Err("size must be positive".into());
            }
            let img = imaging::scenes::all(size)
                .into_iter()
                .find(|(n, _)| *n == name)
                .map(|(_, img)| img)
                .ok_or_else(|| {
                    let names: Vec<&str> = imaging::scenes::all(1).iter().map(|(n, _)| *n).collect();
                    format!("unknown scene `{name}` (available: {})", names.join(", "))
                })?;
            write_file(&output, &write_pgm(&img))?;
            Ok(EXIT_OK)
        }
        Command::ExportRtl {
            network,
            tech,
            entity,
            output,
        } => {
            let rtl = emit_rtl(&load_network(&network)?, &load_tech(tech.as_deref())?, &entity);
            match output {
                Some(path) => write_file(&path, rtl.as_bytes())?,
                None => out.write_all(rtl.as_bytes())?,
            }
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (program name first) and runs the subcommand, writing
/// normal output to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, &argv, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}
