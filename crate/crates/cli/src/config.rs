use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

#[derive(Parser, Debug)]
#[command(name = "kpzlab", version, about = "Exponential last-passage percolation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandLine,
}

#[derive(Subcommand, Debug)]
pub enum CommandLine {
    /// Passage times and the corner-to-corner geodesic of one square
    Simulate(RunArgs),
    /// Tree/portrait duality and the law of dual weights
    Duality(RunArgs),
    /// Box dimension of rescaled geodesic graphs
    Dimension(RunArgs),
    /// Transversal fluctuation exponent, flip symmetry and 1:2:3 scaling
    Exponent(RunArgs),
    /// Hoelder exponent of one long rescaled geodesic
    Holder(RunArgs),
    /// Occupation-time exceedance of the geodesic into the origin
    Occupation(RunArgs),
    /// Law of anti-diagonal Busemann increments
    Busemann(RunArgs),
    /// Distinct strip restrictions of grid geodesics under refinement
    Highways(RunArgs),
    /// Fraction of a window covered by grid geodesics at n and 4n
    Frame(RunArgs),
    /// Coalescence of interface traces and the trifurcation census
    OneEnded(RunArgs),
    /// Trees, portraits, Busemann field and edges of a small window
    Export(RunArgs),
}

impl CommandLine {
    pub fn split(self) -> (Command, RunArgs) {
        use CommandLine as C;
        match self {
            C::Simulate(a) => (Command::Simulate, a),
            C::Duality(a) => (Command::Duality, a),
            C::Dimension(a) => (Command::Dimension, a),
            C::Exponent(a) => (Command::Exponent, a),
            C::Holder(a) => (Command::Holder, a),
            C::Occupation(a) => (Command::Occupation, a),
            C::Busemann(a) => (Command::Busemann, a),
            C::Highways(a) => (Command::Highways, a),
            C::Frame(a) => (Command::Frame, a),
            C::OneEnded(a) => (Command::OneEnded, a),
            C::Export(a) => (Command::Export, a),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// JSON file with flat keys mirroring the flags; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory [default: kpzlab-out/<command>]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core. Never changes the results
    #[arg(long, env = "KPZLAB_THREADS")]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub params: Params,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Duality,
    Dimension,
    Exponent,
    Holder,
    Occupation,
    Busemann,
    Highways,
    Frame,
    OneEnded,
    Export,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Duality => "duality",
            Command::Dimension => "dimension",
            Command::Exponent => "exponent",
            Command::Holder => "holder",
            Command::Occupation => "occupation",
            Command::Busemann => "busemann",
            Command::Highways => "highways",
            Command::Frame => "frame",
            Command::OneEnded => "one-ended",
            Command::Export => "export",
        }
    }

    /// Every key the command reads, with its default.
    pub fn defaults(self) -> Params {
        let base = Params { seed: Some(1), ..Params::default() };
        match self {
            Command::Simulate => Params { size: Some(64), ..base },
            Command::Duality => Params {
                size: Some(256),
                k: Some(1024),
                seeds: Some(1),
                samples: Some(100_000),
                law_size: Some(128),
                law_k: Some(512),
                max_replicas: Some(1024),
                ..base
            },
            Command::Dimension => Params {
                n: Some(4096),
                scales: Some(8),
                replicas: Some(16),
                walk_steps: Some(1 << 20),
                tolerance: Some(0.10),
                ..base
            },
            Command::Exponent => Params {
                sizes: Some(vec![256, 512, 1024, 2048, 4096, 8192]),
                replicas: Some(64),
                tolerance: Some(0.05),
                q: Some(2.0),
                horizon: Some(1.0),
                scaling_n: Some(256),
                scaling_replicas: Some(400),
                alpha: Some(0.01),
                ..base
            },
            // empty gaps stand for the default ladder at the resolved n
            Command::Holder => Params { n: Some(1 << 14), gaps: Some(Vec::new()), tolerance: Some(0.07), ..base },
            Command::Occupation => Params {
                n: Some(128),
                root_depth: Some(4),
                replicas: Some(256),
                interval: Some(vec![-1.0 / 16.0, 1.0 / 16.0]),
                time_window: Some(vec![-1.0, -0.5]),
                m_values: Some(vec![0.0, 1.0, 2.0, 4.0, 8.0, 10.0, 16.0]),
                ..base
            },
            Command::Busemann => {
                Params { size: Some(128), k: Some(512), samples: Some(100_000), max_replicas: Some(1024), ..base }
            }
            Command::Highways => Params {
                n: Some(256),
                seeds: Some(3),
                grid: Some(32),
                strip: Some(vec![1.0 / 3.0, 2.0 / 3.0]),
                x_range: Some(vec![-1.0, 1.0]),
                tolerance: Some(0.10),
                ..base
            },
            Command::Frame => Params {
                n: Some(256),
                seeds: Some(3),
                grid: Some(16),
                x_range: Some(vec![-1.0, 1.0]),
                frame_t: Some(vec![0.25, 0.75]),
                frame_x: Some(vec![-0.5, 0.5]),
                ..base
            },
            Command::OneEnded => Params {
                n: Some(256),
                sources: Some(16),
                spacing: Some(1.0 / 16.0),
                multiples: Some(vec![2.0, 4.0, 8.0, 16.0]),
                seeds: Some(32),
                ..base
            },
            Command::Export => Params { size: Some(64), k: Some(256), ..base },
        }
    }
}

/// Flat experiment configuration. Unset keys take the command's default.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Name of the command the file is meant for (config files only)
    #[arg(skip)]
    pub command: Option<String>,
    /// Base seed, decimal or 0x-prefixed hex
    #[arg(long, value_parser = parse_seed)]
    pub seed: Option<u64>,
    /// Scale parameter n (lattice steps per unit of rescaled time)
    #[arg(long)]
    pub n: Option<i64>,
    /// Window side in lattice units
    #[arg(long)]
    pub size: Option<i64>,
    /// Root distance K
    #[arg(long)]
    pub k: Option<i64>,
    /// Number of consecutive seeds
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Replicas per size
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Number of dyadic box scales (the 2 finest and the coarsest are not fitted)
    #[arg(long)]
    pub scales: Option<usize>,
    /// Lattice sizes, comma separated
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<i64>>,
    /// Dyadic gaps, comma separated [default: 2^-4 down to 16 lattice steps]
    #[arg(long, value_delimiter = ',')]
    pub gaps: Option<Vec<f64>>,
    /// Number of certified samples
    #[arg(long)]
    pub samples: Option<usize>,
    /// Replicas tried before giving up on certification
    #[arg(long)]
    pub max_replicas: Option<usize>,
    /// Window side for the dual weight sample
    #[arg(long)]
    pub law_size: Option<i64>,
    /// Root distance for the dual weight sample
    #[arg(long)]
    pub law_k: Option<i64>,
    /// Depth of the root below the origin, in units of n
    #[arg(long)]
    pub root_depth: Option<i64>,
    /// Spatial interval I (two values)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub interval: Option<Vec<f64>>,
    /// Time window J (two values)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub time_window: Option<Vec<f64>>,
    /// Thresholds M, comma separated
    #[arg(long, value_delimiter = ',')]
    pub m_values: Option<Vec<f64>>,
    /// Endpoints per line
    #[arg(long)]
    pub grid: Option<usize>,
    /// Time strip (two values)
    #[arg(long, value_delimiter = ',')]
    pub strip: Option<Vec<f64>>,
    /// Range of endpoint positions (two values)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x_range: Option<Vec<f64>>,
    /// Time range of the coverage window (two values)
    #[arg(long, value_delimiter = ',')]
    pub frame_t: Option<Vec<f64>>,
    /// Space range of the coverage window (two values)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub frame_x: Option<Vec<f64>>,
    /// Number of interface sources
    #[arg(long)]
    pub sources: Option<usize>,
    /// Source spacing in rescaled space
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Window heights as multiples of the spacing, comma separated
    #[arg(long, value_delimiter = ',')]
    pub multiples: Option<Vec<f64>>,
    /// Scale factor q of the 1:2:3 test
    #[arg(long)]
    pub q: Option<f64>,
    /// Short horizon t of the 1:2:3 test
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Scale n of the 1:2:3 test
    #[arg(long)]
    pub scaling_n: Option<i64>,
    /// Replicas per ensemble of the 1:2:3 test
    #[arg(long)]
    pub scaling_replicas: Option<usize>,
    /// Steps of the random-walk calibration graph
    #[arg(long)]
    pub walk_steps: Option<usize>,
    /// Tolerance of the headline assertion
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Level of the two-sample tests
    #[arg(long)]
    pub alpha: Option<f64>,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    kpzlab::lattice::parse_seed(s).map_err(|e| e.to_string())
}

macro_rules! getters {
    ($($name:ident: $t:ty),* $(,)?) => {
        impl Params {
            $(
                pub fn $name(&self) -> $t {
                    self.$name.clone().expect(concat!("`", stringify!($name), "` is resolved"))
                }
            )*
        }
    };
}

// accessors for resolved configs, where every key of the command is set
getters!(
    seed: u64, n: i64, size: i64, k: i64, seeds: usize, replicas: usize, scales: usize, sizes: Vec<i64>,
    samples: usize, max_replicas: usize, law_size: i64, law_k: i64, root_depth: i64, interval: Vec<f64>,
    time_window: Vec<f64>, m_values: Vec<f64>, grid: usize, strip: Vec<f64>, x_range: Vec<f64>,
    frame_t: Vec<f64>, frame_x: Vec<f64>, sources: usize, spacing: f64, multiples: Vec<f64>, q: f64,
    horizon: f64, gaps: Vec<f64>, scaling_n: i64, scaling_replicas: usize, walk_steps: usize, tolerance: f64, alpha: f64,
);

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn to_map(p: &Params) -> Map<String, Value> {
    match serde_json::to_value(p).expect("params serialize") {
        Value::Object(m) => m.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => unreachable!(),
    }
}

/// Defaults, then the config file, then flags.
pub fn resolve(command: Command, file: Option<&Path>, flags: &Params) -> Result<Params, ConfigError> {
    let defaults = command.defaults();
    let mut merged = to_map(&defaults);
    let mut layers = Vec::new();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let from_file: Params =
            serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        if let Some(c) = &from_file.command {
            if c != command.name() {
                return Err(ConfigError(format!("{}: config is for `{c}`, not `{}`", path.display(), command.name())));
            }
        }
        layers.push((format!("{}", path.display()), from_file));
    }
    layers.push(("command line".to_string(), flags.clone()));
    for (origin, layer) in layers {
        for (key, value) in to_map(&layer) {
            if key == "command" {
                continue;
            }
            if !merged.contains_key(&key) {
                return Err(ConfigError(format!("{origin}: key `{key}` is not used by `{}`", command.name())));
            }
            merged.insert(key, value);
        }
    }
    let mut p: Params = serde_json::from_value(Value::Object(merged)).map_err(|e| ConfigError(e.to_string()))?;
    p.command = Some(command.name().to_string());
    validate(&p)?;
    if let (Some(gaps), Some(n)) = (&mut p.gaps, p.n) {
        if gaps.is_empty() {
            *gaps = kpzlab::stats::default_holder_gaps(n);
        }
    }
    Ok(p)
}

fn validate(p: &Params) -> Result<(), ConfigError> {
    let pairs = [
        ("interval", &p.interval),
        ("time_window", &p.time_window),
        ("strip", &p.strip),
        ("x_range", &p.x_range),
        ("frame_t", &p.frame_t),
        ("frame_x", &p.frame_x),
    ];
    for (key, v) in pairs {
        if let Some(v) = v {
            if v.len() != 2 || !(v[0] < v[1]) {
                return Err(ConfigError(format!("`{key}` must be two increasing values, got {v:?}")));
            }
        }
    }
    let positive = [
        ("n", p.n),
        ("size", p.size),
        ("k", p.k),
        ("law_size", p.law_size),
        ("law_k", p.law_k),
        ("root_depth", p.root_depth),
        ("scaling_n", p.scaling_n),
    ];
    for (key, v) in positive {
        if let Some(v) = v {
            if v < 1 {
                return Err(ConfigError(format!("`{key}` must be positive, got {v}")));
            }
        }
    }
    if let Some(sizes) = &p.sizes {
        if sizes.iter().any(|&s| s < 2) {
            return Err(ConfigError(format!("`sizes` must be at least 2, got {sizes:?}")));
        }
    }
    if let Some(a) = p.alpha {
        if !(a > 0.0 && a < 1.0) {
            return Err(ConfigError(format!("`alpha` must lie in (0, 1), got {a}")));
        }
    }
    if p.seeds == Some(0) {
        return Err(ConfigError("`seeds` must be at least 1".into()));
    }
    Ok(())
}

/// Resolved configuration and its hash, as written to `config.lock.json`.
#[derive(Serialize)]
pub struct Lock {
    pub command: String,
    pub config: Map<String, Value>,
    pub hash: String,
}

impl Lock {
    pub fn new(p: &Params) -> Lock {
        let mut config = to_map(p);
        config.remove("command");
        let command = p.command.clone().unwrap_or_default();
        let canonical = serde_json::to_string(&(&command, &config)).expect("config serializes");
        let hash = format!("sha256:{:x}", Sha256::digest(canonical.as_bytes()));
        Lock { command, config, hash }
    }
}
