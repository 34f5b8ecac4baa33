use std::fs;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use oflx::mollifier::Engine;
use oflx::synth::{FieldKind, FieldSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Named set of numeric tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ToleranceProfile {
    pub name: String,
    /// Absolute bound on the lemma identities, scaled by max(1, field size).
    pub lemma: f64,
    /// Bound on |u3| at x3 = 0, scaled by max(1, sup|u|).
    pub boundary_normal: f64,
    /// Bound on |identityResidual| / fluxScale in `budget`.
    pub identity_residual: f64,
}

impl ToleranceProfile {
    pub const NAMES: [&'static str; 3] = ["default", "strict", "loose"];

    pub fn named(name: &str) -> CliResult<Self> {
        let (lemma, boundary_normal, identity_residual) = match name {
            "default" => (1e-11, 1e-12, 1e-2),
            "strict" => (1e-12, 1e-13, 1e-3),
            "loose" => (1e-9, 1e-10, 1e-1),
            other => {
                return Err(CliError::Usage(format!(
                    "unknown tolerance profile {other:?}; known profiles: {}",
                    Self::NAMES.join(", ")
                )))
            }
        };
        Ok(Self { name: name.into(), lemma, boundary_normal, identity_residual })
    }

    fn validate(&self) -> CliResult<()> {
        for (k, v) in [("lemma", self.lemma), ("boundaryNormal", self.boundary_normal), ("identityResidual", self.identity_residual)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!("tolerance {k} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        Self::named("default").expect("default profile exists")
    }
}

/// Parameters of every command. Fields a command does not use are ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct RunConfig {
    /// Generator description for `gen`.
    pub field: Option<FieldSpec>,
    /// Snapshot times for `gen`; must start at 0.
    pub times: Vec<f64>,
    /// Input snapshots, in time order.
    pub inputs: Vec<PathBuf>,
    /// Output directory (`gen`) or report path prefix (other commands).
    pub output: Option<PathBuf>,
    /// Strictly decreasing ε ladder.
    pub epsilons: Vec<f64>,
    /// Integration horizon; defaults to the last snapshot time.
    pub t: Option<f64>,
    pub engine: Engine,
    pub directions: Vec<[i64; 3]>,
    pub scale_count: usize,
    /// Smallest rung of the structure-function ladder; defaults to 2·min(hx, hy, hz).
    pub scale_base: Option<f64>,
    /// Boundary layer depth for `modulus`.
    pub delta: Option<f64>,
    /// Truncation level of the truncated reflection in `verify`.
    pub gamma: Option<f64>,
    pub tolerance_profile: ToleranceProfile,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            field: None,
            times: vec![0.0],
            inputs: Vec::new(),
            output: None,
            epsilons: Vec::new(),
            t: None,
            engine: Engine::Direct,
            directions: vec![[1, 0, 0], [0, 1, 0], [0, 0, 1]],
            scale_count: 4,
            scale_base: None,
            delta: None,
            gamma: None,
            tolerance_profile: ToleranceProfile::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Direct,
    Spectral,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Direct => Engine::Direct,
            EngineArg::Spectral => Engine::Spectral,
        }
    }
}

/// Flags shared by all commands; each overrides the matching config-file value.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input snapshot (repeatable, in time order).
    #[arg(long = "input", short = 'i')]
    pub inputs: Vec<PathBuf>,
    /// Output directory (gen) or report path prefix.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    /// Comma-separated, strictly decreasing ε ladder.
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Vec<f64>,
    /// Integration horizon.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineArg>,
    /// Semicolon-separated integer directions, e.g. "1,0,0;0,0,1".
    #[arg(long)]
    pub directions: Option<String>,
    #[arg(long)]
    pub scale_count: Option<usize>,
    #[arg(long)]
    pub scale_base: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Comma-separated snapshot times for gen.
    #[arg(long, value_delimiter = ',')]
    pub times: Vec<f64>,
    /// Seed of a seeded generator kind.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Hölder exponent of a lacunary kind.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Mode count of a lacunary kind.
    #[arg(long)]
    pub mode_count: Option<usize>,
    #[arg(long)]
    pub tolerance_profile: Option<String>,
}

fn parse_directions(s: &str) -> CliResult<Vec<[i64; 3]>> {
    s.split(';')
        .map(|d| {
            let v: Vec<i64> = d
                .split(',')
                .map(|x| x.trim().parse::<i64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Usage(format!("bad direction {d:?}: {e}")))?;
            <[i64; 3]>::try_from(v).map_err(|_| CliError::Usage(format!("direction {d:?} needs three integers")))
        })
        .collect()
}

impl RunConfig {
    /// Reads the config file (if any), applies flag overrides and validates.
    pub fn load(o: &Overrides) -> CliResult<Self> {
        let mut c = match &o.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        c.apply(o)?;
        c.validate()?;
        Ok(c)
    }

    fn apply(&mut self, o: &Overrides) -> CliResult<()> {
        if !o.inputs.is_empty() {
            self.inputs = o.inputs.clone();
        }
        if let Some(p) = &o.out {
            self.output = Some(p.clone());
        }
        if !o.epsilons.is_empty() {
            self.epsilons = o.epsilons.clone();
        }
        if o.t.is_some() {
            self.t = o.t;
        }
        if let Some(e) = o.engine {
            self.engine = e.into();
        }
        if let Some(d) = &o.directions {
            self.directions = parse_directions(d)?;
        }
        if let Some(n) = o.scale_count {
            self.scale_count = n;
        }
        if o.scale_base.is_some() {
            self.scale_base = o.scale_base;
        }
        if o.delta.is_some() {
            self.delta = o.delta;
        }
        if o.gamma.is_some() {
            self.gamma = o.gamma;
        }
        if !o.times.is_empty() {
            self.times = o.times.clone();
        }
        if let Some(name) = &o.tolerance_profile {
            self.tolerance_profile = ToleranceProfile::named(name)?;
        }
        if o.seed.is_some() || o.alpha.is_some() || o.mode_count.is_some() {
            let Some(spec) = self.field.as_mut() else {
                return Err(CliError::Usage("--seed, --alpha and --mode-count need a field in the config".into()));
            };
            match &mut spec.kind {
                FieldKind::Lacunary { alpha, mode_count, seed } => {
                    *alpha = o.alpha.unwrap_or(*alpha);
                    *mode_count = o.mode_count.unwrap_or(*mode_count);
                    *seed = o.seed.unwrap_or(*seed);
                }
                FieldKind::PlanarLacunary { alpha, mode_count } if o.seed.is_none() => {
                    *alpha = o.alpha.unwrap_or(*alpha);
                    *mode_count = o.mode_count.unwrap_or(*mode_count);
                }
                FieldKind::RandomSmooth { seed, .. } if o.alpha.is_none() && o.mode_count.is_none() => {
                    *seed = o.seed.unwrap_or(*seed);
                }
                other => {
                    return Err(CliError::Usage(format!("field kind {other:?} does not take the given --seed/--alpha/--mode-count")));
                }
            }
        }
        Ok(())
    }

    /// Checks tolerances, the ε ladder, scalar parameters and input paths.
    pub fn validate(&self) -> CliResult<()> {
        self.tolerance_profile.validate()?;
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(CliError::Usage(format!("epsilon {e} must be positive and finite")));
        }
        if self.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(CliError::Usage(format!("epsilon ladder {:?} must be strictly decreasing", self.epsilons)));
        }
        for (k, v) in [("t", self.t), ("scaleBase", self.scale_base), ("delta", self.delta), ("gamma", self.gamma)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Usage(format!("{k} must be positive and finite, got {v}")));
                }
            }
        }
        if self.times.first() != Some(&0.0) || self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CliError::Usage(format!("times {:?} must start at 0 and increase strictly", self.times)));
        }
        for p in &self.inputs {
            if !p.is_file() {
                return Err(CliError::Io(format!("input {} is not a readable file", p.display())));
            }
        }
        Ok(())
    }
}
