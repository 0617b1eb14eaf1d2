use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use cutstokes_core::fe::FeTriplet;
use cutstokes_core::freefall::{DragConfig, FallConfig, GRAVITY};
use cutstokes_core::harness::{CaseConfig, EIG_SEED};
use serde::{Deserialize, Serialize};

/// Environment variable naming the root under which run directories are
/// created.
pub const OUTPUT_ROOT_VAR: &str = "CUTSTOKES_OUTPUT";

#[derive(Debug, Clone, Parser, Serialize, Deserialize)]
#[command(name = "cutstokes", about = "Fictitious-domain Stokes experiments on a cut background mesh")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Common {
    /// p2p1p0, p1bp1p0, q2q1q0 or q1q0q0.
    #[arg(long, global = true, default_value = "p2p1p0")]
    pub triplet: String,
    #[arg(long, global = true, allow_negative_numbers = true, default_value_t = 0.05)]
    pub gamma0: f64,
    #[arg(long, global = true, allow_negative_numbers = true, default_value_t = 0.5)]
    pub xc: f64,
    #[arg(long, global = true, allow_negative_numbers = true, default_value_t = 0.5)]
    pub yc: f64,
    #[arg(long, global = true, allow_negative_numbers = true, default_value_t = 0.21)]
    pub radius: f64,
    #[arg(long, global = true, allow_negative_numbers = true, default_value_t = 1.0)]
    pub nu: f64,
    /// Write VTK files next to the CSV output.
    #[arg(long, global = true)]
    pub vtk: bool,
    #[arg(long, global = true, default_value_t = EIG_SEED)]
    pub seed: u64,
    /// Output directory; defaults to a fresh directory under $CUTSTOKES_OUTPUT
    /// (or ./runs).
    #[serde(skip)]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// One manufactured-solution case.
    Single {
        #[arg(long, default_value_t = 40)]
        n: usize,
    },
    /// Error table and fitted orders over doubling meshes.
    Convergence {
        #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 40, 80])]
        levels: Vec<usize>,
    },
    /// Errors and condition estimates over a γ₀ grid.
    GammaSweep {
        #[arg(long, default_value_t = 40)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_values_t = default_gamma_grid())]
        grid: Vec<f64>,
    },
    /// Multiplier error as the ball moves horizontally, with and without
    /// stabilization.
    GeometrySweep {
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        xc_from: f64,
        #[arg(long, default_value_t = 0.7)]
        xc_to: f64,
        #[arg(long, default_value_t = 0.005)]
        xc_step: f64,
    },
    /// Generalized eigenvalue constants C_u(h), C_p(h).
    Assumptions {
        #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 40, 80])]
        levels: Vec<usize>,
    },
    /// Falling ball under gravity and Stokes drag.
    Freefall {
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 0.02)]
        mass: f64,
        #[arg(long, default_value_t = 0.1)]
        t_end: f64,
        /// Initial height of the ball center.
        #[arg(long, default_value_t = 0.75)]
        h2: f64,
        /// Recompute the drag every this many steps.
        #[arg(long, default_value_t = 1)]
        cadence: usize,
        /// With --vtk, write a snapshot every this many drag solves.
        #[arg(long, default_value_t = 10)]
        snapshot_every: usize,
        /// Switch gravity off.
        #[arg(long)]
        no_gravity: bool,
    },
    /// Repeat a run from its manifest.
    Rerun { manifest: PathBuf },
}

pub fn default_gamma_grid() -> Vec<f64> {
    vec![1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 0.1, 0.2, 1.0, 10.0, 100.0, 1000.0]
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Single { .. } => "single",
            Command::Convergence { .. } => "convergence",
            Command::GammaSweep { .. } => "gamma-sweep",
            Command::GeometrySweep { .. } => "geometry-sweep",
            Command::Assumptions { .. } => "assumptions",
            Command::Freefall { .. } => "freefall",
            Command::Rerun { .. } => "rerun",
        }
    }
}

impl Common {
    pub fn triplet(&self) -> anyhow::Result<FeTriplet> {
        Ok(self.triplet.parse()?)
    }

    /// Base case with the shared parameters, checked before any work.
    pub fn case(&self, n: usize) -> anyhow::Result<CaseConfig> {
        if n < 2 {
            bail!("n must be at least 2, got {n}");
        }
        if self.radius >= 0.5 {
            bail!("radius must be below 0.5, got {}", self.radius);
        }
        if self.gamma0 < 0.0 {
            bail!("gamma0 must be non-negative, got {}", self.gamma0);
        }
        let cfg =
            CaseConfig { triplet: self.triplet()?, n, gamma0: self.gamma0, center: [self.xc, self.yc], radius: self.radius, nu: self.nu, condition: false };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl Cli {
    /// Rejects out-of-range parameters before any computation.
    pub fn validate(&self) -> anyhow::Result<()> {
        match &self.command {
            Command::Single { n } | Command::GammaSweep { n, .. } => {
                self.common.case(*n)?;
            }
            Command::Convergence { levels } | Command::Assumptions { levels } => {
                if levels.is_empty() {
                    bail!("no mesh levels given");
                }
                for &n in levels {
                    self.common.case(n)?;
                }
            }
            Command::GeometrySweep { n, xc_from, xc_to, .. } => {
                let base = self.common.case(*n)?;
                for x in [*xc_from, *xc_to] {
                    CaseConfig { center: [x, base.center[1]], ..base }.validate()?;
                }
            }
            Command::Freefall { .. } => {
                self.common.case(2)?;
                self.fall()?.validate()?;
            }
            Command::Rerun { .. } => {}
        }
        if let Command::GammaSweep { grid, .. } = &self.command {
            if let Some(g) = grid.iter().find(|g| g.is_nan() || **g <= 0.0) {
                bail!("gamma grid values must be positive, got {g}");
            }
        }
        Ok(())
    }

    pub fn fall(&self) -> anyhow::Result<FallConfig> {
        let Command::Freefall { n, dt, mass, t_end, h2, cadence, no_gravity, .. } = &self.command else {
            bail!("not a free-fall run");
        };
        let c = &self.common;
        Ok(FallConfig {
            drag: DragConfig { triplet: c.triplet()?, n: *n, gamma0: c.gamma0, nu: c.nu, radius: c.radius },
            x_c: c.xc,
            h2_initial: *h2,
            mass: *mass,
            gravity: if *no_gravity { 0.0 } else { GRAVITY },
            dt: *dt,
            t_end: *t_end,
            cadence: *cadence,
        })
    }

    pub fn manifest(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}

pub fn load_manifest(path: &Path) -> anyhow::Result<Cli> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cli: Cli = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if matches!(cli.command, Command::Rerun { .. }) {
        bail!("manifest points at another rerun");
    }
    Ok(cli)
}
