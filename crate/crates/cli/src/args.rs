use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use folitor::homotopy::{Category, PathRule, SolverConfig};
use folitor::{Error, FoliationParams, Geometry, Slope};

#[derive(Parser, Debug)]
#[command(name = "folitor", version, about = "Leafwise complex structures on linear foliations of the 3-torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify the slope by scanning small denominators.
    Analyze(AnalyzeArgs),
    /// Integrate the homotopy to a leafwise holomorphic f.
    Solve(SolveArgs),
    /// Build the closed 1-form and check the induced Euclidean metric.
    Metric(SolveArgs),
    /// Build the Liouville counterexample family and test for the obstruction.
    Counterexample(CounterexampleArgs),
    /// Develop a leaf chart on a square patch.
    Chart(ChartArgs),
    /// Run the invariant battery.
    Verify(VerifyArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Dimension {
    Torus3,
    Torus2,
}

impl Dimension {
    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Torus3 => "torus3",
            Dimension::Torus2 => "torus2",
        }
    }
}

fn slope(s: &str) -> Result<Slope, String> {
    s.parse::<Slope>().map_err(|e| e.to_string())
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long, value_parser = slope, default_value = "sqrt2")]
    pub slope_a1: Slope,
    #[arg(long, value_parser = slope, default_value = "sqrt3")]
    pub slope_a2: Slope,
    /// One-slope shorthand: sets (a1, a2) = (S, 0).
    #[arg(long, value_parser = slope)]
    pub slope: Option<Slope>,
    #[arg(long, value_enum, default_value = "torus3")]
    pub dimension: Dimension,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Common {
    pub fn slopes(&self) -> (Slope, Slope) {
        match &self.slope {
            Some(s) => (s.clone(), Slope::integer(0)),
            None => (self.slope_a1.clone(), self.slope_a2.clone()),
        }
    }

    pub fn params(&self) -> FoliationParams<f64> {
        let (a1, a2) = self.slopes();
        FoliationParams::from_slopes(&a1, &a2)
    }

    pub fn geometry(&self) -> Geometry<f64> {
        match self.dimension {
            Dimension::Torus3 => Geometry::Torus3(self.params()),
            Dimension::Torus2 => Geometry::Torus2,
        }
    }
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Scan cutoff.
    #[arg(long, default_value_t = 2000)]
    pub cutoff: usize,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Beltrami coefficient as a field document; a seeded random smooth one when absent.
    #[arg(long)]
    pub in_field: Option<PathBuf>,
    /// Largest constant part of the random coefficient.
    #[arg(long, default_value_t = 0.35)]
    pub mean_max: f64,
    /// smooth, analytic or analytic(r).
    #[arg(long, default_value = "smooth")]
    pub category: String,
    /// Radius r for the analytic category.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, default_value = "linear")]
    pub path: String,
    #[arg(long, default_value_t = 1e-6)]
    pub residual_tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub vanish_guard: f64,
    #[arg(long, default_value_t = 1e-13)]
    pub resolvent_tol: f64,
    /// Per-step diagnostics as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

impl SolveArgs {
    pub fn solver_config(&self) -> Result<SolverConfig, Error> {
        let category = match (self.category.trim(), self.radius) {
            ("analytic", Some(r)) => format!("analytic({r})").parse::<Category>()?,
            ("analytic", None) => {
                return Err(Error::InvalidArgument("category analytic needs --radius".into()))
            }
            (c, _) => c.parse::<Category>()?,
        };
        for (name, v) in [
            ("residual_tol", self.residual_tol),
            ("vanish_guard", self.vanish_guard),
            ("resolvent_tol", self.resolvent_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        Ok(SolverConfig {
            residual_tol: self.residual_tol,
            vanish_guard: self.vanish_guard,
            resolvent_tol: self.resolvent_tol,
            category,
            path: self.path.parse::<PathRule>()?,
            ..SolverConfig::default()
        })
    }
}

#[derive(Args, Debug)]
pub struct CounterexampleArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of Liouville modes (at most 3).
    #[arg(long, default_value_t = 3)]
    pub modes: usize,
    /// Exponent targets, one per mode.
    #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
    pub s_targets: Vec<f64>,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub t: f64,
    /// Cutoff of the lattice fields in the nu solve.
    #[arg(long, default_value_t = 6)]
    pub cutoff: usize,
    /// RK4 steps of the nu solve.
    #[arg(long, default_value_t = 40)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub vanish_guard: f64,
}

#[derive(Args, Debug)]
pub struct ChartArgs {
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Half side of the square patch in leaf coordinates.
    #[arg(long, default_value_t = std::f64::consts::PI)]
    pub patch_radius: f64,
    /// Points per side.
    #[arg(long, default_value_t = 33)]
    pub grid: usize,
    /// Base point x0 as x1,x2,x3.
    #[arg(long, value_delimiter = ',', default_value = "0,0,0", allow_hyphen_values = true)]
    pub base: Vec<f64>,
    /// Random rectangles for the loop residual.
    #[arg(long, default_value_t = 16)]
    pub loops: usize,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 4)]
    pub cutoff: usize,
    #[arg(long, hide = true)]
    pub inject_fault: Option<String>,
}
