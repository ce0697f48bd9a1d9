use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, GridSpec, ScalarField};
use crate::oracles::Barenblatt;
use crate::sampling::band_limited;
use crate::semigroup::apply_heat;
use crate::solver::{InitialData, ModelParams, RunControl};

/// Named recipe for one initial field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialRecipe {
    Constant {
        value: f64,
    },
    RandomBandLimited {
        max: f64,
        #[serde(default = "default_modes")]
        modes: usize,
        #[serde(default)]
        offset: f64,
    },
    GaussianBump {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: Vec<f64>,
        #[serde(default)]
        floor: f64,
    },
    /// Barenblatt profile of the run's `m` at time `t0`.
    Barenblatt {
        c: f64,
        t0: f64,
    },
    /// `value` left of `position` on the first axis, zero to the right.
    Front {
        value: f64,
        position: f64,
    },
}

fn default_modes() -> usize {
    4
}

impl InitialRecipe {
    pub fn build(&self, grid: &GridSpec, params: &ModelParams, seed: u64) -> Result<ScalarField> {
        match self {
            InitialRecipe::Constant { value } => {
                if !(*value >= 0.0) {
                    return Err(Error::Config("constant preset needs value ≥ 0".into()));
                }
                Ok(ScalarField::constant(*grid, *value))
            }
            InitialRecipe::RandomBandLimited { max, modes, offset } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                band_limited(grid, &mut rng, *modes, *offset, *max)
            }
            InitialRecipe::GaussianBump {
                amplitude,
                width,
                center,
                floor,
            } => {
                if !(*width > 0.0) {
                    return Err(Error::Config("gaussian-bump needs width > 0".into()));
                }
                let mut c = [0.0; 3];
                for (k, x) in center.iter().take(3).enumerate() {
                    c[k] = *x;
                }
                ScalarField::from_fn(*grid, |x| {
                    let d = grid.displacement(x, &c);
                    let r2: f64 = d.iter().map(|v| v * v).sum();
                    floor + amplitude * (-r2 / (2.0 * width * width)).exp()
                })
            }
            InitialRecipe::Barenblatt { c, t0 } => Barenblatt::new(params.m(), grid.dim(), *c)?.field(grid, *t0),
            InitialRecipe::Front { value, position } => {
                ScalarField::from_fn(*grid, |x| if x[0] < *position { *value } else { 0.0 })
            }
        }
    }
}

/// Which functionals the run ledger tracks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSelection {
    pub kappa: Vec<f64>,
    /// Defaults to `{p+1, p+2, p+m}` when empty.
    pub rs: Vec<f64>,
    pub p: f64,
    /// Moser ladder is extended until its top rung reaches this.
    pub moser_r_min: f64,
}

impl Default for DiagnosticsSelection {
    fn default() -> Self {
        DiagnosticsSelection {
            kappa: vec![0.2],
            rs: Vec::new(),
            p: 2.0,
            moser_r_min: 64.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub seed: u64,
    pub params: ModelParams,
    pub grid: GridSpec,
    pub u0: InitialRecipe,
    pub v0: InitialRecipe,
    #[serde(default)]
    pub control: RunControl,
    #[serde(default)]
    pub diagnostics: DiagnosticsSelection,
    /// In ε-sweeps, smooth `u₀` by a Gaussian of width ε per member.
    #[serde(default)]
    pub mollify_per_eps: bool,
}

fn default_name() -> String {
    "run".into()
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        self.validate()?;
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.control.validate()?;
        if self.seed > i64::MAX as u64 {
            return Err(Error::Config("seed must be below 2^63 to fit a TOML integer".into()));
        }
        let d = &self.diagnostics;
        if d.kappa.iter().any(|k| !(*k > 0.0 && *k < 1.0)) {
            return Err(Error::Config("diagnostics κ values must lie in (0, 1)".into()));
        }
        if !(d.p >= 1.0) {
            return Err(Error::Config("diagnostics p must be ≥ 1".into()));
        }
        if let InitialRecipe::Barenblatt { t0, .. } = self.u0 {
            if !(t0 > 0.0) {
                return Err(Error::Config("barenblatt preset needs t0 > 0".into()));
            }
        }
        Ok(())
    }

    /// Tracked exponents, defaulting to `{p+1, p+2, p+m}`.
    pub fn ledger_rs(&self) -> Vec<f64> {
        if !self.diagnostics.rs.is_empty() {
            return self.diagnostics.rs.clone();
        }
        let p = self.diagnostics.p;
        let mut rs = vec![p + 1.0, p + 2.0, p + self.params.m()];
        rs.sort_by(f64::total_cmp);
        rs.dedup();
        rs
    }

    /// Initial pair; `u₀` uses `seed`, `v₀` uses `seed + 1`.
    pub fn initial_data(&self) -> Result<InitialData> {
        let u0 = self.u0.build(&self.grid, &self.params, self.seed)?;
        let v0 = self.v0.build(&self.grid, &self.params, self.seed.wrapping_add(1))?;
        InitialData::new(u0, v0)
    }

    /// Initial pair for one member of an ε-sweep.
    pub fn initial_data_for_eps(&self, eps: f64) -> Result<InitialData> {
        let data = self.initial_data()?;
        if !self.mollify_per_eps || eps == 0.0 {
            return Ok(data);
        }
        // a Gaussian mollifier of width ε is the heat flow at time ε²/2
        let u0 = apply_heat(&data.u0, 0.5 * eps * eps)?;
        InitialData::new(u0.map(|x| x.max(0.0)), data.v0)
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "constant-equilibrium" => Ok(RunConfig {
                name: name.into(),
                seed: 0,
                params: ModelParams::new(2.0, 0.01, 1.0, 2.0, 1.0)?,
                grid: GridSpec::periodic(1, 10.0, 64)?,
                u0: InitialRecipe::Constant { value: 2.0 },
                v0: InitialRecipe::Constant { value: 0.5 },
                control: RunControl {
                    horizon: 2.0,
                    dt0: 0.01,
                    snapshot_every: 0.5,
                    ..RunControl::default()
                },
                diagnostics: DiagnosticsSelection::default(),
                mollify_per_eps: false,
            }),
            "pme-barenblatt" => Ok(RunConfig {
                name: name.into(),
                seed: 0,
                params: ModelParams::new(2.0, 0.0, 0.0, 0.0, 0.0)?,
                grid: GridSpec::new(1, 6.0, 128, Boundary::ZeroFlux)?,
                u0: InitialRecipe::Barenblatt { c: 1.0, t0: 1.0 },
                v0: InitialRecipe::Constant { value: 0.0 },
                control: RunControl {
                    horizon: 1.0,
                    dt0: 2e-3,
                    dt_max: 2e-3,
                    adaptive: false,
                    snapshot_every: 0.25,
                    ..RunControl::default()
                },
                diagnostics: DiagnosticsSelection::default(),
                mollify_per_eps: false,
            }),
            "random-chemotaxis" => Ok(RunConfig {
                name: name.into(),
                seed: 1,
                params: ModelParams::new(2.0, 0.01, 1.0, 1.0, 1.0)?,
                grid: GridSpec::periodic(1, 10.0, 128)?,
                u0: InitialRecipe::RandomBandLimited {
                    max: 2.0,
                    modes: 4,
                    offset: 0.0,
                },
                v0: InitialRecipe::RandomBandLimited {
                    max: 1.0,
                    modes: 4,
                    offset: 0.5,
                },
                control: RunControl {
                    horizon: 5.0,
                    dt0: 0.01,
                    dt_max: 0.05,
                    snapshot_every: 0.5,
                    ..RunControl::default()
                },
                diagnostics: DiagnosticsSelection::default(),
                mollify_per_eps: false,
            }),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (known: constant-equilibrium, pme-barenblatt, random-chemotaxis)"
            ))),
        }
    }

    /// Final time of the Barenblatt profile the run should match, if any.
    pub fn barenblatt_reference(&self) -> Option<(Barenblatt, f64)> {
        let p = &self.params;
        let pure = p.chi() == 0.0 && p.a() == 0.0 && p.b() == 0.0 && p.eps() == 0.0;
        match self.u0 {
            InitialRecipe::Barenblatt { c, t0 } if pure => Barenblatt::new(p.m(), self.grid.dim(), c)
                .ok()
                .map(|b| (b, t0 + self.control.horizon)),
            _ => None,
        }
    }
}
