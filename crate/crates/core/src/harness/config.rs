use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::flux::flux_preset;
use crate::geometry::metric_preset;
use crate::mollifier::Profile;
use crate::solver::{viscosity_preset, InitialCondition};

/// What a scenario computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Contraction,
    ViscosityRate,
    FluxPerturbation,
    Budget,
    BvModulus,
    MollifierAdmissibility,
    SchemeFidelity,
    DeltaModel,
    OracleEquivalence,
}

impl ScenarioKind {
    const ALL: [ScenarioKind; 9] = [
        ScenarioKind::Contraction,
        ScenarioKind::ViscosityRate,
        ScenarioKind::FluxPerturbation,
        ScenarioKind::Budget,
        ScenarioKind::BvModulus,
        ScenarioKind::MollifierAdmissibility,
        ScenarioKind::SchemeFidelity,
        ScenarioKind::DeltaModel,
        ScenarioKind::OracleEquivalence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Contraction => "contraction",
            ScenarioKind::ViscosityRate => "viscosity-rate",
            ScenarioKind::FluxPerturbation => "flux-perturbation",
            ScenarioKind::Budget => "budget",
            ScenarioKind::BvModulus => "bv-modulus",
            ScenarioKind::MollifierAdmissibility => "mollifier-admissibility",
            ScenarioKind::SchemeFidelity => "scheme-fidelity",
            ScenarioKind::DeltaModel => "delta-model",
            ScenarioKind::OracleEquivalence => "oracle-equivalence",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::UnknownPreset(format!("scenario kind '{name}'")))
    }

    /// The parameter this kind sweeps.
    pub fn sweep_param(self) -> SweepParam {
        match self {
            ScenarioKind::Contraction | ScenarioKind::SchemeFidelity => SweepParam::NCells,
            ScenarioKind::ViscosityRate => SweepParam::Eps,
            ScenarioKind::FluxPerturbation => SweepParam::Eta,
            _ => SweepParam::Delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Delta,
    Eps,
    Eta,
    NCells,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Delta => "delta",
            SweepParam::Eps => "eps",
            SweepParam::Eta => "eta",
            SweepParam::NCells => "n_cells",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "delta" => Ok(SweepParam::Delta),
            "eps" => Ok(SweepParam::Eps),
            "eta" => Ok(SweepParam::Eta),
            "n_cells" => Ok(SweepParam::NCells),
            other => Err(Error::Config(format!("unknown sweep parameter '{other}'"))),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A named preset with numeric parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

impl Preset {
    pub fn new(name: &str) -> Self {
        Preset {
            name: name.to_string(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// One experiment, read from flat dotted keys such as `metric.name` or
/// `flux.params.c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub kind: ScenarioKind,
    pub metric: Preset,
    pub leaf_length: f64,
    pub flux: Preset,
    pub ic: String,
    /// Second initial datum (contraction partner).
    pub ic_alt: String,
    /// Mesh sizes; the first is the working mesh unless the sweep is over cells.
    pub cells: Vec<usize>,
    /// Mesh of the inviscid reference in viscosity sweeps.
    pub reference_cells: usize,
    pub cfl: f64,
    pub stride: usize,
    pub t_final: f64,
    pub c0: f64,
    pub viscosity: String,
    pub eps: f64,
    pub profile: Profile,
    pub resolution: usize,
    pub max_times: usize,
    pub sweep: Sweep,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

/// Names accepted by [`ExperimentConfig::preset`].
pub const SCENARIOS: [&str; 17] = [
    "contraction-flat-burgers",
    "contraction-flrw",
    "viscosity-rate",
    "flux-perturbation",
    "budget-flat-smooth",
    "budget-flat-riemann",
    "budget-curved-smooth",
    "budget-curved-riemann",
    "bv-modulus-jump",
    "bv-modulus-sine",
    "bv-modulus-flrw",
    "mollifier-admissibility",
    "mollifier-admissibility-warped",
    "mollifier-admissibility-top-hat",
    "scheme-fidelity",
    "delta-model",
    "oracle-equivalence",
];

/// Budget scenarios on which the outer constant is calibrated.
pub const CALIBRATION_BASELINE: [&str; 2] = ["budget-flat-smooth", "budget-flat-riemann"];

fn log_values(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    crate::estimator::DeltaTable::log_grid(lo, hi, n)
}

impl ExperimentConfig {
    fn base(scenario: &str, kind: ScenarioKind, values: Vec<f64>) -> Self {
        ExperimentConfig {
            scenario: scenario.to_string(),
            kind,
            metric: Preset::new("minkowski"),
            leaf_length: 1.0,
            flux: Preset::new("burgers"),
            ic: "sine(0.5)".into(),
            ic_alt: "square(0.8,0.4)".into(),
            cells: vec![512],
            reference_cells: 4096,
            cfl: 0.9,
            stride: 1,
            t_final: 1.0,
            c0: 1.0,
            viscosity: "linear".into(),
            eps: 1e-3,
            profile: Profile::Bump,
            resolution: 16,
            max_times: 33,
            sweep: Sweep {
                param: kind.sweep_param(),
                values,
            },
            seed: 20240611,
            output: None,
        }
    }

    fn curved(mut self) -> Self {
        self.metric = Preset::new("flrw").with("rate", 1.0);
        self.flux = Preset::new("flrw-compatible").with("rate", 1.0);
        self
    }

    /// Built-in scenario by name (see [`SCENARIOS`]).
    pub fn preset(name: &str) -> Result<Self> {
        use ScenarioKind::*;
        let budget_deltas = log_values(0.004, 0.4, 9);
        let bv_deltas = vec![0.2, 0.1, 0.05, 0.025];
        let cfg = match name {
            "contraction-flat-burgers" => Self::base(name, Contraction, vec![512.0]),
            "contraction-flrw" => Self::base(name, Contraction, vec![512.0]).curved(),
            "viscosity-rate" => {
                let mut c = Self::base(name, ViscosityRate, log_values(1e-4, 1e-2, 5));
                c.cells = vec![4096];
                c.stride = 64;
                c
            }
            "flux-perturbation" => Self::base(name, FluxPerturbation, vec![0.04, 0.02, 0.01]),
            "budget-flat-smooth" => Self::base(name, Budget, budget_deltas),
            "budget-flat-riemann" => {
                let mut c = Self::base(name, Budget, budget_deltas);
                c.ic = "riemann(1,0)".into();
                c
            }
            "budget-curved-smooth" => Self::base(name, Budget, budget_deltas).curved(),
            "budget-curved-riemann" => {
                let mut c = Self::base(name, Budget, budget_deltas).curved();
                c.ic = "riemann(1,0)".into();
                c
            }
            "bv-modulus-jump" => {
                let mut c = Self::base(name, BvModulus, bv_deltas);
                c.ic = "riemann(1,0)".into();
                c
            }
            "bv-modulus-sine" => Self::base(name, BvModulus, bv_deltas),
            "bv-modulus-flrw" => {
                let mut c = Self::base(name, BvModulus, bv_deltas);
                c.metric = Preset::new("flrw").with("rate", 1.0);
                c.flux = Preset::new("advection").with("c", 0.0);
                c
            }
            "mollifier-admissibility" => Self::base(name, MollifierAdmissibility, vec![0.2, 0.1, 0.05]),
            "mollifier-admissibility-warped" => {
                let mut c = Self::base(name, MollifierAdmissibility, vec![0.2, 0.1, 0.05]);
                c.metric = Preset::new("warped").with("amp", 0.5);
                c
            }
            "mollifier-admissibility-top-hat" => {
                let mut c = Self::base(name, MollifierAdmissibility, vec![0.2, 0.1, 0.05]);
                c.metric = Preset::new("warped").with("amp", 0.5);
                c.profile = Profile::TopHat;
                c
            }
            "scheme-fidelity" => {
                let mut c = Self::base(name, SchemeFidelity, vec![128.0, 256.0, 512.0]);
                c.ic = "riemann(1,0)".into();
                c.t_final = 0.3;
                c
            }
            "delta-model" => Self::base(name, DeltaModel, log_values(1e-3, 1.0, 64)),
            "oracle-equivalence" => {
                let mut c = Self::base(name, OracleEquivalence, vec![0.15]);
                c.metric = Preset::new("warped").with("amp", 0.2);
                c.cells = vec![16];
                c
            }
            other => return Err(Error::UnknownPreset(format!("scenario '{other}'"))),
        };
        Ok(cfg)
    }

    /// Parses flat dotted keys. A `scenario` naming a built-in starts from
    /// that preset; otherwise `kind` and every setting must be given.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        let mut flat = BTreeMap::new();
        flatten("", &toml::Value::Table(table), &mut flat);
        let scenario = match flat.remove("scenario") {
            Some(toml::Value::String(s)) => s,
            Some(other) => return Err(Error::Config(format!("scenario must be a string, got {other}"))),
            None => return Err(Error::Config("missing key 'scenario'".into())),
        };
        let mut cfg = match (Self::preset(&scenario), flat.get("kind")) {
            (Ok(c), _) => c,
            (Err(_), Some(toml::Value::String(kind))) => {
                let kind = ScenarioKind::parse(kind)?;
                Self::base(&scenario, kind, Vec::new())
            }
            (Err(e), _) => return Err(Error::Config(format!("{e} and no 'kind' given"))),
        };
        for (key, value) in &flat {
            cfg.set_value(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Applies `key = value` with the value written as in the config file.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parsed: toml::Table = format!("v = {value}")
            .parse()
            .or_else(|_| format!("v = {:?}", value).parse())
            .map_err(|e: toml::de::Error| Error::Config(format!("{key}: {e}")))?;
        self.set_value(key, &parsed["v"])
    }

    fn set_value(&mut self, key: &str, value: &toml::Value) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("key '{key}' expects {what}, got {value}"));
        let num = || value.as_float().or_else(|| value.as_integer().map(|i| i as f64)).ok_or_else(|| bad("a number"));
        let text = || value.as_str().map(str::to_string).ok_or_else(|| bad("a string"));
        let count = || -> Result<usize> {
            value
                .as_integer()
                .filter(|i| *i >= 0)
                .map(|i| i as usize)
                .ok_or_else(|| bad("a non-negative integer"))
        };
        let numbers = || -> Result<Vec<f64>> {
            value
                .as_array()
                .ok_or_else(|| bad("an array of numbers"))?
                .iter()
                .map(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)).ok_or_else(|| bad("numbers")))
                .collect()
        };
        match key {
            "scenario" => self.scenario = text()?,
            "kind" => self.kind = ScenarioKind::parse(&text()?)?,
            "seed" => self.seed = count()? as u64,
            "output" => self.output = Some(PathBuf::from(text()?)),
            "metric.name" => self.metric = Preset::new(&text()?),
            "metric.leaf_length" => self.leaf_length = num()?,
            "flux.name" => self.flux = Preset::new(&text()?),
            "data.ic" => self.ic = text()?,
            "data.ic_alt" => self.ic_alt = text()?,
            "mesh.cells" => self.cells = numbers()?.into_iter().map(|v| v as usize).collect(),
            "mesh.reference_cells" => self.reference_cells = count()?,
            "mesh.cfl" => self.cfl = num()?,
            "mesh.stride" => self.stride = count()?,
            "time.t_final" => self.t_final = num()?,
            "state.c0" => self.c0 = num()?,
            "viscosity.name" => self.viscosity = text()?,
            "viscosity.eps" => self.eps = num()?,
            "mollifier.profile" => self.profile = Profile::parse(&text()?)?,
            "quadrature.resolution" => self.resolution = count()?,
            "quadrature.max_times" => self.max_times = count()?,
            "sweep.param" => self.sweep.param = SweepParam::parse(&text()?)?,
            "sweep.values" => self.sweep.values = numbers()?,
            _ => {
                if let Some(p) = key.strip_prefix("metric.params.") {
                    self.metric.params.insert(p.to_string(), num()?);
                } else if let Some(p) = key.strip_prefix("flux.params.") {
                    self.flux.params.insert(p.to_string(), num()?);
                } else {
                    return Err(Error::Config(format!("unknown key '{key}'")));
                }
            }
        }
        Ok(())
    }

    /// Checks presets and sweep before any computation.
    pub fn validate(&self) -> Result<()> {
        let ctx = |e: Error| e.in_scenario(&self.scenario);
        if self.sweep.values.is_empty() {
            return Err(ctx(Error::Config("sweep list is empty".into())));
        }
        if self.sweep.param != self.kind.sweep_param() {
            return Err(ctx(Error::Config(format!(
                "a {} scenario sweeps {}, not {}",
                self.kind.name(),
                self.kind.sweep_param(),
                self.sweep.param
            ))));
        }
        if self.sweep.values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(ctx(Error::Config("sweep values must be positive".into())));
        }
        if self.cells.is_empty() || self.cells.iter().any(|n| *n < 2) {
            return Err(ctx(Error::Config("mesh.cells needs sizes of at least 2".into())));
        }
        if !(self.t_final > 0.0 && self.c0 > 0.0 && self.leaf_length > 0.0 && self.eps >= 0.0) {
            return Err(ctx(Error::Config("t_final, c0 and leaf_length must be positive".into())));
        }
        if self.resolution < 2 || self.max_times < 2 || self.stride == 0 {
            return Err(ctx(Error::Config("quadrature and stride settings too small".into())));
        }
        metric_preset(&self.metric.name, 0.0, self.t_final, self.leaf_length, |k| self.metric.param(k)).map_err(ctx)?;
        flux_preset(&self.flux.name, |k| self.flux.param(k)).map_err(ctx)?;
        viscosity_preset(&self.viscosity, self.eps.max(1e-300)).map_err(ctx)?;
        InitialCondition::parse(&self.ic).map_err(ctx)?;
        InitialCondition::parse(&self.ic_alt).map_err(ctx)?;
        Ok(())
    }

    /// The config as flat dotted keys, readable by [`Self::from_toml_str`].
    pub fn to_toml_string(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        s.push_str(&format!("scenario = {:?}\nkind = {:?}\nseed = {}\n", self.scenario, self.kind.name(), self.seed));
        if let Some(out) = &self.output {
            s.push_str(&format!("output = {:?}\n", out.display().to_string()));
        }
        s.push_str(&format!("metric.name = {:?}\nmetric.leaf_length = {:?}\n", self.metric.name, self.leaf_length));
        for (k, v) in &self.metric.params {
            s.push_str(&format!("metric.params.{k} = {v:?}\n"));
        }
        s.push_str(&format!("flux.name = {:?}\n", self.flux.name));
        for (k, v) in &self.flux.params {
            s.push_str(&format!("flux.params.{k} = {v:?}\n"));
        }
        s.push_str(&format!("data.ic = {:?}\ndata.ic_alt = {:?}\n", self.ic, self.ic_alt));
        s.push_str(&format!(
            "mesh.cells = [{}]\nmesh.reference_cells = {}\nmesh.cfl = {:?}\nmesh.stride = {}\n",
            self.cells.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", "),
            self.reference_cells,
            self.cfl,
            self.stride
        ));
        s.push_str(&format!("time.t_final = {:?}\nstate.c0 = {:?}\n", self.t_final, self.c0));
        s.push_str(&format!("viscosity.name = {:?}\nviscosity.eps = {:?}\n", self.viscosity, self.eps));
        s.push_str(&format!("mollifier.profile = {:?}\n", self.profile.to_string()));
        s.push_str(&format!(
            "quadrature.resolution = {}\nquadrature.max_times = {}\n",
            self.resolution, self.max_times
        ));
        s.push_str(&format!(
            "sweep.param = {:?}\nsweep.values = [{}]\n",
            self.sweep.param.name(),
            list(&self.sweep.values)
        ));
        s
    }
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut BTreeMap<String, toml::Value>) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}
