//! Configuration files: the TOML schema, scenario presets, the optional
//! reference technology set, and validation into [`Settings`].
//!
//! Parsing collects every violation before failing; each carries the dotted
//! path of the offending field.

use std::path::{Path, PathBuf};

use ldes_core::model::{Availability, Bounds, Generator, LtcContract, SpotMarket, Storage, StorageClass};
use ldes_core::weather::StageLength;
use ldes_core::{ModelConfig, ModelError, Scenario, TechnologyCatalog};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, ConfigError, FieldError};

pub const CONFIG_VERSION: u32 = 1;

/// Where the weather lattice comes from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeatherSource {
    /// A shipped reference lattice: `tiny` or `stockpiling`.
    Builtin(String),
    /// Delimited series; `block_hours` aggregates the raw rows first.
    File { path: PathBuf, block_hours: Option<u32> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainingSettings {
    pub max_iterations: usize,
    pub time_limit: Option<f64>,
    pub forward_paths: usize,
    pub trust_region: bool,
    /// Check the bound rule every `stop_every` iterations with `stop_paths` paths.
    pub stop_every: Option<usize>,
    pub stop_paths: usize,
    pub threads: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathSelection {
    /// One path per weather year.
    Historical,
    /// Every path of the lattice.
    All,
    /// `count` paths drawn with the run seed.
    Sampled { count: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisSettings {
    /// Spacing of the bid-curve level grid, GWh.
    pub grid_step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AcfSettings {
    pub stage_length: StageLength,
    pub max_lag: usize,
}

/// A fully resolved and validated configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub version: u32,
    pub seed: u64,
    pub model: ModelConfig,
    pub weather: WeatherSource,
    pub training: TrainingSettings,
    pub paths: PathSelection,
    pub analysis: AnalysisSettings,
    pub acf: AcfSettings,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub max_iterations: Option<usize>,
    pub time_limit: Option<f64>,
    pub threads: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    version: Option<u32>,
    seed: Option<u64>,
    period_hours: Option<f64>,
    scenario: Option<RawScenario>,
    catalog: Option<RawCatalog>,
    #[serde(default)]
    generators: Vec<RawGenerator>,
    #[serde(default)]
    storages: Vec<RawStorage>,
    ltc: Option<RawLtc>,
    weather: Option<RawWeather>,
    training: Option<RawTraining>,
    simulation: Option<RawSimulation>,
    analysis: Option<RawAnalysis>,
    acf: Option<RawAcf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    preset: Option<String>,
    name: Option<String>,
    voll: Option<f64>,
    spot_price: Option<f64>,
    spot_cap_per_hour: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawCatalog {
    defaults: Option<String>,
    discount_rate: Option<f64>,
}

#[derive(Deserialize, Default, Clone, Copy)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    min: Option<f64>,
    max: Option<f64>,
    fixed: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawAvailability {
    Source(String),
    Constant(f64),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    name: Option<String>,
    capital_cost: Option<f64>,
    marginal_cost: Option<f64>,
    capacity: Option<RawBounds>,
    availability: Option<RawAvailability>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStorage {
    name: Option<String>,
    class: Option<String>,
    discharge_cost: Option<f64>,
    charge_cost: Option<f64>,
    energy_cost: Option<f64>,
    discharge_efficiency: Option<f64>,
    charge_efficiency: Option<f64>,
    discharge_power: Option<RawBounds>,
    charge_power: Option<RawBounds>,
    energy: Option<RawBounds>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawLtc {
    price: Option<f64>,
    max_volume: Option<f64>,
    flexibility: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawWeather {
    builtin: Option<String>,
    file: Option<String>,
    block_hours: Option<u32>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawTraining {
    max_iterations: Option<usize>,
    time_limit: Option<f64>,
    forward_paths: Option<usize>,
    trust_region: Option<bool>,
    stop_every: Option<usize>,
    stop_paths: Option<usize>,
    threads: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    paths: Option<String>,
    count: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    grid_step: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawAcf {
    stage_length: Option<String>,
    max_lag: Option<usize>,
}

struct Errors(Vec<FieldError>);

impl Errors {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(FieldError::new(path, message));
    }

    fn required<T>(&mut self, path: &str, v: Option<T>) -> Option<T> {
        if v.is_none() {
            self.push(path, "required");
        }
        v
    }

    fn nonnegative(&mut self, path: &str, v: f64) {
        if !(v.is_finite() && v >= 0.0) {
            self.push(path, format!("{v} must be finite and >= 0"));
        }
    }
}

/// Reads, resolves and validates `path`; relative data paths are taken
/// from the configuration file's directory.
pub fn validate_config(path: &Path, overrides: &Overrides) -> Result<Settings, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    Ok(parse_config(&text, base, overrides)?)
}

pub fn parse_config(text: &str, base: &Path, overrides: &Overrides) -> Result<Settings, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let path = e.span().map_or_else(|| "<file>".to_string(), |s| format!("<file>@{}..{}", s.start, s.end));
        ConfigError::single(path, e.message().to_string())
    })?;
    let mut errs = Errors(Vec::new());

    let version = raw.version.unwrap_or(CONFIG_VERSION);
    if version != CONFIG_VERSION {
        errs.push("version", format!("unsupported version {version}, expected {CONFIG_VERSION}"));
    }
    let seed = overrides.seed.or(raw.seed);
    errs.required("seed", seed);
    let period_hours = raw.period_hours.unwrap_or(1.0);

    let scenario = resolve_scenario(raw.scenario.unwrap_or_default(), &mut errs);
    let catalog = resolve_catalog(raw.catalog, raw.generators, raw.storages, raw.ltc.unwrap_or_default(), &mut errs);
    let weather = resolve_weather(raw.weather.unwrap_or_default(), base, &mut errs);
    let training = resolve_training(raw.training.unwrap_or_default(), overrides, &mut errs);
    let paths = resolve_paths(raw.simulation.unwrap_or_default(), &mut errs);

    let analysis = raw.analysis.unwrap_or_default();
    let grid_step = analysis.grid_step.unwrap_or(10.0);
    if !(grid_step.is_finite() && grid_step > 0.0) {
        errs.push("analysis.grid_step", "must be > 0");
    }
    let acf = raw.acf.unwrap_or_default();
    let stage_length = match acf.stage_length.as_deref().unwrap_or("month") {
        "month" => StageLength::Month,
        "week" => StageLength::Week,
        other => {
            errs.push("acf.stage_length", format!("unknown stage length {other:?}; expected month or week"));
            StageLength::Month
        }
    };
    let max_lag = acf.max_lag.unwrap_or(12);
    if max_lag == 0 {
        errs.push("acf.max_lag", "must be at least 1");
    }

    let model = ModelConfig { catalog, scenario, period_hours };
    for e in model.validate() {
        match e {
            ModelError::InvalidValue { field, reason } => errs.push(field, reason),
            ModelError::InconsistentBounds { field, lower, upper } => {
                errs.push(field, format!("min {lower} exceeds max {upper}"));
            }
            other => errs.push("model", other.to_string()),
        }
    }
    if let WeatherSource::File { block_hours: Some(b), .. } = &weather {
        if (f64::from(*b) - period_hours).abs() > 1e-12 {
            errs.push("period_hours", format!("must equal weather.block_hours = {b}"));
        }
    }

    match (errs.0.is_empty(), seed) {
        (true, Some(seed)) => Ok(Settings {
            version,
            seed,
            model,
            weather,
            training,
            paths,
            analysis: AnalysisSettings { grid_step },
            acf: AcfSettings { stage_length, max_lag },
        }),
        _ => Err(ConfigError { errors: errs.0 }),
    }
}

fn resolve_scenario(raw: RawScenario, errs: &mut Errors) -> Scenario {
    if let Some(preset) = raw.preset {
        for (field, present) in [
            ("name", raw.name.is_some()),
            ("voll", raw.voll.is_some()),
            ("spot_price", raw.spot_price.is_some()),
            ("spot_cap_per_hour", raw.spot_cap_per_hour.is_some()),
        ] {
            if present {
                errs.push(format!("scenario.{field}"), "not allowed together with a preset");
            }
        }
        return Scenario::preset(&preset).unwrap_or_else(|| {
            errs.push(
                "scenario.preset",
                format!("unknown preset {preset:?}; expected no_imports, constrained_imports or unlimited_imports"),
            );
            Scenario::no_imports()
        });
    }
    let name = errs.required("scenario.name", raw.name).unwrap_or_default();
    let voll = errs.required("scenario.voll", raw.voll).unwrap_or(Scenario::VOLL);
    errs.nonnegative("scenario.voll", voll);
    let spot = match (raw.spot_price, raw.spot_cap_per_hour) {
        (Some(price), cap) => {
            errs.nonnegative("scenario.spot_price", price);
            if let Some(c) = cap {
                errs.nonnegative("scenario.spot_cap_per_hour", c);
            }
            Some(SpotMarket { price, cap_per_hour: cap })
        }
        (None, Some(_)) => {
            errs.push("scenario.spot_cap_per_hour", "a cap needs scenario.spot_price");
            None
        }
        (None, None) => None,
    };
    Scenario { name, voll, spot }
}

fn resolve_bounds(raw: Option<RawBounds>, path: &str, errs: &mut Errors) -> Bounds {
    let raw = raw.unwrap_or_default();
    match (raw.fixed, raw.min, raw.max) {
        (Some(v), None, None) => Bounds::fixed(v),
        (Some(_), _, _) => {
            errs.push(path, "give either fixed or min/max, not both");
            Bounds::unbounded()
        }
        (None, min, max) => Bounds::new(min.unwrap_or(0.0), max.unwrap_or(f64::INFINITY)),
    }
}

fn resolve_catalog(
    defaults: Option<RawCatalog>,
    generators: Vec<RawGenerator>,
    storages: Vec<RawStorage>,
    ltc: RawLtc,
    errs: &mut Errors,
) -> TechnologyCatalog {
    let mut catalog = TechnologyCatalog { generators: Vec::new(), storages: Vec::new(), ltc: LtcContract::default() };
    if let Some(d) = defaults {
        let rate = d.discount_rate.unwrap_or(DEFAULT_DISCOUNT_RATE);
        if !(rate.is_finite() && rate > 0.0) {
            errs.push("catalog.discount_rate", "must be > 0");
        }
        match d.defaults.as_deref() {
            Some("reference") => catalog = reference_catalog(rate),
            Some(other) => {
                errs.push("catalog.defaults", format!("unknown technology set {other:?}; expected reference"))
            }
            None => errs.push("catalog.defaults", "required when [catalog] is present"),
        }
    }
    for (i, g) in generators.into_iter().enumerate() {
        let p = format!("generators[{i}]");
        let name = errs.required(&format!("{p}.name"), g.name).unwrap_or_default();
        let capital_cost = errs.required(&format!("{p}.capital_cost"), g.capital_cost).unwrap_or(0.0);
        let availability = match g.availability {
            None => Availability::Weather,
            Some(RawAvailability::Source(s)) if s == "weather" => Availability::Weather,
            Some(RawAvailability::Source(s)) => {
                errs.push(format!("{p}.availability"), format!("{s:?} is neither \"weather\" nor a number"));
                Availability::Weather
            }
            Some(RawAvailability::Constant(phi)) => Availability::Constant(phi),
        };
        let generator = Generator {
            name,
            capital_cost,
            marginal_cost: g.marginal_cost.unwrap_or(0.0),
            capacity: resolve_bounds(g.capacity, &format!("{p}.capacity"), errs),
            availability,
        };
        match catalog.generators.iter_mut().find(|x| x.name == generator.name) {
            Some(slot) => *slot = generator,
            None => catalog.generators.push(generator),
        }
    }
    for (i, s) in storages.into_iter().enumerate() {
        let p = format!("storages[{i}]");
        let name = errs.required(&format!("{p}.name"), s.name).unwrap_or_default();
        let class = match errs.required(&format!("{p}.class"), s.class).as_deref() {
            Some("long") | None => StorageClass::LongDuration,
            Some("short") => StorageClass::ShortDuration,
            Some(other) => {
                errs.push(format!("{p}.class"), format!("unknown class {other:?}; expected long or short"));
                StorageClass::LongDuration
            }
        };
        let mut need = |field: &str, v: Option<f64>| errs.required(&format!("{p}.{field}"), v).unwrap_or(1.0);
        let costs = [
            need("discharge_cost", s.discharge_cost),
            need("charge_cost", s.charge_cost),
            need("energy_cost", s.energy_cost),
        ];
        let efficiencies =
            [need("discharge_efficiency", s.discharge_efficiency), need("charge_efficiency", s.charge_efficiency)];
        let storage = Storage {
            name,
            class,
            discharge_cost: costs[0],
            charge_cost: costs[1],
            energy_cost: costs[2],
            discharge_efficiency: efficiencies[0],
            charge_efficiency: efficiencies[1],
            discharge_power: resolve_bounds(s.discharge_power, &format!("{p}.discharge_power"), errs),
            charge_power: resolve_bounds(s.charge_power, &format!("{p}.charge_power"), errs),
            energy: resolve_bounds(s.energy, &format!("{p}.energy"), errs),
        };
        match catalog.storages.iter_mut().find(|x| x.name == storage.name) {
            Some(slot) => *slot = storage,
            None => catalog.storages.push(storage),
        }
    }
    catalog.ltc = LtcContract {
        price: ltc.price.unwrap_or(0.0),
        max_volume: ltc.max_volume.unwrap_or(0.0),
        flexibility: ltc.flexibility.unwrap_or(LtcContract::default().flexibility),
    };
    if catalog.generators.is_empty() {
        errs.push("generators", "at least one generator is required");
    }
    catalog
}

fn resolve_weather(raw: RawWeather, base: &Path, errs: &mut Errors) -> WeatherSource {
    match (raw.builtin, raw.file) {
        (Some(name), None) => {
            if raw.block_hours.is_some() {
                errs.push("weather.block_hours", "only applies to weather files");
            }
            if !matches!(name.as_str(), "tiny" | "stockpiling") {
                errs.push("weather.builtin", format!("unknown lattice {name:?}; expected tiny or stockpiling"));
            }
            WeatherSource::Builtin(name)
        }
        (None, Some(file)) => {
            if let Some(b) = raw.block_hours {
                if b == 0 || 24 % b != 0 {
                    errs.push("weather.block_hours", format!("{b} does not divide 24"));
                }
            }
            WeatherSource::File { path: base.join(file), block_hours: raw.block_hours }
        }
        (Some(_), Some(_)) => {
            errs.push("weather", "give either builtin or file, not both");
            WeatherSource::Builtin(String::new())
        }
        (None, None) => {
            errs.push("weather", "required: builtin or file");
            WeatherSource::Builtin(String::new())
        }
    }
}

fn resolve_training(raw: RawTraining, overrides: &Overrides, errs: &mut Errors) -> TrainingSettings {
    let time_limit = overrides.time_limit.or(raw.time_limit);
    if let Some(t) = time_limit {
        if !(t >= 0.0) {
            errs.push("training.time_limit", "must be >= 0 seconds");
        }
    }
    let forward_paths = raw.forward_paths.unwrap_or(1);
    if forward_paths == 0 {
        errs.push("training.forward_paths", "must be at least 1");
    }
    let stop_paths = raw.stop_paths.unwrap_or(100);
    if raw.stop_every.is_some() && stop_paths < 2 {
        errs.push("training.stop_paths", "the bound rule needs at least 2 paths");
    }
    let threads = overrides.threads.or(raw.threads).unwrap_or(1);
    if threads == 0 {
        errs.push("training.threads", "must be at least 1");
    }
    TrainingSettings {
        max_iterations: overrides.max_iterations.or(raw.max_iterations).unwrap_or(200),
        time_limit,
        forward_paths,
        trust_region: raw.trust_region.unwrap_or(true),
        stop_every: raw.stop_every,
        stop_paths,
        threads,
    }
}

fn resolve_paths(raw: RawSimulation, errs: &mut Errors) -> PathSelection {
    match raw.paths.as_deref().unwrap_or("historical") {
        "historical" | "all" if raw.count.is_some() => {
            errs.push("simulation.count", "only applies to sampled paths");
            PathSelection::Historical
        }
        "historical" => PathSelection::Historical,
        "all" => PathSelection::All,
        "sampled" => match raw.count {
            Some(count) if count > 0 => PathSelection::Sampled { count },
            _ => {
                errs.push("simulation.count", "sampled paths need a count of at least 1");
                PathSelection::Historical
            }
        },
        other => {
            errs.push("simulation.paths", format!("unknown selection {other:?}; expected historical, all or sampled"));
            PathSelection::Historical
        }
    }
}

/// Discount rate used to annualize the reference investment costs.
pub const DEFAULT_DISCOUNT_RATE: f64 = 0.07;

/// Annual payment per unit of investment over `years` at `rate`.
pub fn annuity(investment: f64, rate: f64, years: f64) -> f64 {
    investment * rate / (1.0 - (1.0 + rate).powf(-years))
}

/// Reference technology costs (investment EUR/kW or EUR/kWh, fixed O&M
/// EUR/kW/a, variable EUR/MWh) annualized at `rate`, all capacities free.
pub fn reference_catalog(rate: f64) -> TechnologyCatalog {
    let annual = |inv: f64, fom: f64, life: f64| annuity(inv, rate, life) + fom;
    let generator = |name: &str, capital_cost: f64, marginal_cost: f64, availability: Availability| Generator {
        name: name.into(),
        capital_cost,
        marginal_cost,
        capacity: Bounds::unbounded(),
        availability,
    };
    // A battery inverter serves both directions; its cost is split evenly.
    let inverter = annual(71.7, 0.65, 30.0) / 2.0;
    let battery_efficiency = 0.96;
    TechnologyCatalog {
        generators: vec![
            generator("onshore_wind", annual(1224.98, 17.53, 30.0), 2.1, Availability::Weather),
            generator("offshore_wind", annual(1842.61, 37.08, 30.0), 3.4, Availability::Weather),
            generator("solar_pv", annual(457.84, 8.76, 40.0), 0.0, Availability::Weather),
            generator("biomass", annual(2516.96, 129.01, 30.0), 13.6, Availability::Constant(1.0)),
        ],
        storages: vec![
            Storage {
                name: "li_ion".into(),
                class: StorageClass::ShortDuration,
                discharge_cost: inverter,
                charge_cost: inverter,
                energy_cost: annual(112.31, 0.0, 30.0),
                discharge_efficiency: battery_efficiency,
                charge_efficiency: battery_efficiency,
                discharge_power: Bounds::unbounded(),
                charge_power: Bounds::unbounded(),
                energy: Bounds::unbounded(),
            },
            Storage {
                name: "h2".into(),
                class: StorageClass::LongDuration,
                discharge_cost: annual(501.38, 7.89, 25.0),
                // electrolyser plus cavern compressor
                charge_cost: annual(404.22, 8.05, 25.0) + annual(95.66, 3.83, 15.0),
                energy_cost: annual(1.43, 0.0, 100.0),
                discharge_efficiency: 0.43,
                charge_efficiency: 0.66,
                discharge_power: Bounds::unbounded(),
                charge_power: Bounds::unbounded(),
                energy: Bounds::unbounded(),
            },
        ],
        ltc: LtcContract::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = include_str!("../../../configs/tiny.toml");

    fn parse(text: &str) -> Result<Settings, ConfigError> {
        parse_config(text, Path::new("/cfg"), &Overrides::default())
    }

    #[test]
    fn tiny_config_matches_the_reference_instance() {
        let s = parse(TINY).unwrap();
        assert_eq!(s.model, ldes_core::instances::tiny_config());
        assert_eq!(s.weather, WeatherSource::Builtin("tiny".into()));
        assert_eq!(s.paths, PathSelection::All);
        let s = parse(include_str!("../../../configs/stockpiling.toml")).unwrap();
        assert_eq!(s.model, ldes_core::instances::stockpiling_config());
        assert_eq!(s.weather, WeatherSource::Builtin("stockpiling".into()));
    }

    #[test]
    fn presets_resolve_to_the_outside_options() {
        let base = "seed = 1\n[weather]\nbuiltin = \"tiny\"\n[[generators]]\nname = \"wind\"\ncapital_cost = 1.0\n";
        let no = parse(&format!("{base}[scenario]\npreset = \"no_imports\"\n")).unwrap().model.scenario;
        assert_eq!((no.voll, no.spot), (100_000.0, None));
        let c = parse(&format!("{base}[scenario]\npreset = \"constrained_imports\"\n")).unwrap().model.scenario;
        assert_eq!(c.spot, Some(SpotMarket { price: 250.0, cap_per_hour: Some(5.5) }));
        let u = parse(&format!("{base}[scenario]\npreset = \"unlimited_imports\"\n")).unwrap().model.scenario;
        assert_eq!(u.spot, Some(SpotMarket { price: 250.0, cap_per_hour: None }));
    }

    #[test]
    fn every_violation_is_reported_with_its_path() {
        let text = TINY
            .replace("charge_efficiency = 0.7", "charge_efficiency = -0.7")
            .replace("seed = 7", "")
            .replace("preset = \"no_imports\"", "preset = \"no_imports\"\nvoll = 5.0");
        let err = parse(&text).unwrap_err();
        assert!(err.has_field("storages.h2.charge_efficiency"), "{err}");
        assert!(err.has_field("seed"), "{err}");
        assert!(err.has_field("scenario.voll"), "{err}");
        assert_eq!(err.errors.len(), 3, "{err}");
    }

    #[test]
    fn missing_storage_fields_are_listed() {
        let err = parse("seed = 1\n[weather]\nbuiltin = \"tiny\"\n[scenario]\npreset = \"no_imports\"\n[[generators]]\nname = \"w\"\ncapital_cost = 1.0\n[[storages]]\nname = \"s\"\n").unwrap_err();
        for f in ["class", "discharge_cost", "charge_cost", "energy_cost", "discharge_efficiency", "charge_efficiency"]
        {
            assert!(err.has_field(&format!("storages[0].{f}")), "{f}: {err}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse(&format!("{TINY}\n[training2]\nx = 1\n")).unwrap_err();
        assert_eq!(err.errors.len(), 1);
        assert!(err.errors[0].message.contains("unknown field"), "{err}");
    }

    #[test]
    fn overrides_take_precedence() {
        let o = Overrides { seed: Some(99), max_iterations: Some(0), time_limit: Some(2.5), threads: Some(3) };
        let s = parse_config(TINY, Path::new("."), &o).unwrap();
        assert_eq!(s.seed, 99);
        assert_eq!(s.training.max_iterations, 0);
        assert_eq!(s.training.time_limit, Some(2.5));
        assert_eq!(s.training.threads, 3);
    }

    #[test]
    fn reference_technologies_are_annualized() {
        // 1000 over 20 years at 5 % is 80.24 per year
        assert!((annuity(1000.0, 0.05, 20.0) - 80.242_587_5).abs() < 1e-6);
        let c = reference_catalog(0.07);
        assert!(c.validate().is_empty());
        let h2 = &c.storages[c.hydrogen_storage().unwrap()];
        assert_eq!((h2.charge_efficiency, h2.discharge_efficiency), (0.66, 0.43));
        let text = "seed = 1\n[weather]\nbuiltin = \"tiny\"\n[scenario]\npreset = \"no_imports\"\n[catalog]\ndefaults = \"reference\"\n[[generators]]\nname = \"biomass\"\ncapital_cost = 0.0\navailability = 0.5\n";
        let s = parse(text).unwrap();
        assert_eq!(s.model.catalog.generators.len(), 4);
        let bio = s.model.catalog.generators.iter().find(|g| g.name == "biomass").unwrap();
        assert_eq!((bio.capital_cost, &bio.availability), (0.0, &Availability::Constant(0.5)));
    }

    #[test]
    fn weather_file_paths_are_relative_to_the_config() {
        let text = TINY.replace("builtin = \"tiny\"", "file = \"data/w.csv\"\nblock_hours = 1");
        let s = parse(&text).unwrap();
        assert_eq!(s.weather, WeatherSource::File { path: PathBuf::from("/cfg/data/w.csv"), block_hours: Some(1) });
    }
}
