//! Run configuration: a TOML file with fixed sections. Unknown keys anywhere
//! are errors.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nmqsd::observables::Polarization;
use nmqsd::{
    build_ring, calibrate_delta, kernel_from_spectral_density, AggregateModel, BathKernel, LorentzianMode,
    RingSpec, SpectralDensity,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn field_error(field: &str, msg: impl fmt::Display) -> ConfigError {
    ConfigError(format!("{field}: {msg}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    MonomerSpectrum,
    AggregateSpectrum,
    Transfer,
    NoiseCheck,
    OracleCompare,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::MonomerSpectrum => "monomer-spectrum",
            Self::AggregateSpectrum => "aggregate-spectrum",
            Self::Transfer => "transfer",
            Self::NoiseCheck => "noise-check",
            Self::OracleCompare => "oracle-compare",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sizes {
    One(usize),
    Many(Vec<usize>),
}

impl Sizes {
    fn to_vec(&self) -> Vec<usize> {
        match self {
            Self::One(n) => vec![*n],
            Self::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<Sizes>,
    /// C, the energy of the bright ring exciton.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    /// V, nearest-neighbour coupling (alternative to `shift`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tilt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub site_energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub site_energies: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dipoles: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    /// `[p, Ω, γ]` per Lorentzian.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<[f64; 3]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibrate: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub damping_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freq_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freq_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freq_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polarization: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_trajectories: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    /// 1-based.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_site: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_density: Option<bool>,
    /// Grid points between density-matrix snapshots.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traces: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_lag: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lag_stride: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_limit: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fock_cutoff: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub output: PathBuf,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub bath: BathSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub oracle: OracleSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }
}

/// One aggregate of a run, labelled by its size.
#[derive(Debug, Clone)]
pub struct Aggregate {
    pub n_sites: usize,
    pub model: AggregateModel,
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone)]
pub struct Plan {
    pub config: RunConfig,
    pub aggregates: Vec<Aggregate>,
    pub spectral_density: Option<SpectralDensity>,
    pub kernel: BathKernel,
    pub calibration_factor: f64,
    pub polarization: Polarization,
}

pub const DEFAULT_MODES: [[f64; 3]; 3] = [[0.16, 0.2, 0.2], [0.30, 1.4, 0.08], [0.30, 1.7, 0.08]];

fn positive(field: &str, x: f64) -> Result<f64, ConfigError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(field_error(field, format!("must be a positive number, got {x}")))
    }
}

fn finite(field: &str, x: f64) -> Result<f64, ConfigError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(field_error(field, "must be finite"))
    }
}

fn parse_polarization(s: &str) -> Result<Polarization, ConfigError> {
    match s {
        "x" => Ok(Polarization::Fixed([1.0, 0.0, 0.0])),
        "y" => Ok(Polarization::Fixed([0.0, 1.0, 0.0])),
        "z" => Ok(Polarization::Fixed([0.0, 0.0, 1.0])),
        "isotropic" => Ok(Polarization::Isotropic),
        other => Err(field_error(
            "numerics.polarization",
            format!("expected one of x, y, z, isotropic, got {other:?}"),
        )),
    }
}

fn build_bath(bath: &mut BathSection) -> Result<(Option<SpectralDensity>, BathKernel, f64), ConfigError> {
    let modes = bath.modes.get_or_insert_with(|| DEFAULT_MODES.to_vec());
    let calibrate = *bath.calibrate.get_or_insert(true);
    if modes.is_empty() {
        return Ok((None, BathKernel::zero(), 1.0));
    }
    let modes = modes
        .iter()
        .enumerate()
        .map(|(i, &[p, omega, gamma])| {
            LorentzianMode::new(p, omega, gamma).map_err(|e| field_error(&format!("bath.modes[{i}]"), e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sd = SpectralDensity::new(modes).map_err(|e| field_error("bath.modes", e))?;
    let (sd, factor) = if calibrate {
        let factor = calibrate_delta(&sd).map_err(|e| field_error("bath.calibrate", e))?;
        (sd.scaled(factor), factor)
    } else {
        (sd, 1.0)
    };
    let kernel = kernel_from_spectral_density(&sd);
    Ok((Some(sd), kernel, factor))
}

fn explicit_model(m: &ModelSection) -> Result<AggregateModel, ConfigError> {
    let energies = m.site_energies.clone().unwrap_or_default();
    let n = energies.len();
    let couplings = m
        .couplings
        .as_ref()
        .ok_or_else(|| field_error("model.couplings", "required together with model.site_energies"))?;
    if couplings.len() != n || couplings.iter().any(|r| r.len() != n) {
        return Err(field_error("model.couplings", format!("must be a {n}×{n} matrix")));
    }
    let dipoles = m.dipoles.clone().unwrap_or_else(|| vec![[1.0, 0.0, 0.0]; n]);
    AggregateModel::new(energies, couplings.concat(), dipoles).map_err(|e| field_error("model", e))
}

fn ring_models(m: &ModelSection) -> Result<Vec<Aggregate>, ConfigError> {
    let sizes = m
        .n_sites
        .as_ref()
        .ok_or_else(|| field_error("model.n_sites", "required"))?
        .to_vec();
    if sizes.is_empty() {
        return Err(field_error("model.n_sites", "list is empty"));
    }
    let energy = finite("model.site_energy", m.site_energy.unwrap_or(0.0))?;
    sizes
        .into_iter()
        .map(|n| {
            if n == 1 {
                return Ok(Aggregate { n_sites: 1, model: AggregateModel::monomer(energy) });
            }
            let mut spec = match (m.shift, m.coupling) {
                (Some(c), None) => RingSpec::from_shift(n, finite("model.shift", c)?)
                    .map_err(|e| field_error("model.shift", e))?,
                (None, Some(v)) => RingSpec::new(n, finite("model.coupling", v)?),
                (Some(_), Some(_)) => {
                    return Err(field_error("model", "give either shift or coupling, not both"))
                }
                (None, None) => return Err(field_error("model", "shift or coupling is required")),
            }
            .with_site_energy(energy);
            if let Some(t) = m.tilt {
                spec = spec.with_tilt(finite("model.tilt", t)?);
            }
            let model = build_ring(&spec).map_err(|e| field_error("model", e))?;
            Ok(Aggregate { n_sites: n, model })
        })
        .collect()
}

fn aggregates(m: &ModelSection) -> Result<Vec<Aggregate>, ConfigError> {
    if m.site_energies.is_some() {
        if m.n_sites.is_some() || m.shift.is_some() || m.coupling.is_some() || m.tilt.is_some() {
            return Err(field_error(
                "model",
                "site_energies describes an explicit aggregate; drop n_sites, shift, coupling and tilt",
            ));
        }
        let model = explicit_model(m)?;
        return Ok(vec![Aggregate { n_sites: model.n_sites(), model }]);
    }
    if m.couplings.is_some() || m.dipoles.is_some() {
        return Err(field_error("model", "couplings and dipoles need site_energies"));
    }
    ring_models(m)
}

fn reject_section<T: Default + PartialEq>(section: &T, name: &str, experiment: Experiment) -> Result<(), ConfigError> {
    if *section != T::default() {
        return Err(field_error(name, format!("section is not used by {experiment}")));
    }
    Ok(())
}

impl Plan {
    pub fn resolve(mut config: RunConfig) -> Result<Self, ConfigError> {
        let exp = config.experiment;
        if config.output.as_os_str().is_empty() {
            return Err(field_error("output", "must not be empty"));
        }
        let (spectral_density, kernel, calibration_factor) = build_bath(&mut config.bath)?;

        let aggregates = match exp {
            Experiment::MonomerSpectrum => {
                let m = &config.model;
                if m.n_sites.is_some() || m.shift.is_some() || m.coupling.is_some() || m.site_energies.is_some() {
                    return Err(field_error("model", "monomer-spectrum only accepts site_energy"));
                }
                let e = finite("model.site_energy", m.site_energy.unwrap_or(0.0))?;
                vec![Aggregate { n_sites: 1, model: AggregateModel::monomer(e) }]
            }
            Experiment::NoiseCheck => {
                reject_section(&config.model, "model", exp)?;
                Vec::new()
            }
            _ => aggregates(&config.model)?,
        };
        if matches!(exp, Experiment::Transfer | Experiment::OracleCompare) && aggregates.len() != 1 {
            return Err(field_error("model.n_sites", format!("{exp} takes a single aggregate")));
        }

        let n = &mut config.numerics;
        if let Some(h) = n.step {
            positive("numerics.step", h)?;
        }
        let polarization;
        match exp {
            Experiment::MonomerSpectrum | Experiment::AggregateSpectrum | Experiment::OracleCompare => {
                let damping = positive("numerics.damping_time", *n.damping_time.get_or_insert(50.0))?;
                positive("numerics.t_max", *n.t_max.get_or_insert(5.0 * damping))?;
                let lo = finite("numerics.freq_min", *n.freq_min.get_or_insert(-8.0))?;
                let hi = finite("numerics.freq_max", *n.freq_max.get_or_insert(8.0))?;
                if hi <= lo {
                    return Err(field_error("numerics.freq_max", "must exceed freq_min"));
                }
                if *n.freq_points.get_or_insert(1601) < 2 {
                    return Err(field_error("numerics.freq_points", "need at least 2 points"));
                }
                polarization = parse_polarization(n.polarization.get_or_insert_with(|| "x".into()))?;
            }
            Experiment::Transfer => {
                let t = n.t_max.ok_or_else(|| field_error("numerics.t_max", "required for transfer"))?;
                positive("numerics.t_max", t)?;
                if n.damping_time.is_some() || n.freq_min.is_some() || n.freq_max.is_some() || n.freq_points.is_some() {
                    return Err(field_error("numerics", "spectral settings are not used by transfer"));
                }
                if n.polarization.is_some() {
                    return Err(field_error("numerics.polarization", "not used by transfer"));
                }
                polarization = Polarization::Fixed([1.0, 0.0, 0.0]);
            }
            Experiment::NoiseCheck => {
                reject_section(n, "numerics", exp)?;
                polarization = Polarization::Fixed([1.0, 0.0, 0.0]);
            }
        }

        let e = &mut config.ensemble;
        match exp {
            Experiment::Transfer | Experiment::OracleCompare => {
                if *e.n_trajectories.get_or_insert(1000) == 0 {
                    return Err(field_error("ensemble.n_trajectories", "must be at least 1"));
                }
                e.master_seed.get_or_insert(0);
                let n_sites = aggregates[0].n_sites;
                let site = *e.initial_site.get_or_insert(1);
                if site == 0 || site > n_sites {
                    return Err(field_error(
                        "ensemble.initial_site",
                        format!("must lie in 1..={n_sites} (sites are numbered from 1)"),
                    ));
                }
                if exp == Experiment::Transfer {
                    if *e.record_density.get_or_insert(false) {
                        if e.snapshot_every == Some(0) {
                            return Err(field_error("ensemble.snapshot_every", "must be at least 1"));
                        }
                    } else if e.snapshot_every.is_some() {
                        return Err(field_error("ensemble.snapshot_every", "needs record_density = true"));
                    }
                    e.traces.get_or_insert(0);
                } else if e.record_density.is_some() || e.snapshot_every.is_some() || e.traces.is_some() {
                    return Err(field_error("ensemble", "oracle-compare records populations only"));
                }
            }
            Experiment::NoiseCheck => {
                if e.n_trajectories.is_some() || e.initial_site.is_some() || e.record_density.is_some()
                    || e.snapshot_every.is_some() || e.traces.is_some()
                {
                    return Err(field_error("ensemble", "noise-check only reads master_seed"));
                }
                e.master_seed.get_or_insert(0);
            }
            _ => reject_section(e, "ensemble", exp)?,
        }

        if exp == Experiment::NoiseCheck {
            if kernel.is_zero() {
                return Err(field_error("bath.modes", "noise-check needs at least one mode"));
            }
            let s = &mut config.noise;
            if *s.samples.get_or_insert(10_000) < 2 {
                return Err(field_error("noise.samples", "need at least 2 samples"));
            }
            positive("noise.step", *s.step.get_or_insert(0.25))?;
            let gamma_min = kernel.min_decay_rate().unwrap_or(1.0);
            positive("noise.max_lag", *s.max_lag.get_or_insert(5.0 / gamma_min))?;
            if *s.lag_stride.get_or_insert(4) == 0 {
                return Err(field_error("noise.lag_stride", "must be at least 1"));
            }
            positive("noise.sigma_limit", *s.sigma_limit.get_or_insert(5.0))?;
        } else {
            reject_section(&config.noise, "noise", exp)?;
        }

        if exp == Experiment::OracleCompare {
            if aggregates[0].n_sites != 2 {
                return Err(field_error("model.n_sites", "oracle-compare needs a dimer (n_sites = 2)"));
            }
            if spectral_density.as_ref().map_or(0, |sd| sd.modes().len()) != 1 {
                return Err(field_error("bath.modes", "oracle-compare needs exactly one Lorentzian"));
            }
            if *config.oracle.fock_cutoff.get_or_insert(10) < 2 {
                return Err(field_error("oracle.fock_cutoff", "must be at least 2"));
            }
        } else {
            reject_section(&config.oracle, "oracle", exp)?;
        }

        Ok(Self { config, aggregates, spectral_density, kernel, calibration_factor, polarization })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(text: &str) -> Result<Plan, ConfigError> {
        Plan::resolve(RunConfig::parse(text)?)
    }

    #[test]
    fn minimal_spectrum_gets_defaults() {
        let p = plan("experiment = \"monomer-spectrum\"\noutput = \"out\"\n").unwrap();
        assert_eq!(p.config.numerics.damping_time, Some(50.0));
        assert_eq!(p.config.numerics.t_max, Some(250.0));
        assert_eq!(p.config.bath.modes.as_deref(), Some(&DEFAULT_MODES[..]));
        assert!((p.kernel.alpha0().re - 1.0).abs() < 1e-12);
        assert!(p.calibration_factor > 1.0);
    }

    #[test]
    fn misspelled_key_is_rejected_with_location() {
        let err = plan("experiment = \"transfer\"\noutput = \"o\"\n[model]\nn_site = 3\n").unwrap_err();
        assert!(err.0.contains("n_site"), "{err}");
        assert!(err.0.contains("line 4"), "{err}");
        let err = plan("experiment = \"transfer\"\noutput = \"o\"\nseed = 3\n").unwrap_err();
        assert!(err.0.contains("seed"), "{err}");
    }

    #[test]
    fn unknown_experiment_rejected() {
        assert!(plan("experiment = \"emission\"\noutput = \"o\"\n").is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let p = plan(
            "experiment = \"transfer\"\noutput = \"o\"\n[model]\nn_sites = 15\nshift = -2.6\n\
             [numerics]\nt_max = 5.0\n[ensemble]\ninitial_site = 8\n",
        )
        .unwrap();
        let again = Plan::resolve(RunConfig::parse(&p.config.to_toml()).unwrap()).unwrap();
        assert_eq!(again.config, p.config);
        assert_eq!(again.aggregates[0].model, p.aggregates[0].model);
    }

    #[test]
    fn site_numbering_starts_at_one() {
        let base = "experiment = \"transfer\"\noutput = \"o\"\n[model]\nn_sites = 3\ncoupling = -1.0\n\
                    [numerics]\nt_max = 1.0\n[ensemble]\n";
        assert!(plan(&format!("{base}initial_site = 0\n")).unwrap_err().0.contains("initial_site"));
        assert!(plan(&format!("{base}initial_site = 4\n")).is_err());
        assert!(plan(&format!("{base}initial_site = 3\n")).is_ok());
    }

    #[test]
    fn field_errors_name_the_field() {
        let err = plan("experiment = \"aggregate-spectrum\"\noutput = \"o\"\n[model]\nn_sites = [3, 4]\nshift = -2.6\n")
            .unwrap_err();
        assert!(err.0.starts_with("model.shift"), "{err}");
        let err = plan("experiment = \"monomer-spectrum\"\noutput = \"o\"\n[numerics]\ndamping_time = -1.0\n")
            .unwrap_err();
        assert!(err.0.starts_with("numerics.damping_time"), "{err}");
        let err = plan("experiment = \"monomer-spectrum\"\noutput = \"o\"\n[ensemble]\nmaster_seed = 1\n")
            .unwrap_err();
        assert!(err.0.starts_with("ensemble"), "{err}");
    }

    #[test]
    fn explicit_aggregate() {
        let p = plan(
            "experiment = \"transfer\"\noutput = \"o\"\n[model]\nsite_energies = [0.0, 0.5]\n\
             couplings = [[0.0, -1.0], [-1.0, 0.0]]\n[numerics]\nt_max = 1.0\n",
        )
        .unwrap();
        assert_eq!(p.aggregates[0].model.coupling(0, 1), -1.0);
        assert!(plan(
            "experiment = \"transfer\"\noutput = \"o\"\n[model]\nsite_energies = [0.0, 0.5]\n\
             couplings = [[0.0, -1.0], [-0.5, 0.0]]\n[numerics]\nt_max = 1.0\n"
        )
        .is_err());
    }

    #[test]
    fn oracle_compare_needs_single_mode_dimer() {
        let base = "experiment = \"oracle-compare\"\noutput = \"o\"\n[model]\nn_sites = 2\ncoupling = -0.5\n";
        assert!(plan(base).unwrap_err().0.starts_with("bath.modes"));
        let p = plan(&format!("{base}[bath]\nmodes = [[0.25, 1.0, 0.1]]\ncalibrate = false\n")).unwrap();
        assert_eq!(p.config.oracle.fock_cutoff, Some(10));
        assert_eq!(p.calibration_factor, 1.0);
    }

    #[test]
    fn empty_bath_is_allowed_for_transfer() {
        let p = plan(
            "experiment = \"transfer\"\noutput = \"o\"\n[model]\nn_sites = 5\ncoupling = -1.0\n\
             [bath]\nmodes = []\n[numerics]\nt_max = 1.0\n",
        )
        .unwrap();
        assert!(p.kernel.is_zero());
    }
}
