//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//! tasks = ["certify", "gamma-verify", "lyapunov-verify", "simulate", "rate"]
//!
//! [potential]
//! family = "single_well"       # single_well | double_well | singular_pair
//! dim = 1                      # single_well / double_well only
//! # singular_pair: n, k, a_coef, b_coef, a, b, ordered
//!
//! [model]
//! gamma = 2.0
//! temperature = 1.0
//! n = 1
//! k = 1
//!
//! [certificate]
//! route = "villani"            # villani | general
//! rho_k = 1.0                  # a number, or "estimate"
//! villani_m = 1.0              # or villani_kappas = "double_well"
//!
//! [spectral]                   # used when rho_k = "estimate"
//! points_per_axis = 32
//! cutoff = 30.0
//! levels = 3
//!
//! [simulation]                 # dynamics settings; seed comes from the top level
//! dt = 1e-3
//! t_max = 5.0
//! ensemble_size = 10000
//! record_interval = 0.1
//!
//! [sampler]
//! chains = 8
//! burn_in = 5000
//! thin = 10
//!
//! [verify]
//! points = 100
//! samples = 10000
//! stress = 1000
//! directions = 4
//! n_batches = 20
//! ```
//!
//! Every section except `potential` and `model` is optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::certificate::{
    build_certificate, default_growth_constants, double_well_kappas, villani_certificate, Certificate,
    ModelParams, RhoK, VillaniCertificate, VillaniInput,
};
use crate::dynamics::{SamplerConfig, Scheme, SimConfig};
use crate::error::{Error, Result};
use crate::potential::{GrowthConstants, PotentialModel, SingularParams};
use crate::spectral::estimate_rho_k;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tasks: Vec<String>,
    pub potential: PotentialSection,
    pub model: ModelSection,
    #[serde(default)]
    pub certificate: CertificateSection,
    #[serde(default)]
    pub spectral: SpectralSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub verify: VerifySection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSection {
    SingleWell { dim: usize },
    DoubleWell { dim: usize },
    SingularPair {
        n: usize,
        k: usize,
        #[serde(default = "one")]
        a_coef: f64,
        #[serde(default = "one")]
        b_coef: f64,
        a: u32,
        b: f64,
        #[serde(default)]
        ordered: Option<bool>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub gamma: f64,
    pub temperature: f64,
    #[serde(default = "one_usize")]
    pub n: usize,
    #[serde(default = "one_usize")]
    pub k: usize,
}

fn one_usize() -> usize {
    1
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    #[default]
    General,
    Villani,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoSetting {
    Value(f64),
    Keyword(String),
}

impl Default for RhoSetting {
    fn default() -> Self {
        RhoSetting::Value(1.0)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSection {
    #[serde(default)]
    pub route: Route,
    #[serde(default)]
    pub rho_k: RhoSetting,
    pub villani_m: Option<f64>,
    /// `"double_well"` derives the Villani constants from the double-well family.
    pub villani_kappas: Option<String>,
    /// Overrides the family growth constants.
    pub growth: Option<GrowthConstants>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralSection {
    pub points_per_axis: usize,
    pub cutoff: f64,
    pub levels: usize,
}

impl Default for SpectralSection {
    fn default() -> Self {
        Self { points_per_axis: 32, cutoff: 30.0, levels: 3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub dt: f64,
    pub t_max: f64,
    pub ensemble_size: usize,
    pub record_interval: f64,
    pub substep_force_threshold: f64,
    pub energy_cap: f64,
    pub scheme: Scheme,
    pub n_batches: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let s = SimConfig::default();
        Self {
            dt: s.dt,
            t_max: 5.0,
            ensemble_size: 1000,
            record_interval: s.record_interval,
            substep_force_threshold: s.substep_force_threshold,
            energy_cap: s.energy_cap,
            scheme: s.scheme,
            n_batches: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub chains: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub proposal_scale: f64,
    pub start_spacing: f64,
}

impl Default for SamplerSection {
    fn default() -> Self {
        let s = SamplerConfig::default();
        Self {
            chains: s.chains,
            burn_in: s.burn_in,
            thin: s.thin,
            proposal_scale: s.proposal_scale,
            start_spacing: s.start_spacing,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub points: usize,
    pub samples: usize,
    pub stress: usize,
    pub directions: usize,
    pub n_batches: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { points: 100, samples: 10_000, stress: 1000, directions: 4, n_batches: 20 }
    }
}

/// Either certificate route.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyCertificate {
    General(Box<Certificate>),
    Villani(VillaniCertificate),
}

impl AnyCertificate {
    pub fn sigma(&self) -> f64 {
        match self {
            AnyCertificate::General(c) => c.sigma,
            AnyCertificate::Villani(c) => c.sigma,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            AnyCertificate::General(c) => c.to_json(),
            AnyCertificate::Villani(c) => c.to_json(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn validate(&self) -> Result<()> {
        self.model_params()?;
        let m = self.potential_model()?;
        if m.dim() != self.model.n * self.model.k {
            return Err(Error::Config(format!(
                "potential dimension {} differs from model n*k = {}",
                m.dim(),
                self.model.n * self.model.k
            )));
        }
        if let RhoSetting::Keyword(k) = &self.certificate.rho_k {
            if k != "estimate" {
                return Err(Error::Config(format!("rho_k must be a number or \"estimate\", got {k:?}")));
            }
        }
        if let RhoSetting::Value(v) = self.certificate.rho_k {
            if !(v > 0.0) {
                return Err(Error::Config("rho_k must be positive".into()));
            }
        }
        self.sim_config().validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::new(self.model.gamma, self.model.temperature, self.model.n, self.model.k)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn potential_model(&self) -> Result<PotentialModel> {
        let r = match self.potential {
            PotentialSection::SingleWell { dim } => PotentialModel::single_well(dim),
            PotentialSection::DoubleWell { dim } => PotentialModel::double_well(dim),
            PotentialSection::SingularPair { n, k, a_coef, b_coef, a, b, ordered } => {
                PotentialModel::singular_pair(SingularParams {
                    n,
                    k,
                    a_coef,
                    b_coef,
                    a,
                    b,
                    ordered: ordered.unwrap_or(k == 1),
                })
            }
        };
        r.map_err(|e| Error::Config(e.to_string()))
    }

    pub fn growth_constants(&self) -> Result<GrowthConstants> {
        match self.certificate.growth {
            Some(g) => Ok(g),
            None => default_growth_constants(&self.potential_model()?, &self.model_params()?),
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        let s = &self.simulation;
        SimConfig {
            dt: s.dt,
            t_max: s.t_max,
            ensemble_size: s.ensemble_size,
            seed: self.seed,
            substep_force_threshold: s.substep_force_threshold,
            energy_cap: s.energy_cap,
            scheme: s.scheme,
            record_interval: s.record_interval,
        }
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        let s = &self.sampler;
        SamplerConfig {
            seed: self.seed,
            chains: s.chains,
            burn_in: s.burn_in,
            thin: s.thin,
            proposal_scale: s.proposal_scale,
            start_spacing: s.start_spacing,
        }
    }

    /// `rho_K` as configured, estimating it on a grid when asked.
    pub fn rho_k(&self, r2: f64) -> Result<RhoK> {
        match &self.certificate.rho_k {
            RhoSetting::Value(v) => Ok(RhoK::user(*v)),
            RhoSetting::Keyword(_) => {
                let mp = self.model_params()?;
                let model = self.potential_model()?;
                let ks = crate::certificate::KSpec::new(&mp, r2);
                let sp = &self.spectral;
                Ok(estimate_rho_k(&model, &mp, &ks, sp.points_per_axis, sp.cutoff, sp.levels)?.0)
            }
        }
    }

    pub fn general_certificate(&self) -> Result<Certificate> {
        let model = self.potential_model()?;
        let mp = self.model_params()?;
        let gc = self.growth_constants()?;
        let (_, r2) = crate::certificate::compute_r1_r2(&gc, &mp)?;
        build_certificate(&model, &gc, &mp, self.rho_k(r2)?)
    }

    pub fn certificate(&self) -> Result<AnyCertificate> {
        match self.certificate.route {
            Route::General => Ok(AnyCertificate::General(Box::new(self.general_certificate()?))),
            Route::Villani => {
                let mp = self.model_params()?;
                let input = match (&self.certificate.villani_m, &self.certificate.villani_kappas) {
                    (Some(m), None) => VillaniInput::M(*m),
                    (None, Some(k)) if k == "double_well" => {
                        let (kappa0, kappa0_prime) = double_well_kappas(&mp)?;
                        VillaniInput::Kappas { kappa0, kappa0_prime }
                    }
                    _ => {
                        return Err(Error::Config(
                            "the villani route needs exactly one of villani_m or villani_kappas = \"double_well\"".into(),
                        ))
                    }
                };
                let rho = match self.certificate.rho_k {
                    RhoSetting::Value(v) => v,
                    RhoSetting::Keyword(_) => {
                        return Err(Error::Config("the villani route needs a numeric rho_k".into()))
                    }
                };
                Ok(AnyCertificate::Villani(villani_certificate(&mp, input, rho)?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE: &str = r#"
seed = 3
[potential]
family = "single_well"
dim = 1
[model]
gamma = 2.0
temperature = 1.0
[certificate]
route = "villani"
rho_k = 1.0
villani_m = 1.0
"#;

    #[test]
    fn single_well_villani() {
        let c = RunConfig::from_toml_str(SINGLE).unwrap();
        assert_eq!(c.seed, 3);
        let s = c.certificate().unwrap().sigma();
        assert!((s - 0.12773958089728293544).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::from_toml_str("[model]\ngamma = 1.0\ntemperature = 1.0\n").is_err());
        let bad = SINGLE.replace("dim = 1", "dim = 2");
        assert!(matches!(RunConfig::from_toml_str(&bad), Err(Error::Config(_))));
        let bad = SINGLE.replace("rho_k = 1.0", "rho_k = \"guess\"");
        assert!(RunConfig::from_toml_str(&bad).is_err());
        let bad = SINGLE.replace("seed = 3", "seed = 3\nunknown = 1");
        assert!(RunConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn singular_pair_defaults_ordering() {
        let s = r#"
[potential]
family = "singular_pair"
n = 2
k = 1
a = 2
b = 6.0
[model]
gamma = 1.0
temperature = 1.0
n = 2
k = 1
"#;
        let c = RunConfig::from_toml_str(s).unwrap();
        assert!(c.potential_model().unwrap().singular_params().unwrap().ordered);
        assert!(c.certificate().unwrap().sigma() > 0.0);
    }
}
