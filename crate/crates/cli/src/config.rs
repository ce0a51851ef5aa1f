use crate::CliError;
use orbitpair::fuchsian::{FuchsianGroup, GroupSpec};
use orbitpair::partners::{self, PartnerBounds, MAX_L};
use orbitpair::suites::SuiteSizes;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Enumerate orbits of the configured group and search them.
    Survey,
    /// Run the lemma suites only.
    Verify,
    /// Plant an encounter in a synthetic Schottky group.
    Harness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarnessConfig {
    pub l: usize,
    /// `(u_j, s_j)`; defaults to an evenly spread grid inside `eps/L`.
    pub targets: Option<Vec<[f64; 2]>>,
    pub loop_times: Option<Vec<f64>>,
    /// Rotation angle of the section base.
    pub base_angle: f64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self { l: 3, targets: None, loop_times: None, base_angle: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub group: GroupSpec,
    pub eps: f64,
    pub max_word_length: usize,
    pub l_max: usize,
    /// Largest number of conjugacy classes kept from the enumeration.
    pub class_cap: usize,
    /// Conjugator word length used for lifts in detection.
    pub ball_length: usize,
    pub mode: Mode,
    /// Restrict survey commands to one orbit, e.g. `g1.g2^-1`.
    pub orbit: Option<String>,
    pub harness: HarnessConfig,
    pub suites: SuiteSizes,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            group: GroupSpec::preset("schottky"),
            eps: 0.02,
            max_word_length: 4,
            l_max: 3,
            class_cap: 2000,
            ball_length: 2,
            mode: Mode::Survey,
            orbit: None,
            harness: HarnessConfig::default(),
            suites: SuiteSizes::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// Checks that do not need the group.
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(CliError::config(format!("eps must be positive, got {}", self.eps)));
        }
        if !(2..=MAX_L).contains(&self.l_max) {
            return Err(CliError::config(format!("l_max must lie in 2..={MAX_L}, got {}", self.l_max)));
        }
        if self.class_cap == 0 {
            return Err(CliError::config("class_cap must be positive"));
        }
        if self.mode == Mode::Harness {
            let h = &self.harness;
            if !(2..=MAX_L).contains(&h.l) {
                return Err(CliError::config(format!("harness.l must lie in 2..={MAX_L}, got {}", h.l)));
            }
            if let Some(t) = &h.targets {
                if t.len() != h.l {
                    return Err(CliError::config(format!("harness.targets has {} entries, expected {}", t.len(), h.l)));
                }
                if t.iter().flatten().any(|x| x.is_nan() || x.abs() >= self.eps) {
                    return Err(CliError::config("harness targets must satisfy |u|, |s| < eps"));
                }
            }
            if let Some(t) = &h.loop_times {
                if t.len() != h.l || t.iter().any(|x| x.is_nan() || *x < 1.0) {
                    return Err(CliError::config(format!("harness.loop_times needs {} entries, each >= 1", h.l)));
                }
            }
        }
        Ok(())
    }

    /// `eps <= epsilon_star / Delta d` for the largest encounter searched.
    pub fn check_eps(&self, group: &FuchsianGroup, l: usize) -> Result<(), CliError> {
        let divisor = PartnerBounds::for_l(l.max(3)).eps_divisor;
        let limit = group.config().epsilon_star / divisor;
        if self.eps > limit {
            return Err(CliError::config(format!("eps = {} exceeds epsilon_star / {divisor:.4} = {limit:.6e} for this group", self.eps)));
        }
        Ok(())
    }

    pub fn build_group(&self) -> Result<FuchsianGroup, CliError> {
        FuchsianGroup::from_spec(&self.group).map_err(|e| CliError::config(format!("group: {e}")))
    }

    pub fn harness_targets(&self) -> Vec<(f64, f64)> {
        match &self.harness.targets {
            Some(t) => t.iter().map(|p| (p[0], p[1])).collect(),
            None => partners::default_targets(self.harness.l, self.eps),
        }
    }

    pub fn harness_loop_times(&self) -> Vec<f64> {
        self.harness.loop_times.clone().unwrap_or_else(|| partners::default_loop_times(self.harness.l))
    }
}
