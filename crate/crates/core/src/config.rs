//! Scenario files: one TOML document holding every physical constant the
//! pipeline needs. Every section and key is optional; omitted values take the
//! documented defaults, and unknown keys are rejected.

use std::path::Path;

use serde::Deserialize;

use crate::cosim::{FleetUnit, LossEvent, ScenarioConfig};
use crate::error::{Error, Result};
use crate::sfr::SfrParams;
use crate::surge::{self, EnergyFormula, SurgePlan};
use crate::turbine::{CpSurface, TurbineParams};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Simulation {
    pub dt: f64,
    pub horizon: f64,
}

impl Default for Simulation {
    fn default() -> Self {
        Self {
            dt: 0.001,
            horizon: 150.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct System {
    /// System base, MVA.
    pub mva_base: f64,
    /// Share of synchronous capacity replaced by wind, in `[0, 1)`.
    pub wind_penetration: f64,
}

impl Default for System {
    fn default() -> Self {
        Self {
            mva_base: 72_000.0,
            wind_penetration: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sfr {
    pub f_b: f64,
    pub h: f64,
    pub d: f64,
    pub r_droop: f64,
    pub k_m: f64,
    pub f_h: f64,
    pub t_r: f64,
}

impl Default for Sfr {
    fn default() -> Self {
        let p = SfrParams::default();
        Self {
            f_b: p.f_b,
            h: p.h,
            d: p.d,
            r_droop: p.r_droop,
            k_m: p.k_m,
            f_h: p.f_h,
            t_r: p.t_r,
        }
    }
}

impl Sfr {
    pub fn params(&self) -> SfrParams {
        SfrParams {
            f_b: self.f_b,
            h: self.h,
            d: self.d,
            r_droop: self.r_droop,
            k_m: self.k_m,
            f_h: self.f_h,
            t_r: self.t_r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Event {
    pub t_event: f64,
    /// Lost generation, pu of the system base.
    pub delta_p_loss: f64,
}

impl Default for Event {
    fn default() -> Self {
        Self {
            t_event: 1.0,
            delta_p_loss: 0.03,
        }
    }
}

/// Overrides of the reference turbine. `swept_area`, `lambda_opt` and `k_opt`
/// are derived from the other constants unless given.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Turbine {
    pub rho: Option<f64>,
    pub radius: Option<f64>,
    pub swept_area: Option<f64>,
    pub cp_coeffs: Option<[f64; 6]>,
    pub lambda_opt: Option<f64>,
    pub k_opt: Option<f64>,
    pub h_t: Option<f64>,
    pub omega_s: Option<f64>,
    pub omega_r_max: Option<f64>,
    pub omega_r_min: Option<f64>,
    pub p_max: Option<f64>,
    pub eta: Option<f64>,
    pub t_g: Option<f64>,
    pub p_lim: Option<f64>,
    pub mva_base: Option<f64>,
    pub v_cut_in: Option<f64>,
    pub v_cut_out: Option<f64>,
}

impl Turbine {
    pub fn params(&self) -> Result<TurbineParams> {
        let mut p = TurbineParams::reference();
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut p.rho, self.rho);
        set(&mut p.radius, self.radius);
        p.swept_area = self
            .swept_area
            .unwrap_or(std::f64::consts::PI * p.radius * p.radius);
        if let Some(c) = self.cp_coeffs {
            p.cp = CpSurface { c };
        }
        p.lambda_opt = match self.lambda_opt {
            Some(l) => l,
            None => p
                .cp
                .optimal_lambda(0.0)
                .map_err(|e| Error::Config(format!("turbine.cp_coeffs: {e}")))?,
        };
        set(&mut p.h_t, self.h_t);
        set(&mut p.omega_s, self.omega_s);
        set(&mut p.omega_r_max, self.omega_r_max);
        set(&mut p.omega_r_min, self.omega_r_min);
        set(&mut p.p_max, self.p_max);
        set(&mut p.eta, self.eta);
        set(&mut p.t_g, self.t_g);
        set(&mut p.p_lim, self.p_lim);
        set(&mut p.mva_base, self.mva_base);
        set(&mut p.v_cut_in, self.v_cut_in);
        set(&mut p.v_cut_out, self.v_cut_out);
        p.k_opt = self.k_opt.unwrap_or_else(|| p.k_opt_from_aero());
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Surge {
    pub t_del: f64,
    pub t_rec: f64,
    /// Hz.
    pub deadband: f64,
    pub energy_formula: EnergyFormula,
}

impl Default for Surge {
    fn default() -> Self {
        Self {
            t_del: 10.0,
            t_rec: 20.0,
            deadband: 0.036,
            energy_formula: EnergyFormula::Balance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Dispatch {
    /// Hz.
    pub nadir_threshold: f64,
    /// Sensitivity probe, pu of the unit rating.
    pub probe: f64,
    /// Replace the fleet's `scheduled` flags by the minimum commitment.
    pub auto_schedule: bool,
}

impl Default for Dispatch {
    fn default() -> Self {
        Self {
            nadir_threshold: 59.75,
            probe: 0.01,
            auto_schedule: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Table {
    pub wind_speeds: Vec<f64>,
}

impl Default for Table {
    fn default() -> Self {
        Self {
            wind_speeds: (0..=10).map(|k| 7.0 + 0.5 * k as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub t_rec_values: Vec<f64>,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            t_rec_values: vec![10.0, 20.0, 40.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetEntry {
    pub id: String,
    pub v_w: f64,
    /// Farm rating, MVA.
    pub mva: f64,
    #[serde(default)]
    pub scheduled: bool,
    /// Surge magnitude, pu of the farm rating; defaults to the maximum injection.
    #[serde(default)]
    pub delta_p: Option<f64>,
}

fn default_fleet() -> Vec<FleetEntry> {
    [("1", 10.35), ("2", 9.83), ("3", 7.90), ("4", 11.00), ("5", 8.50)]
        .into_iter()
        .map(|(id, v_w)| FleetEntry {
            id: id.into(),
            v_w,
            mva: 3000.0,
            scheduled: false,
            delta_p: None,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub simulation: Simulation,
    pub system: System,
    pub sfr: Sfr,
    pub event: Event,
    pub turbine: Turbine,
    pub surge: Surge,
    pub dispatch: Dispatch,
    pub table: Table,
    pub sweep: Sweep,
    pub fleet: Vec<FleetEntry>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            simulation: Simulation::default(),
            system: System::default(),
            sfr: Sfr::default(),
            event: Event::default(),
            turbine: Turbine::default(),
            surge: Surge::default(),
            dispatch: Dispatch::default(),
            table: Table::default(),
            sweep: Sweep::default(),
            fleet: default_fleet(),
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{field}: must be positive, got {v}")))
    }
}

impl Config {
    /// Parses and validates a scenario file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text).map_err(|e| Error::ConfigFile {
            path: path.to_path_buf(),
            message: match e {
                Error::Config(m) => m,
                other => other.to_string(),
            },
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        positive("simulation.dt", self.simulation.dt)?;
        positive("simulation.horizon", self.simulation.horizon)?;
        positive("system.mva_base", self.system.mva_base)?;
        if !(0.0..1.0).contains(&self.system.wind_penetration) {
            return Err(Error::Config(format!(
                "system.wind_penetration: must lie in [0, 1), got {}",
                self.system.wind_penetration
            )));
        }
        self.sfr.params().validate()?;
        self.sfr_effective()?.derived()?;
        if !(self.event.t_event >= 0.0) {
            return Err(Error::Config("event.t_event: must be >= 0".into()));
        }
        if !self.event.delta_p_loss.is_finite() {
            return Err(Error::Config("event.delta_p_loss: must be finite".into()));
        }
        self.turbine.params()?;
        positive("surge.t_del", self.surge.t_del)?;
        if !(self.surge.t_rec >= 0.0) {
            return Err(Error::Config(format!("surge.t_rec: must be >= 0, got {}", self.surge.t_rec)));
        }
        if !(self.surge.deadband >= 0.0) {
            return Err(Error::Config("surge.deadband: must be >= 0".into()));
        }
        positive("dispatch.probe", self.dispatch.probe)?;
        positive("dispatch.nadir_threshold", self.dispatch.nadir_threshold)?;
        surge::check_wind_grid(&self.table.wind_speeds)
            .map_err(|e| Error::Config(format!("table.wind_speeds: {}", strip_kind(&e))))?;
        for (i, v) in self.sweep.t_rec_values.iter().enumerate() {
            if !(*v >= 0.0) {
                return Err(Error::Config(format!("sweep.t_rec_values[{i}]: must be >= 0, got {v}")));
            }
        }
        let mut ids: Vec<&str> = Vec::new();
        for (i, u) in self.fleet.iter().enumerate() {
            if u.id.is_empty() {
                return Err(Error::Config(format!("fleet[{i}].id: must not be empty")));
            }
            if ids.contains(&u.id.as_str()) {
                return Err(Error::Config(format!("fleet[{i}].id: duplicate id `{}`", u.id)));
            }
            ids.push(&u.id);
            positive(&format!("fleet[{i}].v_w"), u.v_w)?;
            positive(&format!("fleet[{i}].mva"), u.mva)?;
            if let Some(dp) = u.delta_p {
                if !(dp >= 0.0) {
                    return Err(Error::Config(format!("fleet[{i}].delta_p: must be >= 0, got {dp}")));
                }
            }
        }
        Ok(())
    }

    pub fn turbine_params(&self) -> Result<TurbineParams> {
        self.turbine.params()
    }

    /// Grid parameters with the wind-penetration scaling applied.
    pub fn sfr_effective(&self) -> Result<SfrParams> {
        self.sfr.params().with_wind_penetration(self.system.wind_penetration)
    }

    /// The grid without the wind fleet's displacement of synchronous units.
    pub fn sfr_synchronous(&self) -> SfrParams {
        self.sfr.params()
    }

    /// Scenario with each unit's surge set to its configured value or its
    /// maximum injection, and `scheduled` flags as written in the file.
    pub fn scenario(&self) -> Result<ScenarioConfig> {
        let turbine = self.turbine_params()?;
        let mut fleet = Vec::with_capacity(self.fleet.len());
        for (i, u) in self.fleet.iter().enumerate() {
            let delta_p = match u.delta_p {
                Some(dp) => dp,
                None => {
                    surge::max_injection_with(&turbine, u.v_w, self.surge.t_del, self.surge.energy_formula)
                        .map_err(|e| Error::Config(format!("fleet[{i}].v_w: {}", strip_kind(&e))))?
                        .delta_p_max
                }
            };
            fleet.push(FleetUnit {
                id: u.id.clone(),
                turbine: turbine.clone(),
                v_w: u.v_w,
                mva: u.mva,
                plan: SurgePlan {
                    delta_p,
                    t_del: self.surge.t_del,
                    t_rec: self.surge.t_rec,
                    trigger_deadband: self.surge.deadband,
                },
                scheduled: u.scheduled,
            });
        }
        let scenario = ScenarioConfig {
            sfr: self.sfr_effective()?,
            system_mva: self.system.mva_base,
            fleet,
            event: LossEvent {
                t_event: self.event.t_event,
                delta_p_loss: self.event.delta_p_loss,
            },
            horizon: self.simulation.horizon,
            dt: self.simulation.dt,
            nadir_threshold: self.dispatch.nadir_threshold,
            deadband: self.surge.deadband,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Message of an error without its kind prefix, for re-wrapping under a field path.
fn strip_kind(e: &Error) -> String {
    match e {
        Error::Domain(m) | Error::Config(m) | Error::Input(m) | Error::IntegrationBlowup(m) => m.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        assert_eq!(Config::parse("").unwrap(), Config::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = Config::parse("[surge]\nt_dell = 3.0\n").unwrap_err();
        assert!(e.to_string().contains("t_dell"), "{e}");
    }

    #[test]
    fn descending_grid_names_the_field() {
        let e = Config::parse("[table]\nwind_speeds = [8.0, 7.5]\n").unwrap_err();
        assert!(e.to_string().contains("table.wind_speeds"), "{e}");
    }

    #[test]
    fn turbine_overrides_rederive_k_opt() {
        let c = Config::parse("[turbine]\nradius = 40.0\n").unwrap();
        let p = c.turbine_params().unwrap();
        assert!((p.swept_area - std::f64::consts::PI * 1600.0).abs() < 1e-9);
        p.validate().unwrap();
    }

    #[test]
    fn scenario_fills_in_maximum_injection() {
        let c = Config::default();
        let s = c.scenario().unwrap();
        let p = c.turbine_params().unwrap();
        let expect = surge::max_injection(&p, 10.35, 10.0).unwrap().delta_p_max;
        assert_eq!(s.fleet[0].plan.delta_p, expect);
    }
}
