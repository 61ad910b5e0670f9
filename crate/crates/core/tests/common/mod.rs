#![allow(dead_code)]

use ffr_core::config::Config;
use ffr_core::cosim::{FleetUnit, LossEvent, ScenarioConfig};
use ffr_core::sfr::SfrParams;
use ffr_core::surge::SurgePlan;
use ffr_core::turbine::TurbineParams;

/// Default scenario from the built-in configuration.
pub fn default_scenario() -> ScenarioConfig {
    Config::default().scenario().unwrap()
}

pub fn grid() -> SfrParams {
    SfrParams::default().with_wind_penetration(0.5).unwrap()
}

/// One 3000 MVA farm of reference turbines on the default grid, scheduled
/// with surge `delta_p`.
pub fn single_unit(v_w: f64, delta_p: f64, t_del: f64, t_rec: f64, horizon: f64) -> ScenarioConfig {
    ScenarioConfig {
        sfr: grid(),
        system_mva: 72_000.0,
        fleet: vec![FleetUnit {
            id: "w".into(),
            turbine: TurbineParams::reference(),
            v_w,
            mva: 3000.0,
            plan: SurgePlan {
                delta_p,
                t_del,
                t_rec,
                trigger_deadband: 0.036,
            },
            scheduled: true,
        }],
        event: LossEvent {
            t_event: 1.0,
            delta_p_loss: 0.03,
        },
        horizon,
        dt: 0.001,
        nadir_threshold: 59.75,
        deadband: 0.036,
    }
}
