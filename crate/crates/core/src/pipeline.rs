//! Offline planning path: per-unit records for the fleet, the required nadir
//! uplift for the configured event, and the resulting commitment.

use crate::cosim::{run_scenario, ScenarioConfig};
use crate::dispatch::{min_commitment, unit_sensitivity, Commitment, Schedule, UnitRecord};
use crate::error::Result;
use crate::exec::Exec;

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    /// Nadir of the event without any support, Hz.
    pub baseline_nadir: f64,
    pub required_uplift: f64,
    pub records: Vec<UnitRecord>,
    pub commitment: Commitment,
}

/// Lookup rows for every fleet unit: maximum injection on the system base and
/// the co-simulated nadir sensitivity.
pub fn unit_records(exec: Exec, scenario: &ScenarioConfig, probe: f64) -> Result<Vec<UnitRecord>> {
    let idx: Vec<usize> = (0..scenario.fleet.len()).collect();
    exec.try_map(&idx, |&i| {
        let u = &scenario.fleet[i];
        Ok(UnitRecord {
            id: u.id.clone(),
            v_w: u.v_w,
            delta_p_max: u.plan.delta_p * u.mva / scenario.system_mva,
            sensitivity: unit_sensitivity(scenario, i, probe)?,
        })
    })
}

pub fn baseline(scenario: &ScenarioConfig) -> ScenarioConfig {
    let mut c = scenario.clone();
    for u in &mut c.fleet {
        u.scheduled = false;
    }
    c
}

/// Sizes the commitment that lifts the unsupported nadir to the threshold.
pub fn plan(exec: Exec, scenario: &ScenarioConfig, probe: f64) -> Result<Plan> {
    let baseline_nadir = run_scenario(&baseline(scenario))?.metrics.f_nadir;
    let required_uplift = (scenario.nadir_threshold - baseline_nadir).max(0.0);
    let records = unit_records(exec, scenario, probe)?;
    let commitment = min_commitment(&records, required_uplift)?;
    Ok(Plan {
        baseline_nadir,
        required_uplift,
        records,
        commitment,
    })
}

/// The scenario with exactly the committed units scheduled.
pub fn apply(scenario: &ScenarioConfig, schedule: &Schedule) -> ScenarioConfig {
    let mut c = scenario.clone();
    for u in &mut c.fleet {
        u.scheduled = schedule.committed.contains(&u.id);
    }
    c
}
