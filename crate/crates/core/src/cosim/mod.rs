//! Closed-loop event harness: the SFR grid model coupled with a fleet of
//! turbine models through a single combined RK4 state.
//!
//! Each step the fleet's injection (electrical output above the pre-event
//! operating point, converted to the system base) offsets the generation loss.
//! Scheduled units arm together on the first sample where `|f − f_b|` exceeds
//! the deadband and then add their surge reference to the MPPT reference.

mod metrics;

pub use metrics::{compute_metrics, settle_time, Metrics, ROTOR_SETTLE_BAND, SETTLE_BAND_HZ, SETTLE_WINDOW};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ode::{rk4_step, Rk4Workspace};
use crate::sfr::{self, SfrParams};
use crate::surge::SurgePlan;
use crate::turbine::TurbineParams;

#[derive(Debug, Clone, PartialEq)]
pub struct FleetUnit {
    pub id: String,
    pub turbine: TurbineParams,
    /// Wind speed, m/s, constant over the scenario.
    pub v_w: f64,
    /// Aggregate rating of the farm, MVA.
    pub mva: f64,
    pub plan: SurgePlan,
    pub scheduled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossEvent {
    pub t_event: f64,
    /// Lost generation on the system base, pu.
    pub delta_p_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Effective grid parameters (wind penetration already applied).
    pub sfr: SfrParams,
    /// System base, MVA.
    pub system_mva: f64,
    pub fleet: Vec<FleetUnit>,
    pub event: LossEvent,
    pub horizon: f64,
    pub dt: f64,
    pub nadir_threshold: f64,
    /// Frequency deviation that arms every scheduled unit, Hz.
    pub deadband: f64,
}

impl ScenarioConfig {
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.sfr.validate()?;
        sfr::check_step(&self.sfr, self.dt)?;
        let cfg = |m: String| Err(Error::Config(m));
        if !(self.system_mva > 0.0) {
            return cfg(format!("system mva_base must be positive, got {}", self.system_mva));
        }
        if !(self.event.t_event >= 0.0) || !self.event.delta_p_loss.is_finite() {
            return cfg("event: need t_event >= 0 and a finite delta_p_loss".into());
        }
        if !(self.horizon > self.event.t_event) || !self.horizon.is_finite() {
            return cfg(format!(
                "horizon {} s must exceed the event time {} s",
                self.horizon, self.event.t_event
            ));
        }
        let n = self.steps();
        if ((n as f64) * self.dt - self.horizon).abs() > 1e-9 * self.horizon.max(1.0) {
            return cfg(format!("horizon {} s is not a whole number of {} s steps", self.horizon, self.dt));
        }
        if !(self.deadband >= 0.0) {
            return cfg(format!("deadband must be >= 0, got {}", self.deadband));
        }
        let mut ids: Vec<&str> = self.fleet.iter().map(|u| u.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return cfg(format!("duplicate fleet id `{}`", w[0]));
        }
        for u in &self.fleet {
            let tag = |e: Error| Error::Config(format!("fleet unit `{}`: {e}", u.id));
            u.turbine.validate().map_err(tag)?;
            u.plan.validate().map_err(tag)?;
            if !(u.mva > 0.0) {
                return cfg(format!("fleet unit `{}`: mva must be positive", u.id));
            }
            if self.dt > u.turbine.t_g / 4.0 {
                return cfg(format!(
                    "step {} s does not resolve the converter lag of unit `{}` (t_g/4 = {} s)",
                    self.dt,
                    u.id,
                    u.turbine.t_g / 4.0
                ));
            }
        }
        Ok(())
    }
}

/// Time series of one scenario, one row per step including `t = 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub unit_ids: Vec<String>,
    pub t: Vec<f64>,
    pub f_hz: Vec<f64>,
    /// Net deficit seen by the grid, system pu.
    pub imbalance_pu: Vec<f64>,
    /// Fleet injection above the pre-event output, system pu.
    pub wind_total_pu: Vec<f64>,
    /// `omega_r[unit][row]`.
    pub omega_r: Vec<Vec<f64>>,
    /// `p_e[unit][row]`, pu of the unit rating.
    pub p_e: Vec<Vec<f64>>,
    /// Pre-event operating points.
    pub omega_r0: Vec<f64>,
    pub p_0: Vec<f64>,
    /// Activation time of each unit, if it was armed.
    pub activation: Vec<Option<f64>>,
    /// Row at which the deadband was first exceeded.
    pub trigger_step: Option<usize>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub trace: SimTrace,
    pub metrics: Metrics,
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioResult> {
    let trace = simulate_trace(config)?;
    let metrics = compute_metrics(&trace, config)?;
    Ok(ScenarioResult { trace, metrics })
}

struct UnitConst<'a> {
    unit: &'a FleetUnit,
    p_0: f64,
    ratio: f64,
}

struct Flags {
    loss_on: bool,
    /// Activation time per unit.
    active: Vec<Option<f64>>,
    /// Start of each unit's recovery ramp, fixed at the end of over-production.
    rec_level: Vec<Option<f64>>,
}

fn derivatives(
    cfg: &ScenarioConfig,
    units: &[UnitConst],
    flags: &Flags,
    t: f64,
    y: &[f64],
    dy: &mut [f64],
) -> (f64, f64) {
    let mut wind = 0.0;
    for (i, uc) in units.iter().enumerate() {
        let tb = &uc.unit.turbine;
        let (w, p) = (y[2 + 2 * i], y[3 + 2 * i]);
        // a non-positive speed yields NaN here and is caught after the step
        let p_m = tb.mechanical_power(uc.unit.v_w, w, 0.0).unwrap_or(f64::NAN);
        let surge = match (flags.active[i], flags.rec_level[i]) {
            (Some(ta), Some(level)) => uc.unit.plan.reference_from(t - ta, level),
            // the plateau holds until the recovery level is latched
            (Some(_), None) => uc.unit.plan.delta_p,
            (None, _) => 0.0,
        };
        let p_ref = tb.mppt_reference(w) + surge;
        dy[2 + 2 * i] = (p_m - p) / (2.0 * tb.h_t * w);
        dy[3 + 2 * i] = tb.command_rate(p, p_ref);
        wind += (p - uc.p_0) * uc.ratio;
    }
    let loss = if flags.loss_on { cfg.event.delta_p_loss } else { 0.0 };
    let imbalance = loss - wind;
    let (a, b) = sfr::derivatives(&cfg.sfr, y[0], y[1], imbalance);
    dy[0] = a;
    dy[1] = b;
    (imbalance, wind)
}

fn advance(
    cfg: &ScenarioConfig,
    units: &[UnitConst],
    flags: &Flags,
    y: &mut [f64],
    t: f64,
    h: f64,
    ws: &mut Rk4Workspace,
) {
    rk4_step(y, t, h, ws, |t, y, dy| {
        derivatives(cfg, units, flags, t, y, dy);
    });
}

/// Integrates the scenario and records every step.
pub fn simulate_trace(config: &ScenarioConfig) -> Result<SimTrace> {
    config.validate()?;
    let mut units = Vec::with_capacity(config.fleet.len());
    for u in &config.fleet {
        let op = u.turbine.equilibrium(u.v_w)?;
        if op.omega_r < u.turbine.omega_r_min {
            return Err(Error::Config(format!(
                "fleet unit `{}`: pre-event speed {:.4} pu is below omega_r_min",
                u.id, op.omega_r
            )));
        }
        units.push((
            UnitConst {
                unit: u,
                p_0: op.p_e,
                ratio: u.mva / config.system_mva,
            },
            op.omega_r,
        ));
    }
    let (units, omega_r0): (Vec<UnitConst>, Vec<f64>) = units.into_iter().unzip();
    let n_units = units.len();
    let n = config.steps();
    let dt = config.dt;
    let f_b = config.sfr.f_b;

    let mut y = vec![0.0; 2 + 2 * n_units];
    for (i, uc) in units.iter().enumerate() {
        y[2 + 2 * i] = omega_r0[i];
        y[3 + 2 * i] = uc.p_0;
    }
    let mut flags = Flags {
        loss_on: false,
        active: vec![None; n_units],
        rec_level: vec![None; n_units],
    };
    let mut ws = Rk4Workspace::new(y.len());
    let mut dy = vec![0.0; y.len()];

    let mut trace = SimTrace {
        unit_ids: config.fleet.iter().map(|u| u.id.clone()).collect(),
        t: Vec::with_capacity(n + 1),
        f_hz: Vec::with_capacity(n + 1),
        imbalance_pu: Vec::with_capacity(n + 1),
        wind_total_pu: Vec::with_capacity(n + 1),
        omega_r: vec![Vec::with_capacity(n + 1); n_units],
        p_e: vec![Vec::with_capacity(n + 1); n_units],
        omega_r0: omega_r0.clone(),
        p_0: units.iter().map(|u| u.p_0).collect(),
        activation: vec![None; n_units],
        trigger_step: None,
    };

    let record = |trace: &mut SimTrace, flags: &Flags, t: f64, y: &[f64], dy: &mut [f64]| {
        let (imbalance, wind) = derivatives(config, &units, flags, t, y, dy);
        trace.t.push(t);
        trace.f_hz.push(f_b * (1.0 + y[0]));
        trace.imbalance_pu.push(imbalance);
        trace.wind_total_pu.push(wind);
        for i in 0..n_units {
            trace.omega_r[i].push(y[2 + 2 * i]);
            trace.p_e[i].push(y[3 + 2 * i]);
        }
    };

    let t_event = config.event.t_event;
    if t_event <= 0.0 {
        flags.loss_on = true;
    }
    record(&mut trace, &flags, 0.0, &y, &mut dy);

    for k in 0..n {
        let t0 = k as f64 * dt;
        let t1 = (k + 1) as f64 * dt;
        if !flags.loss_on && t_event < t1 {
            // split the step at the event
            if t_event > t0 {
                advance(config, &units, &flags, &mut y, t0, t_event - t0, &mut ws);
            }
            flags.loss_on = true;
            advance(config, &units, &flags, &mut y, t_event.max(t0), t1 - t_event.max(t0), &mut ws);
        } else {
            advance(config, &units, &flags, &mut y, t0, dt, &mut ws);
        }

        for (i, uc) in units.iter().enumerate() {
            let w = y[2 + 2 * i];
            if !(w > 0.0) || !w.is_finite() || !y[0].is_finite() {
                return Err(Error::IntegrationBlowup(format!(
                    "unit `{}` reached rotor speed {w} pu at t = {t1:.4} s",
                    uc.unit.id
                )));
            }
            if w < uc.unit.turbine.omega_r_min {
                return Err(Error::RotorSecurity {
                    unit: uc.unit.id.clone(),
                    t: t1,
                    omega_r: w,
                    omega_r_min: uc.unit.turbine.omega_r_min,
                });
            }
            // the clipped reference keeps the command at or below the limit
            y[3 + 2 * i] = y[3 + 2 * i].min(uc.unit.turbine.p_lim);
        }

        for (i, uc) in units.iter().enumerate() {
            if let (Some(ta), None) = (flags.active[i], flags.rec_level[i]) {
                if t1 - ta >= uc.unit.plan.t_del - 1e-9 {
                    let level = uc.unit.plan.recovery_level(&uc.unit.turbine, uc.unit.v_w, y[2 + 2 * i])?;
                    flags.rec_level[i] = Some(level);
                }
            }
        }

        let f = f_b * (1.0 + y[0]);
        if trace.trigger_step.is_none() && flags.loss_on && (f - f_b).abs() > config.deadband {
            trace.trigger_step = Some(k + 1);
            for (i, uc) in units.iter().enumerate() {
                if uc.unit.scheduled {
                    flags.active[i] = Some(t1);
                }
            }
            trace.activation.clone_from(&flags.active);
        }
        record(&mut trace, &flags, t1, &y, &mut dy);
    }
    Ok(trace)
}

/// One point of the recovery-time trade-off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub t_rec: f64,
    pub f_nadir: f64,
    pub second_dip_nadir: Option<f64>,
    /// Time from the event until frequency and rotor speeds stay settled, s.
    pub time_to_settle: Option<f64>,
}

/// Runs the scenario once per recovery time, all else fixed.
pub fn recovery_sweep(config: &ScenarioConfig, t_rec_values: &[f64]) -> Result<Vec<SweepPoint>> {
    recovery_sweep_with(Exec::default(), config, t_rec_values)
}

pub fn recovery_sweep_with(exec: Exec, config: &ScenarioConfig, t_rec_values: &[f64]) -> Result<Vec<SweepPoint>> {
    if t_rec_values.len() < 2 {
        return Err(Error::Input("a recovery sweep needs at least two t_rec values".into()));
    }
    exec.try_map(t_rec_values, |&t_rec| {
        let mut c = config.clone();
        for u in c.fleet.iter_mut().filter(|u| u.scheduled) {
            u.plan.t_rec = t_rec;
        }
        let run = run_scenario(&c)?;
        Ok(SweepPoint {
            t_rec,
            f_nadir: run.metrics.f_nadir,
            second_dip_nadir: run.metrics.second_dip_nadir,
            time_to_settle: settle_time(&run.trace, &c, SETTLE_BAND_HZ, ROTOR_SETTLE_BAND),
        })
    })
}
