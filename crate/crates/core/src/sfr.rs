//! Low-order system frequency response model: aggregate inertia and load
//! damping driven by a reheat-turbine governor with droop.
//!
//! ```text
//! 2H dΔω/dt = ΔP_m − ΔP_d − D Δω
//! ΔP_m      = −(K_m + F_H T_R s) / (R (1 + T_R s)) · Δω
//! ```
//!
//! `Δω` is the per-unit frequency deviation and `ΔP_d` the net power deficit
//! on the system base (positive for a generation loss). For a step deficit the
//! response has the closed form
//! `Δf(t) = −f_b R ΔP / (K_m + D R) · [1 + α e^(−ξ ω_n t) sin(ω_d t + φ)]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{rk4_step, Rk4Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfrParams {
    /// Base frequency, Hz.
    pub f_b: f64,
    /// Aggregate inertia constant, s.
    pub h: f64,
    /// Load damping, pu/pu.
    pub d: f64,
    /// Governor droop, pu.
    pub r_droop: f64,
    /// Mechanical power gain factor.
    pub k_m: f64,
    /// High-pressure turbine power fraction.
    pub f_h: f64,
    /// Reheat time constant, s.
    pub t_r: f64,
}

impl Default for SfrParams {
    /// Synchronous-only system; see [`SfrParams::with_wind_penetration`].
    fn default() -> Self {
        Self {
            f_b: 60.0,
            h: 5.0,
            d: 1.0,
            r_droop: 0.05,
            k_m: 0.95,
            f_h: 0.15,
            t_r: 8.0,
        }
    }
}

/// Constants derived from [`SfrParams`] that shape the closed-form response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfrDerived {
    pub omega_n: f64,
    pub xi: f64,
    pub alpha: f64,
    /// Damped oscillation frequency `ω_n √(1 − ξ²)`.
    pub omega_d: f64,
    pub phi: f64,
    /// Time of the first frequency minimum after a step deficit.
    pub t_n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nadir {
    pub f_min: f64,
    pub t_n: f64,
}

impl SfrParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("f_b", self.f_b),
            ("h", self.h),
            ("r_droop", self.r_droop),
            ("t_r", self.t_r),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("sfr.{name} must be positive, got {v}")));
            }
        }
        if !(self.d >= 0.0 && self.k_m >= 0.0) {
            return Err(Error::Config("sfr.d and sfr.k_m must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.f_h) {
            return Err(Error::Config(format!("sfr.f_h must lie in [0, 1], got {}", self.f_h)));
        }
        if !(self.d * self.r_droop + self.k_m > 0.0) {
            return Err(Error::Config("sfr: D·R + K_m must be positive".into()));
        }
        Ok(())
    }

    /// Replaces a fraction of synchronous capacity by converter-interfaced
    /// wind, scaling the inertia and the governor gain by what remains.
    pub fn with_wind_penetration(&self, fraction: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::Config(format!("wind penetration must lie in [0, 1), got {fraction}")));
        }
        let sync = 1.0 - fraction;
        Ok(Self {
            h: self.h * sync,
            k_m: self.k_m * sync,
            ..*self
        })
    }

    /// Static gain `R / (K_m + D R)` from deficit to per-unit frequency drop.
    pub fn static_gain(&self) -> f64 {
        self.r_droop / (self.k_m + self.d * self.r_droop)
    }

    pub fn derived(&self) -> Result<SfrDerived> {
        derived_constants(self)
    }
}

pub fn derived_constants(p: &SfrParams) -> Result<SfrDerived> {
    p.validate()?;
    let (h, r, d, km, fh, tr) = (p.h, p.r_droop, p.d, p.k_m, p.f_h, p.t_r);
    let dr_km = d * r + km;
    let omega_n = (dr_km / (2.0 * h * r * tr)).sqrt();
    let xi = (2.0 * h * r + (d * r + fh) * tr) / (2.0 * dr_km) * omega_n;
    if !(xi > 0.0) || xi >= 1.0 {
        return Err(Error::UnsupportedRegime { xi });
    }
    let root = (1.0 - xi * xi).sqrt();
    let alpha = ((1.0 - 2.0 * tr * xi * omega_n + tr * tr * omega_n * omega_n) / (1.0 - xi * xi)).sqrt();
    let omega_d = omega_n * root;
    // Quadrant-aware sum of the two arctangents, shifted by π so that the
    // response starts from zero: sin φ = −1/α.
    let phi = (omega_d * tr).atan2(1.0 - xi * omega_n * tr) + (root / xi).atan() - std::f64::consts::PI;
    let t_n = (omega_d * tr).atan2(xi * omega_n * tr - 1.0) / omega_d;
    Ok(SfrDerived {
        omega_n,
        xi,
        alpha,
        omega_d,
        phi,
        t_n,
    })
}

/// Closed-form frequency (Hz) at time `t` after a step deficit `delta_p`.
pub fn frequency_at(p: &SfrParams, c: &SfrDerived, delta_p: f64, t: f64) -> f64 {
    let shape = 1.0 + c.alpha * (-c.xi * c.omega_n * t).exp() * (c.omega_d * t + c.phi).sin();
    p.f_b * (1.0 - p.static_gain() * shape * delta_p)
}

pub fn nadir_closed_form(p: &SfrParams, delta_p: f64) -> Result<Nadir> {
    let c = derived_constants(p)?;
    Ok(Nadir {
        f_min: frequency_at(p, &c, delta_p, c.t_n),
        t_n: c.t_n,
    })
}

pub fn settling_frequency(p: &SfrParams, delta_p: f64) -> f64 {
    p.f_b * (1.0 - p.static_gain() * delta_p)
}

/// Dynamic state: frequency deviation (pu) and the reheat-lag governor state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SfrState {
    pub dw: f64,
    pub x_gov: f64,
}

impl SfrState {
    pub fn frequency(&self, p: &SfrParams) -> f64 {
        p.f_b * (1.0 + self.dw)
    }
}

/// Time derivatives `(dΔω/dt, dx/dt)` under a net deficit `imbalance` (pu).
#[inline]
pub fn derivatives(p: &SfrParams, dw: f64, x_gov: f64, imbalance: f64) -> (f64, f64) {
    let p_mech = x_gov - p.f_h * dw / p.r_droop;
    let ddw = (p_mech - imbalance - p.d * dw) / (2.0 * p.h);
    let dx = (-x_gov - (p.k_m - p.f_h) * dw / p.r_droop) / p.t_r;
    (ddw, dx)
}

pub fn check_step(p: &SfrParams, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt <= p.t_r / 100.0) {
        return Err(Error::Config(format!(
            "SFR step {dt} s must lie in (0, t_r/100 = {} s]",
            p.t_r / 100.0
        )));
    }
    Ok(())
}

/// Integrates the model with RK4. `imbalance[k]` is held over
/// `[k·dt, (k+1)·dt)`; the result holds the frequency (Hz) at `0, dt, …, n·dt`.
pub fn simulate(p: &SfrParams, imbalance: &[f64], dt: f64) -> Result<Vec<f64>> {
    p.validate()?;
    check_step(p, dt)?;
    if let Some(k) = imbalance.iter().position(|v| !v.is_finite()) {
        return Err(Error::Input(format!("imbalance sample {k} is not finite")));
    }
    let mut y = [0.0, 0.0];
    let mut ws = Rk4Workspace::new(2);
    let mut out = Vec::with_capacity(imbalance.len() + 1);
    out.push(p.f_b * (1.0 + y[0]));
    for (k, &dp) in imbalance.iter().enumerate() {
        rk4_step(&mut y, k as f64 * dt, dt, &mut ws, |_, y, dy| {
            let (a, b) = derivatives(p, y[0], y[1], dp);
            dy[0] = a;
            dy[1] = b;
        });
        out.push(p.f_b * (1.0 + y[0]));
    }
    Ok(out)
}

/// Frequency trace for a constant deficit applied at `t = 0`.
pub fn step_response(p: &SfrParams, delta_p: f64, dt: f64, horizon: f64) -> Result<Vec<f64>> {
    let n = (horizon / dt).round() as usize;
    simulate(p, &vec![delta_p; n], dt)
}
