//! Maximum safe power surge of a DFIG from an energy balance over the
//! over-production window, converter-limit clipping, the `ΔP_max(V_w)` lookup
//! table, and the time-domain surge reference.
//!
//! Energies are per-unit seconds on the turbine rating. Over a window of
//! length `T` the rotor is assumed to decelerate at a constant rate by `Δω`,
//! and the aerodynamic coefficient change is expanded to second order in time:
//!
//! ```text
//! ΔE_aero = −½ K (Rω_s) V² C_p' T Δω + ⅙ K (Rω_s)² V C_p'' T Δω²
//! ΔE_kic  = H ((ω0 − Δω)² − ω0²)
//! ΔE_loss = (1 − η) ΔE_aero
//! ΔE_e    = ΔE_aero − ΔE_loss − ΔE_kic
//! ```
//!
//! which makes the delivered energy a quadratic `a1 Δω + a2 Δω²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::turbine::{CpDerivatives, Mode, TurbineParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyFormula {
    /// Term-by-term energy balance under the constant-deceleration assumption.
    #[default]
    Balance,
    /// The closed-form coefficients as printed in the source derivation
    /// (`η/12`, `η/36`, `η/216` factors), kept for comparison only.
    Printed,
}

/// Over-production plateau followed by a linear ramp back to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurgePlan {
    /// Surge magnitude, pu of the unit rating.
    pub delta_p: f64,
    pub t_del: f64,
    pub t_rec: f64,
    /// Frequency deviation that arms the surge, Hz.
    pub trigger_deadband: f64,
}

impl SurgePlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_p >= 0.0) || !self.delta_p.is_finite() {
            return Err(Error::Config(format!("surge delta_p must be >= 0, got {}", self.delta_p)));
        }
        if !(self.t_del > 0.0) {
            return Err(Error::Config(format!("surge t_del must be > 0, got {}", self.t_del)));
        }
        if !(self.t_rec >= 0.0) {
            return Err(Error::Config(format!("surge t_rec must be >= 0, got {}", self.t_rec)));
        }
        if !(self.trigger_deadband >= 0.0) {
            return Err(Error::Config("surge deadband must be >= 0".into()));
        }
        Ok(())
    }

    /// Supplementary power reference `ΔP(t)` added on top of the MPPT reference.
    pub fn reference(&self, t_since_trigger: f64) -> f64 {
        self.reference_from(t_since_trigger, self.delta_p)
    }

    /// Like [`SurgePlan::reference`], with the recovery ramp starting from
    /// `level` instead of `delta_p`.
    pub fn reference_from(&self, t_since_trigger: f64, level: f64) -> f64 {
        let t = t_since_trigger;
        if t < self.t_del {
            self.delta_p
        } else if t < self.t_del + self.t_rec {
            level * (1.0 - (t - self.t_del) / self.t_rec)
        } else {
            0.0
        }
    }

    /// Largest ramp start that does not decelerate the rotor at the end of
    /// the over-production window: the gap between aerodynamic power and the
    /// MPPT reference, clipped to `[0, delta_p]`.
    pub fn recovery_level(&self, params: &TurbineParams, v_w: f64, omega_r: f64) -> Result<f64> {
        let gap = params.mechanical_power(v_w, omega_r, 0.0)? - params.mppt_reference(omega_r);
        Ok(gap.clamp(0.0, self.delta_p))
    }

    pub fn mode_at(&self, t_since_trigger: f64) -> Mode {
        if t_since_trigger < self.t_del {
            Mode::Support
        } else if t_since_trigger < self.t_del + self.t_rec {
            Mode::Recovery
        } else {
            Mode::Mppt
        }
    }

    pub fn duration(&self) -> f64 {
        self.t_del + self.t_rec
    }
}

/// Signed energy-balance terms, pu·s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTerms {
    pub aero: f64,
    /// Change of stored rotor energy (negative when the rotor slows).
    pub kinetic: f64,
    pub loss: f64,
    /// Electric energy variation closing the balance.
    pub electric: f64,
}

impl EnergyTerms {
    /// `ΔE_aero − ΔE_e − ΔE_loss − ΔE_kic`.
    pub fn residual(&self) -> f64 {
        self.aero - self.electric - self.loss - self.kinetic
    }

    pub fn largest(&self) -> f64 {
        [self.aero, self.kinetic, self.loss, self.electric]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyEstimate {
    /// Deliverable electric energy, clamped at zero, pu·s.
    pub delta_e_del: f64,
    /// Constant surge that delivers `delta_e_del` over `t_del`, pu.
    pub delta_p_del: f64,
    pub delta_omega_r: f64,
    pub t_del: f64,
    pub terms: EnergyTerms,
    /// `a1` of `ΔE_e = a1 Δω + a2 Δω²`.
    pub linear_coeff: f64,
    pub quadratic_coeff: f64,
    /// False when the balance yields negative energy: the unit cannot support here.
    pub capable: bool,
}

impl EnergyEstimate {
    pub fn quadratic_form(&self, delta_omega_r: f64) -> f64 {
        self.linear_coeff * delta_omega_r + self.quadratic_coeff * delta_omega_r * delta_omega_r
    }
}

/// `∂C_p/∂λ` and `∂²C_p/∂λ²` at the operating point (β = 0).
pub fn aero_sensitivities(params: &TurbineParams, v_w: f64, omega_r: f64) -> Result<CpDerivatives> {
    let lambda = params.tip_speed_ratio(omega_r, v_w)?;
    params.cp.derivatives(lambda, 0.0)
}

fn check_excursion(params: &TurbineParams, omega_r0: f64, delta_omega_r: f64, t_del: f64) -> Result<()> {
    if !(t_del > 0.0) {
        return Err(Error::Domain(format!("delivery time must be > 0, got {t_del}")));
    }
    let margin = omega_r0 - params.omega_r_min;
    if !(delta_omega_r >= 0.0) || delta_omega_r > margin {
        return Err(Error::ExcursionTooLarge {
            requested: delta_omega_r,
            margin,
        });
    }
    Ok(())
}

/// Energy deliverable while the rotor slows by `delta_omega_r` over `t_del`.
pub fn delivered_energy(
    params: &TurbineParams,
    v_w: f64,
    omega_r0: f64,
    delta_omega_r: f64,
    t_del: f64,
) -> Result<EnergyEstimate> {
    check_excursion(params, omega_r0, delta_omega_r, t_del)?;
    let d = aero_sensitivities(params, v_w, omega_r0)?;
    let k = params.aero_gain();
    let tip = params.radius * params.omega_s;
    let (dw, t, h, eta) = (delta_omega_r, t_del, params.h_t, params.eta);

    let aero_lin = -0.5 * k * tip * v_w * v_w * d.d1 * t;
    let aero_quad = k * tip * tip * v_w * d.d2 * t / 6.0;
    let aero = aero_lin * dw + aero_quad * dw * dw;
    let w1 = omega_r0 - dw;
    let kinetic = h * (w1 * w1 - omega_r0 * omega_r0);
    let loss = (1.0 - eta) * aero;
    let electric = aero - loss - kinetic;

    let linear_coeff = eta * aero_lin + 2.0 * h * omega_r0;
    let quadratic_coeff = eta * aero_quad - h;
    let capable = electric >= 0.0;
    let delta_e_del = electric.max(0.0);
    Ok(EnergyEstimate {
        delta_e_del,
        delta_p_del: delta_e_del / t,
        delta_omega_r: dw,
        t_del: t,
        terms: EnergyTerms {
            aero,
            kinetic,
            loss,
            electric,
        },
        linear_coeff,
        quadratic_coeff,
        capable,
    })
}

/// Delivered energy from the printed closed-form coefficients, pu·s.
///
/// Evaluated literally in SI units with `J = 2 H S / ω_s²`, the signed
/// excursion `ω2 − ω1 = −Δω` in rad/s, and the result divided by the rating.
pub fn printed_delivered_energy(
    params: &TurbineParams,
    v_w: f64,
    omega_r0: f64,
    delta_omega_r: f64,
    t_del: f64,
) -> Result<f64> {
    check_excursion(params, omega_r0, delta_omega_r, t_del)?;
    let d = aero_sensitivities(params, v_w, omega_r0)?;
    let big_k = 0.5 * params.rho * params.swept_area;
    let j = params.inertia();
    let ws = params.omega_s;
    let eta = params.eta;
    let w0 = omega_r0 * ws;
    let dw = -delta_omega_r * ws;
    let a1 = eta / 12.0 * big_k * v_w * v_w * d.d1 - j * w0 / (ws * ws) * t_del;
    let a2 = eta / 36.0 * big_k * v_w * v_w * d.d1 + eta / 216.0 * big_k * v_w * d.d2
        - j / (2.0 * ws * ws) * t_del;
    Ok((a1 * dw + a2 * dw * dw) / (params.mva_base * 1e6))
}

/// Maximum surge at one wind speed and its two candidate bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Injection {
    pub v_w: f64,
    /// MPPT equilibrium output `P_0`, pu.
    pub p_0: f64,
    pub omega_r0: f64,
    /// Energy-limited surge, pu.
    pub delta_p_del: f64,
    /// Converter headroom `P_lim − P_0`, pu.
    pub headroom: f64,
    pub delta_p_max: f64,
    /// Deliverable energy used for the energy branch, pu·s.
    pub delta_e_del: f64,
}

/// Largest surge at `v_w`: the smaller of the converter headroom and the
/// energy-limited surge, the latter taken at the rotor excursion within the
/// floor margin that delivers the most energy.
pub fn max_injection(params: &TurbineParams, v_w: f64, t_del: f64) -> Result<Injection> {
    max_injection_with(params, v_w, t_del, EnergyFormula::Balance)
}

pub fn max_injection_with(
    params: &TurbineParams,
    v_w: f64,
    t_del: f64,
    formula: EnergyFormula,
) -> Result<Injection> {
    let op = params.equilibrium(v_w)?;
    let margin = (op.omega_r - params.omega_r_min).max(0.0);
    let delta_e_del = match formula {
        // already at or below the floor: nothing to give
        _ if margin == 0.0 => 0.0,
        EnergyFormula::Balance => {
            let full = delivered_energy(params, v_w, op.omega_r, margin, t_del)?;
            // past the vertex of the concave quadratic, aerodynamic losses
            // outgrow the kinetic energy released
            let vertex = -full.linear_coeff / (2.0 * full.quadratic_coeff);
            if full.quadratic_coeff < 0.0 && vertex > 0.0 && vertex < margin {
                delivered_energy(params, v_w, op.omega_r, vertex, t_del)?.delta_e_del
            } else {
                full.delta_e_del
            }
        }
        EnergyFormula::Printed => {
            printed_delivered_energy(params, v_w, op.omega_r, margin, t_del)?.max(0.0)
        }
    };
    let delta_p_del = delta_e_del / t_del;
    let headroom = params.p_lim - op.p_e;
    Ok(Injection {
        v_w,
        p_0: op.p_e,
        omega_r0: op.omega_r,
        delta_p_del,
        headroom,
        delta_p_max: delta_p_del.min(headroom).max(0.0),
        delta_e_del,
    })
}

/// One lookup-table row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub v_w: f64,
    pub p_0: f64,
    pub delta_p_max: f64,
}

pub fn check_wind_grid(wind_speeds: &[f64]) -> Result<()> {
    if wind_speeds.is_empty() {
        return Err(Error::Input("wind speed grid is empty".into()));
    }
    if let Some(w) = wind_speeds.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::Input(format!(
            "wind speeds must be strictly increasing ({} followed by {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

pub fn build_table(wind_speeds: &[f64], t_del: f64, params: &TurbineParams) -> Result<Vec<TableRow>> {
    build_table_with(Exec::default(), wind_speeds, t_del, params, EnergyFormula::Balance)
}

pub fn build_table_with(
    exec: Exec,
    wind_speeds: &[f64],
    t_del: f64,
    params: &TurbineParams,
    formula: EnergyFormula,
) -> Result<Vec<TableRow>> {
    check_wind_grid(wind_speeds)?;
    exec.try_map(wind_speeds, |&v| {
        let inj = max_injection_with(params, v, t_del, formula)?;
        Ok(TableRow {
            v_w: v,
            p_0: inj.p_0,
            delta_p_max: inj.delta_p_max,
        })
    })
}
