//! Aggregated DFIG wind turbine: power-coefficient aerodynamics, MPPT power
//! reference, one-mass drive train and the converter power-tracking lag.
//!
//! Powers are per-unit on the turbine rating (`mva_base`); rotor speed is
//! per-unit of `omega_s`. The drive train is integrated in torque form,
//! `2 H ω dω/dt = P_m − P_e`, so that `H·ω²` is exactly the stored kinetic
//! energy in per-unit seconds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{rk4_step, Rk4Workspace};

/// Betz limit, 16/27.
pub const BETZ_LIMIT: f64 = 16.0 / 27.0;

/// Analytic power-coefficient surface
/// `C_p = c1 (c2/λi − c3 β − c4) e^(−c5/λi) + c6 λ` with
/// `1/λi = 1/(λ + 0.08 β) − 0.035/(β³ + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpSurface {
    pub c: [f64; 6],
}

impl Default for CpSurface {
    fn default() -> Self {
        Self {
            c: [0.5176, 116.0, 0.4, 5.0, 21.0, 0.0068],
        }
    }
}

/// First and second λ-derivatives of `C_p` at an operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpDerivatives {
    pub d1: f64,
    pub d2: f64,
}

impl CpSurface {
    fn inv_lambda_i(lambda: f64, beta: f64) -> f64 {
        1.0 / (lambda + 0.08 * beta) - 0.035 / (beta.powi(3) + 1.0)
    }

    fn check(lambda: f64, beta: f64) -> Result<()> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("tip-speed ratio must be positive, got {lambda}")));
        }
        if !(beta >= 0.0) {
            return Err(Error::Domain(format!("pitch angle must be non-negative, got {beta}")));
        }
        Ok(())
    }

    /// Unclamped surface value; may be negative in deep stall or overspeed.
    pub fn raw(&self, lambda: f64, beta: f64) -> f64 {
        let [c1, c2, c3, c4, c5, c6] = self.c;
        let u = Self::inv_lambda_i(lambda, beta);
        c1 * (c2 * u - c3 * beta - c4) * (-c5 * u).exp() + c6 * lambda
    }

    /// Power coefficient clamped at zero from below.
    pub fn value(&self, lambda: f64, beta: f64) -> Result<f64> {
        Self::check(lambda, beta)?;
        Ok(self.raw(lambda, beta).max(0.0))
    }

    /// Analytic `∂C_p/∂λ` and `∂²C_p/∂λ²` of the unclamped surface.
    pub fn derivatives(&self, lambda: f64, beta: f64) -> Result<CpDerivatives> {
        Self::check(lambda, beta)?;
        let [c1, c2, c3, c4, c5, c6] = self.c;
        let u = Self::inv_lambda_i(lambda, beta);
        let s = lambda + 0.08 * beta;
        let du = -1.0 / (s * s);
        let d2u = 2.0 / (s * s * s);
        let e = (-c5 * u).exp();
        let inner = c2 * u - c3 * beta - c4;
        let g1 = c1 * e * (c2 - c5 * inner);
        let g2 = c1 * e * (c5 * c5 * inner - 2.0 * c5 * c2);
        Ok(CpDerivatives {
            d1: g1 * du + c6,
            d2: g2 * du * du + g1 * d2u,
        })
    }

    /// Tip-speed ratio maximising `C_p(·, β)`, located as the root of `∂C_p/∂λ`.
    pub fn optimal_lambda(&self, beta: f64) -> Result<f64> {
        let slope = |l: f64| self.derivatives(l, beta).map(|d| d.d1);
        let (mut lo, mut hi) = (1.0, 20.0);
        if !(slope(lo)? > 0.0 && slope(hi)? < 0.0) {
            return Err(Error::Domain("C_p surface has no interior maximum in [1, 20]".into()));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mppt,
    Support,
    Recovery,
}

/// Aerodynamic, drive-train and converter constants of one aggregated DFIG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurbineParams {
    /// Air density, kg/m³.
    pub rho: f64,
    /// Rotor radius, m.
    pub radius: f64,
    /// Swept area, m².
    pub swept_area: f64,
    pub cp: CpSurface,
    pub lambda_opt: f64,
    /// MPPT gain, pu power per pu speed cubed.
    pub k_opt: f64,
    /// Turbine inertia constant, s.
    pub h_t: f64,
    /// Rotor base speed, rad/s.
    pub omega_s: f64,
    pub omega_r_max: f64,
    pub omega_r_min: f64,
    pub p_max: f64,
    /// Energy efficiency factor applied to the aerodynamic energy variation.
    pub eta: f64,
    /// Converter filter time constant, s.
    pub t_g: f64,
    /// Converter overload limit, pu.
    pub p_lim: f64,
    /// Rating of one turbine, MVA.
    pub mva_base: f64,
    pub v_cut_in: f64,
    pub v_cut_out: f64,
}

impl Default for TurbineParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl TurbineParams {
    /// 2 MW, 70 m rotor reference machine. Rated wind is about 12.1 m/s, where
    /// the MPPT curve reaches `omega_r_max` at `p_max`.
    pub fn reference() -> Self {
        let cp = CpSurface::default();
        let lambda_opt = cp.optimal_lambda(0.0).expect("default C_p surface has a maximum");
        let radius = 35.0;
        let mut p = Self {
            rho: 1.225,
            radius,
            swept_area: std::f64::consts::PI * radius * radius,
            cp,
            lambda_opt,
            k_opt: 0.0,
            h_t: 4.5,
            omega_s: 2.24,
            omega_r_max: 1.25,
            omega_r_min: 0.7,
            p_max: 1.0,
            eta: 0.95,
            t_g: 0.02,
            p_lim: 1.2,
            mva_base: 2.0,
            v_cut_in: 4.0,
            v_cut_out: 25.0,
        };
        p.k_opt = p.k_opt_from_aero();
        p
    }

    /// Aerodynamic power per unit `C_p` per (m/s)³, in pu of `mva_base`.
    pub fn aero_gain(&self) -> f64 {
        0.5 * self.rho * self.swept_area / (self.mva_base * 1e6)
    }

    /// MPPT gain implied by the aerodynamic constants at `(lambda_opt, β = 0)`.
    pub fn k_opt_from_aero(&self) -> f64 {
        let cp_opt = self.cp.raw(self.lambda_opt, 0.0);
        self.aero_gain() * (self.radius * self.omega_s / self.lambda_opt).powi(3) * cp_opt
    }

    /// Rotor moment of inertia (kg·m²) equivalent to `h_t`.
    pub fn inertia(&self) -> f64 {
        2.0 * self.h_t * self.mva_base * 1e6 / (self.omega_s * self.omega_s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        for (name, v) in [
            ("rho", self.rho),
            ("radius", self.radius),
            ("swept_area", self.swept_area),
            ("lambda_opt", self.lambda_opt),
            ("k_opt", self.k_opt),
            ("h_t", self.h_t),
            ("omega_s", self.omega_s),
            ("p_max", self.p_max),
            ("t_g", self.t_g),
            ("mva_base", self.mva_base),
            ("v_cut_in", self.v_cut_in),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("turbine.{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.omega_r_min > 0.0 && self.omega_r_min < self.omega_r_max) {
            return bad(format!(
                "turbine: need 0 < omega_r_min < omega_r_max, got {} and {}",
                self.omega_r_min, self.omega_r_max
            ));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad(format!("turbine.eta must lie in (0, 1], got {}", self.eta));
        }
        if !(self.p_lim >= self.p_max) {
            return bad(format!("turbine.p_lim ({}) must be >= p_max ({})", self.p_lim, self.p_max));
        }
        if !(self.v_cut_out > self.v_cut_in) {
            return bad("turbine.v_cut_out must exceed v_cut_in".into());
        }
        let k = self.k_opt_from_aero();
        if ((self.k_opt - k) / k).abs() > 1e-9 {
            return bad(format!(
                "turbine.k_opt = {} is inconsistent with the aerodynamic constants (expected {k})",
                self.k_opt
            ));
        }
        Ok(())
    }

    pub fn tip_speed_ratio(&self, omega_r: f64, v_w: f64) -> Result<f64> {
        if !(v_w > 0.0) {
            return Err(Error::Domain(format!("wind speed must be positive, got {v_w}")));
        }
        if !(omega_r > 0.0) {
            return Err(Error::Domain(format!("rotor speed must be positive, got {omega_r}")));
        }
        Ok(omega_r * self.omega_s * self.radius / v_w)
    }

    /// Aerodynamic power in pu of `mva_base`.
    pub fn mechanical_power(&self, v_w: f64, omega_r: f64, beta: f64) -> Result<f64> {
        let lambda = self.tip_speed_ratio(omega_r, v_w)?;
        let cp = self.cp.value(lambda, beta)?;
        Ok(self.aero_gain() * cp * v_w.powi(3))
    }

    /// Piecewise MPPT power reference.
    pub fn mppt_reference(&self, omega_r: f64) -> f64 {
        if omega_r < self.omega_r_max {
            self.k_opt * omega_r.powi(3)
        } else {
            self.p_max
        }
    }

    /// Rotor acceleration `dω/dt` (pu/s) for given speed, electrical output and wind.
    pub fn rotor_acceleration(&self, omega_r: f64, p_e: f64, v_w: f64) -> Result<f64> {
        let p_m = self.mechanical_power(v_w, omega_r, 0.0)?;
        Ok((p_m - p_e) / (2.0 * self.h_t * omega_r))
    }

    /// Rate of the converter power command relaxing toward the clipped reference.
    pub fn command_rate(&self, p_cmd: f64, p_ref_total: f64) -> f64 {
        (p_ref_total.min(self.p_lim) - p_cmd) / self.t_g
    }

    /// MPPT steady state at `v_w`: the rotor speed where aerodynamic power equals
    /// the MPPT reference, found by bisection.
    pub fn equilibrium(&self, v_w: f64) -> Result<OperatingPoint> {
        if !(v_w >= self.v_cut_in && v_w <= self.v_cut_out) {
            return Err(Error::Domain(format!(
                "wind speed {v_w} m/s outside the operating range [{}, {}]",
                self.v_cut_in, self.v_cut_out
            )));
        }
        let to_omega = |lambda: f64| lambda * v_w / (self.omega_s * self.radius);
        let residual = |w: f64| -> Result<f64> {
            Ok(self.mechanical_power(v_w, w, 0.0)? - self.mppt_reference(w))
        };
        let (mut lo, mut hi) = (to_omega(0.5 * self.lambda_opt), to_omega(2.0 * self.lambda_opt));
        if !(residual(lo)? > 0.0 && residual(hi)? < 0.0) {
            return Err(Error::Domain(format!("no MPPT equilibrium bracketed at {v_w} m/s")));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if residual(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        let omega_r = 0.5 * (lo + hi);
        Ok(OperatingPoint {
            v_w,
            omega_r,
            p_e: self.mppt_reference(omega_r),
            lambda: self.tip_speed_ratio(omega_r, v_w)?,
        })
    }

    /// Advances one turbine by `dt` with the total power reference held over the step.
    pub fn step(&self, state: &TurbineState, p_ref_total: f64, v_w: f64, dt: f64) -> Result<TurbineState> {
        if !(dt > 0.0 && dt <= self.t_g / 4.0) {
            return Err(Error::Config(format!(
                "turbine step {dt} s must lie in (0, t_g/4 = {} s]",
                self.t_g / 4.0
            )));
        }
        let mut y = [state.omega_r, state.p_cmd];
        let mut ws = Rk4Workspace::new(2);
        let mut fault = None;
        rk4_step(&mut y, 0.0, dt, &mut ws, |_, y, dy| {
            dy[0] = self.rotor_acceleration(y[0], y[1], v_w).unwrap_or_else(|e| {
                fault.get_or_insert(e);
                0.0
            });
            dy[1] = self.command_rate(y[1], p_ref_total);
        });
        if let Some(e) = fault {
            return Err(Error::IntegrationBlowup(format!("turbine derivative failed: {e}")));
        }
        let [omega_r, p_cmd] = y;
        if !(omega_r > 0.0) || !omega_r.is_finite() {
            return Err(Error::IntegrationBlowup(format!("rotor speed reached {omega_r} pu")));
        }
        let p_cmd = p_cmd.min(self.p_lim);
        Ok(TurbineState {
            omega_r,
            p_e: p_cmd,
            p_m: self.mechanical_power(v_w, omega_r, 0.0)?,
            p_cmd,
            mode: state.mode,
        })
    }
}

/// MPPT steady state of a turbine at a given wind speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub v_w: f64,
    pub omega_r: f64,
    /// Electrical output `P_0`, pu.
    pub p_e: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbineState {
    pub omega_r: f64,
    pub p_e: f64,
    pub p_m: f64,
    pub p_cmd: f64,
    pub mode: Mode,
}

impl TurbineState {
    pub fn at_equilibrium(params: &TurbineParams, v_w: f64) -> Result<Self> {
        let op = params.equilibrium(v_w)?;
        Ok(Self {
            omega_r: op.omega_r,
            p_e: op.p_e,
            p_m: params.mechanical_power(v_w, op.omega_r, 0.0)?,
            p_cmd: op.p_e,
            mode: Mode::Mppt,
        })
    }
}
