//! Nadir sensitivities of individual units and the minimum set of support-mode
//! units that lifts the frequency nadir by a required amount.
//!
//! Uplifts add linearly across units: a unit committed at its maximum
//! injection contributes `delta_p_max · sensitivity` Hz.

use serde::{Deserialize, Serialize};

use crate::cosim::{run_scenario, ScenarioConfig};
use crate::error::{Error, Result};
use crate::sfr::{nadir_closed_form, SfrParams};

/// Fleets up to this size are searched exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// One row of the per-unit lookup used for scheduling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRecord {
    pub id: String,
    /// Wind speed, m/s.
    pub v_w: f64,
    /// Maximum injection on the system base, pu.
    pub delta_p_max: f64,
    /// Nadir sensitivity `∂Δf_min/∂ΔP_max`, Hz per pu.
    pub sensitivity: f64,
}

impl UnitRecord {
    pub fn uplift(&self) -> f64 {
        self.delta_p_max * self.sensitivity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exhaustive,
    /// Top-uplift prefix; used above [`EXHAUSTIVE_LIMIT`] units.
    Greedy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    /// Committed unit ids, in fleet order.
    pub committed: Vec<String>,
    pub predicted_uplift: f64,
    pub required_uplift: f64,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Commitment {
    Feasible(Schedule),
    /// Even the whole fleet falls short.
    Infeasible {
        achievable_uplift: f64,
        required_uplift: f64,
    },
}

impl Commitment {
    pub fn schedule(&self) -> Option<&Schedule> {
        match self {
            Commitment::Feasible(s) => Some(s),
            Commitment::Infeasible { .. } => None,
        }
    }
}

fn validate_fleet(units: &[UnitRecord], required_uplift: f64) -> Result<()> {
    if units.is_empty() {
        return Err(Error::Input("fleet is empty".into()));
    }
    if !(required_uplift >= 0.0) || !required_uplift.is_finite() {
        return Err(Error::Input(format!("required uplift must be >= 0, got {required_uplift}")));
    }
    for u in units {
        if !(u.delta_p_max >= 0.0 && u.delta_p_max.is_finite()) {
            return Err(Error::Input(format!("unit `{}`: delta_p_max must be >= 0", u.id)));
        }
        if !(u.sensitivity >= 0.0 && u.sensitivity.is_finite()) {
            return Err(Error::Input(format!("unit `{}`: sensitivity must be >= 0", u.id)));
        }
    }
    let mut ids: Vec<&str> = units.iter().map(|u| u.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Input(format!("duplicate unit id `{}`", w[0])));
    }
    Ok(())
}

/// Minimum-cardinality commitment whose summed uplift meets `required_uplift`.
///
/// Among subsets of the minimum size the one with the largest uplift wins;
/// remaining ties go to the lexicographically smallest sorted id list.
pub fn min_commitment(units: &[UnitRecord], required_uplift: f64) -> Result<Commitment> {
    validate_fleet(units, required_uplift)?;
    let uplifts: Vec<f64> = units.iter().map(UnitRecord::uplift).collect();
    let achievable = uplifts.iter().fold(0.0, |a, u| a + u);
    if achievable < required_uplift {
        return Ok(Commitment::Infeasible {
            achievable_uplift: achievable,
            required_uplift,
        });
    }
    let (picked, method) = if units.len() <= EXHAUSTIVE_LIMIT {
        (exhaustive(units, &uplifts, required_uplift), Method::Exhaustive)
    } else {
        (greedy(units, &uplifts, required_uplift), Method::Greedy)
    };
    let Some(mut picked) = picked else {
        // rounding in the subset sums can leave the full fleet marginally short
        return Ok(Commitment::Infeasible {
            achievable_uplift: achievable,
            required_uplift,
        });
    };
    picked.sort_unstable();
    Ok(Commitment::Feasible(Schedule {
        predicted_uplift: picked.iter().fold(0.0, |a, &i| a + uplifts[i]),
        committed: picked.iter().map(|&i| units[i].id.clone()).collect(),
        required_uplift,
        method,
    }))
}

fn sorted_ids<'a>(units: &'a [UnitRecord], idx: &[usize]) -> Vec<&'a str> {
    let mut ids: Vec<&str> = idx.iter().map(|&i| units[i].id.as_str()).collect();
    ids.sort_unstable();
    ids
}

fn exhaustive(units: &[UnitRecord], uplifts: &[f64], required: f64) -> Option<Vec<usize>> {
    let n = units.len();
    for k in 0..=n {
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            let sum: f64 = combo.iter().map(|&i| uplifts[i]).sum();
            if sum >= required {
                let better = match &best {
                    None => true,
                    Some((s, b)) => {
                        sum > *s || (sum == *s && sorted_ids(units, &combo) < sorted_ids(units, b))
                    }
                };
                if better {
                    best = Some((sum, combo.clone()));
                }
            }
            if !next_combination(&mut combo, n) {
                break;
            }
        }
        if let Some((_, idx)) = best {
            return Some(idx);
        }
    }
    None
}

/// Advances `combo` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let Some(i) = (0..k).rev().find(|&i| combo[i] != i + n - k) else {
        return false;
    };
    combo[i] += 1;
    for j in i + 1..k {
        combo[j] = combo[j - 1] + 1;
    }
    true
}

fn greedy(units: &[UnitRecord], uplifts: &[f64], required: f64) -> Option<Vec<usize>> {
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.sort_by(|&a, &b| {
        uplifts[b]
            .total_cmp(&uplifts[a])
            .then_with(|| units[a].id.cmp(&units[b].id))
    });
    let mut sum = 0.0;
    let mut picked = Vec::new();
    for i in order {
        if sum >= required {
            break;
        }
        sum += uplifts[i];
        picked.push(i);
    }
    (sum >= required).then_some(picked)
}

/// Nadir sensitivity of one fleet unit, Hz per pu of system-base injection.
///
/// Co-simulates the loss event with only `unit` in support mode, at surges of
/// zero and `2·probe` (pu of the unit rating), and takes the central
/// difference of the first nadir about `probe`.
pub fn unit_sensitivity(config: &ScenarioConfig, unit: usize, probe: f64) -> Result<f64> {
    let u = config
        .fleet
        .get(unit)
        .ok_or_else(|| Error::Input(format!("no fleet unit at index {unit}")))?;
    let ratio = u.mva / config.system_mva;
    let event = config.event.delta_p_loss;
    if !(probe > 0.0) {
        return Err(Error::Input(format!("probe must be positive, got {probe}")));
    }
    if probe * ratio >= event.abs() {
        return Err(Error::ProbeTooLarge {
            probe: probe * ratio,
            event,
        });
    }
    let nadir_with = |surge: f64| -> Result<f64> {
        let mut c = config.clone();
        for (i, f) in c.fleet.iter_mut().enumerate() {
            f.scheduled = i == unit;
        }
        c.fleet[unit].plan.delta_p = surge;
        Ok(run_scenario(&c)?.metrics.f_first_nadir)
    };
    let hi = nadir_with(2.0 * probe)?;
    let lo = nadir_with(0.0)?;
    Ok((hi - lo) / (2.0 * probe * ratio))
}

/// Sensitivity predicted by the closed-form nadir when the injection is
/// folded into the step deficit, Hz per pu.
pub fn closed_form_sensitivity(sfr: &SfrParams) -> Result<f64> {
    Ok(sfr.f_b - nadir_closed_form(sfr, 1.0)?.f_min)
}
