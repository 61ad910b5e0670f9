use crate::error::{Error, Result};

use super::{ScenarioConfig, SimTrace};

/// Length of the averaging window for the settling frequency, s.
pub const SETTLE_WINDOW: f64 = 5.0;
/// Frequency band around the settling value counted as settled, Hz.
pub const SETTLE_BAND_HZ: f64 = 0.005;
/// Rotor speed band around the pre-event speed counted as recovered, pu.
pub const ROTOR_SETTLE_BAND: f64 = 0.005;
const ROCOF_WINDOW: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// Lowest frequency from the event until the last unit finishes recovery.
    pub f_nadir: f64,
    pub t_nadir: f64,
    /// Lowest frequency before the first unit leaves over-production; the
    /// same as `f_nadir` when no unit was activated.
    pub f_first_nadir: f64,
    pub t_first_nadir: f64,
    /// Mean df/dt over the first half second after the event, Hz/s.
    pub rocof: f64,
    /// Mean frequency over the last five seconds; `None` when that window
    /// reaches back before the event.
    pub f_settle: Option<f64>,
    pub second_dip_nadir: Option<f64>,
    pub t_second_dip: Option<f64>,
    pub min_omega_r: Vec<f64>,
    /// Electrical energy above the pre-event output over each unit's
    /// over-production window, pu·s on the unit base.
    pub energy_delivered: Vec<f64>,
    pub t_trigger: Option<f64>,
}

/// Linear interpolation of `y(t)` on the trace grid, clamped at the ends.
fn sample_at(t: &[f64], y: &[f64], at: f64) -> f64 {
    let k = t.partition_point(|&s| s <= at);
    if k == 0 {
        return y[0];
    }
    if k >= t.len() {
        return y[t.len() - 1];
    }
    let (t0, t1) = (t[k - 1], t[k]);
    y[k - 1] + (y[k] - y[k - 1]) * (at - t0) / (t1 - t0)
}

fn argmin(y: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in y.iter().enumerate() {
        if v < y[best] {
            best = i;
        }
    }
    best
}

fn first_local_min(f: &[f64], start: usize) -> Option<usize> {
    (start.max(1)..f.len().saturating_sub(1)).find(|&i| f[i] < f[i - 1] && f[i] <= f[i + 1])
}

/// Index of the minimum that follows the first local recovery maximum after
/// the first local minimum, searching from `start`.
fn second_dip(f: &[f64], start: usize) -> Option<usize> {
    let first_min = first_local_min(f, start)?;
    let first_max =
        (first_min + 1..f.len().saturating_sub(1)).find(|&j| f[j] > f[j - 1] && f[j] >= f[j + 1])?;
    Some(first_max + argmin(&f[first_max..]))
}

pub fn compute_metrics(trace: &SimTrace, config: &ScenarioConfig) -> Result<Metrics> {
    if trace.is_empty() {
        return Err(Error::Input("trace is empty".into()));
    }
    let t = &trace.t;
    let f = &trace.f_hz;
    let t_event = config.event.t_event;
    let horizon = t[t.len() - 1];
    let start = t.partition_point(|&s| s < t_event);

    let recovery_end = config
        .fleet
        .iter()
        .zip(&trace.activation)
        .filter_map(|(u, a)| a.map(|ta| ta + u.plan.duration()))
        .fold(None, |m: Option<f64>, e| Some(m.map_or(e, |m| m.max(e))));
    let end = match recovery_end {
        Some(e) => t.partition_point(|&s| s <= e).max(start + 1),
        None => t.len(),
    }
    .min(t.len());
    let (f_nadir, t_nadir) = if start < end {
        let i = start + argmin(&f[start..end]);
        (f[i], t[i])
    } else {
        (f[t.len() - 1], horizon)
    };

    let support_end = config
        .fleet
        .iter()
        .zip(&trace.activation)
        .filter_map(|(u, a)| a.map(|ta| ta + u.plan.t_del))
        .fold(None, |m: Option<f64>, e| Some(m.map_or(e, |m| m.min(e))));
    let first = match support_end {
        Some(e) => {
            let stop = t.partition_point(|&s| s <= e).clamp(start + 1, t.len());
            start + argmin(&f[start..stop])
        }
        None if start < end => start + argmin(&f[start..end]),
        None => t.len() - 1,
    };

    let rocof_end = (t_event + ROCOF_WINDOW).min(horizon);
    let rocof = if rocof_end > t_event {
        (sample_at(t, f, rocof_end) - sample_at(t, f, t_event)) / (rocof_end - t_event)
    } else {
        0.0
    };

    let settle_from = horizon - SETTLE_WINDOW;
    let f_settle = (settle_from >= t_event).then(|| {
        let k = t.partition_point(|&s| s < settle_from - 1e-9);
        f[k..].iter().sum::<f64>() / (f.len() - k) as f64
    });

    let dip = second_dip(f, start);
    let min_omega_r = trace
        .omega_r
        .iter()
        .map(|w| w.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();

    let energy_delivered = config
        .fleet
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let Some(ta) = trace.activation.get(i).copied().flatten() else {
                return 0.0;
            };
            let lo = t.partition_point(|&s| s < ta - 1e-9);
            let hi = t.partition_point(|&s| s <= ta + u.plan.t_del + 1e-9);
            let p = &trace.p_e[i];
            let p0 = trace.p_0[i];
            (lo + 1..hi)
                .map(|k| 0.5 * (p[k] + p[k - 1] - 2.0 * p0) * (t[k] - t[k - 1]))
                .sum()
        })
        .collect();

    Ok(Metrics {
        f_nadir,
        t_nadir,
        f_first_nadir: f[first],
        t_first_nadir: t[first],
        rocof,
        f_settle,
        second_dip_nadir: dip.map(|i| f[i]),
        t_second_dip: dip.map(|i| t[i]),
        min_omega_r,
        energy_delivered,
        t_trigger: trace.trigger_step.map(|k| t[k]),
    })
}

/// Time from the event after which the frequency stays within `band_hz` of
/// its settling value and every rotor within `rotor_band` of its pre-event
/// speed. `None` when the trace never settles or is too short to tell.
pub fn settle_time(trace: &SimTrace, config: &ScenarioConfig, band_hz: f64, rotor_band: f64) -> Option<f64> {
    let metrics = compute_metrics(trace, config).ok()?;
    let f_ref = metrics.f_settle?;
    let t_event = config.event.t_event;
    let unsettled = |k: usize| {
        (trace.f_hz[k] - f_ref).abs() > band_hz
            || trace
                .omega_r
                .iter()
                .zip(&trace.omega_r0)
                .any(|(w, w0)| (w[k] - w0).abs() > rotor_band)
    };
    match (0..trace.len()).rev().find(|&k| unsettled(k)) {
        None => Some(0.0),
        Some(k) if k + 1 < trace.len() => Some((trace.t[k + 1] - t_event).max(0.0)),
        Some(_) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_clamps() {
        let t = [0.0, 1.0, 2.0];
        let y = [0.0, 10.0, 20.0];
        assert_eq!(sample_at(&t, &y, -1.0), 0.0);
        assert_eq!(sample_at(&t, &y, 0.5), 5.0);
        assert_eq!(sample_at(&t, &y, 3.0), 20.0);
    }

    #[test]
    fn monotone_recovery_has_no_second_dip() {
        let f = [60.0, 59.9, 59.8, 59.85, 59.9, 59.95];
        assert_eq!(second_dip(&f, 0), None);
    }

    #[test]
    fn second_dip_found_after_local_max() {
        let f = [60.0, 59.8, 59.9, 59.85, 59.82, 59.84, 59.86];
        assert_eq!(second_dip(&f, 0), Some(4));
    }
}
