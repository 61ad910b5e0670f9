//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero on any failure.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ffr_core::config::Config;
use ffr_core::cosim::{recovery_sweep, run_scenario, ScenarioConfig};
use ffr_core::dispatch::{min_commitment, Commitment, UnitRecord};
use ffr_core::io::read_fleet;
use ffr_core::sfr::{nadir_closed_form, step_response, SfrParams};
use ffr_core::surge::{delivered_energy, max_injection};
use ffr_core::turbine::TurbineParams;
use ffr_core::{pipeline, Exec};

const NADIR_TOL_HZ: f64 = 1e-3;
const R2_MIN: f64 = 0.999;
const CLOSURE_TOL: f64 = 1e-9;
const DT_HALVING_TOL_HZ: f64 = 1e-5;
const FD_REL_TOL: f64 = 1e-6;
const RANDOM_FLEETS: usize = 200;
const SEED: u64 = 20_240_917;

type Outcome = Result<String, String>;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn grid() -> SfrParams {
    SfrParams::default().with_wind_penetration(0.5).unwrap()
}

fn sim_nadir(p: &SfrParams, dp: f64, dt: f64) -> f64 {
    step_response(p, dp, dt, 40.0)
        .unwrap()
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Default scenario with the pipeline's schedule applied.
fn scheduled_default(horizon: f64) -> Result<ScenarioConfig, String> {
    let cfg = Config::default();
    let scenario = cfg.scenario().map_err(|e| e.to_string())?;
    let plan = pipeline::plan(Exec::default(), &scenario, cfg.dispatch.probe).map_err(|e| e.to_string())?;
    let schedule = plan.commitment.schedule().ok_or("default fleet cannot meet the threshold")?;
    let mut s = pipeline::apply(&scenario, schedule);
    s.horizon = horizon;
    Ok(s)
}

/// Smallest feasible cardinality and the best uplift at that size.
fn brute_force(units: &[UnitRecord], required: f64) -> Option<(usize, f64, u32)> {
    let n = units.len();
    let mut best: Option<(usize, f64, u32)> = None;
    for mask in 0u32..(1 << n) {
        let k = mask.count_ones() as usize;
        let sum: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| units[i].uplift()).sum();
        if sum >= required && best.is_none_or(|(bk, bs, _)| k < bk || (k == bk && sum > bs)) {
            best = Some((k, sum, mask));
        }
    }
    best
}

fn within(limit: Duration, start: Instant, detail: String) -> Outcome {
    let took = start.elapsed();
    if took <= limit {
        Ok(format!("{detail}, {:.2} s", took.as_secs_f64()))
    } else {
        Err(format!("{detail}, took {:.2} s > {} s", took.as_secs_f64(), limit.as_secs()))
    }
}

fn table_one() -> Outcome {
    let start = Instant::now();
    let path = root().join("data/table1.csv");
    let units = read_fleet(std::fs::File::open(&path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let Commitment::Feasible(s) = min_commitment(&units, 0.09).map_err(|e| e.to_string())? else {
        return Err("infeasible".into());
    };
    if s.committed != ["1", "2"] {
        return Err(format!("committed {:?}", s.committed));
    }
    // all 31 non-empty subsets
    let (k, best, mask) = brute_force(&units, 0.09).ok_or("enumeration found nothing feasible")?;
    if k != 2 || mask != 0b00011 || (best - s.predicted_uplift).abs() > 1e-12 {
        return Err(format!("enumeration best {mask:05b} with {best}"));
    }
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cli = Command::new(env!("CARGO_BIN_EXE_ffr"))
        .args(["schedule", "--uplift", "0.09", "--fleet"])
        .arg(&path)
        .arg("--out")
        .arg(out.path())
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&cli.stdout);
    if !cli.status.success() || !stdout.contains("committed units: 1, 2 ") {
        return Err(format!("cli: {stdout}"));
    }
    within(Duration::from_secs(1), start, format!("{{1, 2}}, uplift {:.4} Hz", s.predicted_uplift))
}

fn rotor_security_and_taper() -> (Outcome, Outcome) {
    let start = Instant::now();
    let turbine = TurbineParams::reference();
    let mut worst_omega = f64::INFINITY;
    let mut worst_energy = f64::NEG_INFINITY;
    let mut security = Vec::new();
    let mut taper = Vec::new();
    for t_del in [5.0, 10.0, 20.0] {
        for k in 0..=10 {
            let v = 7.0 + 0.5 * k as f64;
            let inj = match max_injection(&turbine, v, t_del) {
                Ok(i) => i,
                Err(e) => {
                    security.push(format!("v={v} T_del={t_del}: {e}"));
                    continue;
                }
            };
            let mut c = Config::default();
            c.surge.t_del = t_del;
            c.fleet.truncate(1);
            c.fleet[0].v_w = v;
            c.fleet[0].scheduled = true;
            c.fleet[0].delta_p = Some(inj.delta_p_max);
            c.simulation.horizon = 1.0 + t_del + c.surge.t_rec + 20.0;
            let run = c.scenario().and_then(|s| run_scenario(&s));
            match run {
                Ok(r) => {
                    let w = r.metrics.min_omega_r[0];
                    worst_omega = worst_omega.min(w);
                    if w < turbine.omega_r_min {
                        security.push(format!("v={v} T_del={t_del}: ω_r fell to {w}"));
                    }
                    let e = r.metrics.energy_delivered[0];
                    worst_energy = worst_energy.max(e - inj.delta_e_del);
                    if e > inj.delta_e_del {
                        taper.push(format!("v={v} T_del={t_del}: {e} > {}", inj.delta_e_del));
                    }
                }
                Err(e) => security.push(format!("v={v} T_del={t_del}: {e}")),
            }
        }
    }
    let sec = if security.is_empty() {
        within(Duration::from_secs(60), start, format!("33 runs, lowest ω_r {worst_omega:.4} pu"))
    } else {
        Err(security.join("; "))
    };
    let tap = if taper.is_empty() && security.is_empty() {
        Ok(format!("largest delivered − estimate {worst_energy:.4} pu·s"))
    } else if taper.is_empty() {
        Err("runs aborted".into())
    } else {
        Err(taper.join("; "))
    };
    (sec, tap)
}

fn closed_form_grid() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for h in [3.0, 4.0, 5.0] {
        for t_r in [5.0, 7.0, 9.0] {
            for dp in [0.01, 0.03, 0.1] {
                let p = SfrParams { h, t_r, ..grid() };
                let n = nadir_closed_form(&p, dp).map_err(|e| e.to_string())?;
                let err = (sim_nadir(&p, dp, 0.001) - n.f_min).abs();
                if err > NADIR_TOL_HZ {
                    return Err(format!("H={h} T_R={t_r} ΔP={dp}: {err} Hz"));
                }
                worst = worst.max(err);
            }
        }
    }
    within(Duration::from_secs(10), start, format!("27 points, worst {:.3} mHz", worst * 1e3))
}

fn linearity() -> Outcome {
    let p = grid();
    let xs: Vec<f64> = (0..10).map(|k| 0.02 + 0.02 * k as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&dp| sim_nadir(&p, dp, 0.001)).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    if r2 >= R2_MIN {
        Ok(format!("R² = {r2:.6}"))
    } else {
        Err(format!("R² = {r2:.6}"))
    }
}

fn support_ordering() -> Outcome {
    let with = scheduled_default(30.0)?;
    let without = pipeline::baseline(&with);
    let a = run_scenario(&with).map_err(|e| e.to_string())?.metrics;
    let b = run_scenario(&without).map_err(|e| e.to_string())?.metrics;
    let detail = format!(
        "nadir {:.4} vs {:.4} Hz, ROCOF {:.4} vs {:.4} Hz/s",
        a.f_nadir, b.f_nadir, a.rocof, b.rocof
    );
    if a.f_nadir - b.f_nadir > 0.0 && a.rocof.abs() < b.rocof.abs() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn recovery_trade_off() -> Outcome {
    let s = scheduled_default(150.0)?;
    let pts = recovery_sweep(&s, &[10.0, 20.0, 40.0]).map_err(|e| e.to_string())?;
    let dips: Vec<f64> = pts.iter().map(|p| p.second_dip_nadir.unwrap_or(f64::NAN)).collect();
    let settle: Vec<f64> = pts.iter().map(|p| p.time_to_settle.unwrap_or(f64::NAN)).collect();
    let detail = format!("second dips {dips:.4?} Hz, settle times {settle:.2?} s");
    if dips.windows(2).all(|w| w[1] > w[0]) && settle.windows(2).all(|w| w[1] >= w[0]) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn hygiene() -> Outcome {
    let p = TurbineParams::reference();
    let mut worst_closure: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    for k in 0..=10 {
        let v = 7.0 + 0.5 * k as f64;
        let op = p.equilibrium(v).map_err(|e| e.to_string())?;
        let zero = delivered_energy(&p, v, op.omega_r, 0.0, 10.0).map_err(|e| e.to_string())?;
        if zero.delta_e_del != 0.0 {
            return Err(format!("ΔE_del(0) = {} at {v} m/s", zero.delta_e_del));
        }
        let margin = op.omega_r - p.omega_r_min;
        for frac in [0.25, 0.5, 1.0] {
            let e = delivered_energy(&p, v, op.omega_r, frac * margin, 10.0).map_err(|e| e.to_string())?;
            let rel = e.terms.residual().abs() / e.terms.largest().max(1.0);
            worst_closure = worst_closure.max(rel);
        }
    }
    // central differences of the surface against the analytic derivatives,
    // on both flanks of the maximum
    let h = 1e-4;
    for lambda in [3.0, 5.0, 7.0, 9.5, 11.0, 13.0] {
        let d = p.cp.derivatives(lambda, 0.0).map_err(|e| e.to_string())?;
        let f = |l: f64| p.cp.raw(l, 0.0);
        let g = |l: f64| p.cp.derivatives(l, 0.0).map(|d| d.d1).unwrap_or(f64::NAN);
        let fd1 = (f(lambda + h) - f(lambda - h)) / (2.0 * h);
        let fd2 = (g(lambda + h) - g(lambda - h)) / (2.0 * h);
        worst_fd = worst_fd
            .max(((fd1 - d.d1) / d.d1).abs())
            .max(((fd2 - d.d2) / d.d2).abs());
    }
    if worst_closure > CLOSURE_TOL {
        return Err(format!("balance residual {worst_closure:e}"));
    }
    if worst_fd > FD_REL_TOL {
        return Err(format!("derivative mismatch {worst_fd:e}"));
    }
    let sfr_shift = (sim_nadir(&grid(), 0.03, 0.002) - sim_nadir(&grid(), 0.03, 0.001)).abs();
    let s = scheduled_default(30.0)?;
    let cosim = |dt: f64| -> Result<f64, String> {
        let mut c = s.clone();
        c.dt = dt;
        Ok(run_scenario(&c).map_err(|e| e.to_string())?.metrics.f_nadir)
    };
    let cosim_shift = (cosim(0.001)? - cosim(0.0005)?).abs();
    let detail = format!(
        "closure {worst_closure:.1e}, C_p derivatives {worst_fd:.1e}, dt halving {:.4} mHz (SFR) / {:.4} mHz (co-sim)",
        sfr_shift * 1e3,
        cosim_shift * 1e3
    );
    if sfr_shift < DT_HALVING_TOL_HZ && cosim_shift < DT_HALVING_TOL_HZ {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scheduler_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for case in 0..RANDOM_FLEETS {
        let n = rng.random_range(1..=12);
        let units: Vec<UnitRecord> = (0..n)
            .map(|i| UnitRecord {
                id: format!("u{i}"),
                v_w: 10.0,
                delta_p_max: rng.random_range(0.0..=0.5),
                sensitivity: rng.random_range(0.0..=0.3),
            })
            .collect();
        let total: f64 = units.iter().map(UnitRecord::uplift).sum();
        let required = rng.random_range(0.0..=1.1) * total;
        let got = min_commitment(&units, required).map_err(|e| e.to_string())?;
        let ok = match (brute_force(&units, required), &got) {
            (Some((k, _, _)), Commitment::Feasible(s)) => s.committed.len() == k,
            (None, Commitment::Infeasible { .. }) => true,
            _ => false,
        };
        if !ok {
            return Err(format!("case {case}: scheduler {got:?}"));
        }
    }
    within(Duration::from_secs(30), start, format!("{RANDOM_FLEETS} fleets, seed {SEED}"))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: u32, name: &str, r: Outcome| {
        match r {
            Ok(d) => println!("PASS {n} {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {n} {name}: {d}");
            }
        }
    };
    report(1, "table I schedule", table_one());
    let (security, taper) = rotor_security_and_taper();
    report(2, "rotor security", security);
    report(3, "delivered energy within estimate", taper);
    report(4, "closed-form nadir", closed_form_grid());
    report(5, "nadir linearity", linearity());
    report(6, "support ordering", support_ordering());
    report(7, "recovery trade-off", recovery_trade_off());
    report(8, "numerical hygiene", hygiene());
    report(9, "scheduler oracle", scheduler_oracle());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
