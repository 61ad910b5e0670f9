//! CSV and text formats. Numbers in CSV files carry six decimals; the metrics
//! block prints full precision. All writers are deterministic.

use std::io::{Read, Write};

use crate::cosim::{Metrics, SimTrace, SweepPoint};
use crate::dispatch::{Schedule, UnitRecord};
use crate::error::{Error, Result};
use crate::surge::TableRow;

/// Six-decimal fixed-point rendering without a negative zero.
pub fn fmt6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

fn opt6(v: Option<f64>) -> String {
    v.map(fmt6).unwrap_or_default()
}

pub fn write_table<W: Write>(out: W, rows: &[TableRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["v_w", "p_0", "delta_p_max"])?;
    for r in rows {
        w.write_record([fmt6(r.v_w), fmt6(r.p_0), fmt6(r.delta_p_max)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_fleet<R: Read>(input: R) -> Result<Vec<UnitRecord>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let expected = ["id", "v_w", "delta_p_max", "sensitivity"];
    let headers = r.headers()?.clone();
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Input(format!(
            "fleet header must be `{}`, got `{}`",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut units = Vec::new();
    for (line, rec) in r.deserialize::<UnitRecord>().enumerate() {
        let u = rec.map_err(|e| Error::Input(format!("fleet row {}: {e}", line + 2)))?;
        units.push(u);
    }
    Ok(units)
}

pub fn write_fleet<W: Write>(out: W, units: &[UnitRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "v_w", "delta_p_max", "sensitivity"])?;
    for u in units {
        w.write_record([u.id.clone(), fmt6(u.v_w), fmt6(u.delta_p_max), fmt6(u.sensitivity)])?;
    }
    w.flush()?;
    Ok(())
}

/// Committed units with their contribution, in schedule order.
pub fn write_schedule<W: Write>(out: W, units: &[UnitRecord], schedule: &Schedule) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "delta_p_max", "sensitivity", "uplift"])?;
    for id in &schedule.committed {
        let u = units
            .iter()
            .find(|u| &u.id == id)
            .ok_or_else(|| Error::Input(format!("scheduled unit `{id}` is not in the fleet")))?;
        w.write_record([u.id.clone(), fmt6(u.delta_p_max), fmt6(u.sensitivity), fmt6(u.uplift())])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace<W: Write>(out: W, trace: &SimTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "f_hz".into(), "imbalance_pu".into(), "wind_total_pu".into()];
    header.extend(trace.unit_ids.iter().map(|id| format!("omega_r_{id}")));
    header.extend(trace.unit_ids.iter().map(|id| format!("p_e_{id}")));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for k in 0..trace.len() {
        row.clear();
        row.push(fmt6(trace.t[k]));
        row.push(fmt6(trace.f_hz[k]));
        row.push(fmt6(trace.imbalance_pu[k]));
        row.push(fmt6(trace.wind_total_pu[k]));
        row.extend(trace.omega_r.iter().map(|w| fmt6(w[k])));
        row.extend(trace.p_e.iter().map(|p| fmt6(p[k])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `t,f_hz` series.
pub fn write_frequency<W: Write>(out: W, t: &[f64], f_hz: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "f_hz"])?;
    for (t, f) in t.iter().zip(f_hz) {
        w.write_record([fmt6(*t), fmt6(*f)])?;
    }
    w.flush()?;
    Ok(())
}

fn metric_pairs(m: &Metrics, unit_ids: &[String]) -> Vec<(String, String)> {
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_else(|| "unavailable".into());
    let mut kv = vec![
        ("f_nadir".to_string(), m.f_nadir.to_string()),
        ("t_nadir".into(), m.t_nadir.to_string()),
        ("f_first_nadir".into(), m.f_first_nadir.to_string()),
        ("t_first_nadir".into(), m.t_first_nadir.to_string()),
        ("rocof".into(), m.rocof.to_string()),
        ("f_settle".into(), opt(m.f_settle)),
        ("second_dip_nadir".into(), opt(m.second_dip_nadir)),
        ("t_second_dip".into(), opt(m.t_second_dip)),
        ("t_trigger".into(), opt(m.t_trigger)),
    ];
    for (id, w) in unit_ids.iter().zip(&m.min_omega_r) {
        kv.push((format!("min_omega_r_{id}"), w.to_string()));
    }
    for (id, e) in unit_ids.iter().zip(&m.energy_delivered) {
        kv.push((format!("energy_delivered_{id}"), e.to_string()));
    }
    kv
}

/// Flat `key = value` block at full precision.
pub fn metrics_text(m: &Metrics, unit_ids: &[String]) -> String {
    metric_pairs(m, unit_ids)
        .into_iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
}

/// The same metrics as a header plus one CSV row.
pub fn write_metrics_csv<W: Write>(out: W, m: &Metrics, unit_ids: &[String]) -> Result<()> {
    let kv = metric_pairs(m, unit_ids);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(kv.iter().map(|(k, _)| k.as_str()))?;
    w.write_record(kv.iter().map(|(_, v)| if v == "unavailable" { "" } else { v.as_str() }))?;
    w.flush()?;
    Ok(())
}

pub fn write_sweep<W: Write>(out: W, points: &[SweepPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_rec", "f_nadir", "second_dip_nadir", "time_to_settle"])?;
    for p in points {
        w.write_record([
            fmt6(p.t_rec),
            fmt6(p.f_nadir),
            opt6(p.second_dip_nadir),
            opt6(p.time_to_settle),
        ])?;
    }
    w.flush()?;
    Ok(())
}
