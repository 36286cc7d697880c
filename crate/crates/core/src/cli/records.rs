//! Versioned CSV form of the engine log.

use std::io::{Read, Write};

use super::CliError;
use crate::lsk::ToneDecision;
use crate::scenario::ScenarioRecord;

pub const SCHEMA_VERSION: u32 = 1;

pub const COLUMNS: [&str; 21] = [
    "schema_version",
    "t_s",
    "d_m",
    "k_x",
    "k_y",
    "k_z",
    "v_in_v",
    "i_tx_a",
    "v_out_x_v",
    "v_out_y_v",
    "v_out_z_v",
    "p_out_x_w",
    "p_out_y_w",
    "p_out_z_w",
    "p_total_out_w",
    "p_in_w",
    "f_m_hz",
    "tone",
    "sar_mean_i2_a2",
    "sar_margin",
    "sar_compliant",
];

pub fn header() -> &'static [&'static str] {
    &COLUMNS
}

/// Shortest text that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-3..1e7).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn row(r: &ScenarioRecord) -> Vec<String> {
    let mut out = vec![SCHEMA_VERSION.to_string()];
    out.extend([r.t_s, r.d_m].map(fmt_f64));
    out.extend(r.k.map(fmt_f64));
    out.extend([r.v_in_v, r.i_tx_a].map(fmt_f64));
    out.extend(r.v_out_v.map(fmt_f64));
    out.extend(r.p_out_w.map(fmt_f64));
    out.extend([r.p_total_out_w, r.p_in_w, r.f_m_hz].map(fmt_f64));
    out.push(r.tone.as_str().to_string());
    out.extend([r.sar_mean_i2_a2, r.sar_margin].map(fmt_f64));
    out.push(r.sar_compliant.to_string());
    out
}

pub fn write_records<W: Write>(w: W, records: &[ScenarioRecord]) -> Result<(), CliError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header()).map_err(CliError::csv)?;
    for r in records {
        wr.write_record(row(r)).map_err(CliError::csv)?;
    }
    wr.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn read_records<R: Read>(r: R) -> Result<Vec<ScenarioRecord>, CliError> {
    let mut rd = csv::Reader::from_reader(r);
    let head = rd.headers().map_err(CliError::csv)?.clone();
    if head.iter().collect::<Vec<_>>() != header() {
        return Err(CliError::Config(format!("unexpected record header: {}", head.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(CliError::csv)?;
        let bad = |what: &str| CliError::Config(format!("record {}: bad {what}", line + 1));
        let num = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(header()[i]));
        if rec[0].parse::<u32>().ok() != Some(SCHEMA_VERSION) {
            return Err(bad("schema_version"));
        }
        out.push(ScenarioRecord {
            t_s: num(1)?,
            d_m: num(2)?,
            k: [num(3)?, num(4)?, num(5)?],
            v_in_v: num(6)?,
            i_tx_a: num(7)?,
            v_out_v: [num(8)?, num(9)?, num(10)?],
            p_out_w: [num(11)?, num(12)?, num(13)?],
            p_total_out_w: num(14)?,
            p_in_w: num(15)?,
            f_m_hz: num(16)?,
            tone: ToneDecision::parse(&rec[17]).ok_or_else(|| bad("tone"))?,
            sar_mean_i2_a2: num(18)?,
            sar_margin: num(19)?,
            sar_compliant: rec[20].parse().map_err(|_| bad("sar_compliant"))?,
        });
    }
    Ok(out)
}
