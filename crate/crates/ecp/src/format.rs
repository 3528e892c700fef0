//! CSV and JSON report encodings. Both are byte-stable for a fixed input.

use clap::ValueEnum;
use kerr_ecp_core::analytics::AnalyticsTable;
use kerr_ecp_core::protocol::SessionReport;
use serde::Serialize;

use crate::Result;

/// Version of the JSON envelope written by every command.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Ten significant digits in fixed notation, switching to scientific
/// notation below `1e-6` in magnitude.
pub fn sig10(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0.000000000".to_owned();
    }
    // exponent after rounding to ten digits, so 9.9999999999 becomes 10.00000000
    let sci = format!("{x:.9e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if exp < -6 {
        sci
    } else {
        format!("{:.*}", (9 - exp).max(0) as usize, x)
    }
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    schema_version: u32,
    command: &'a str,
    report: &'a T,
}

pub fn to_json<T: Serialize>(command: &str, report: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Envelope {
        schema_version: SCHEMA_VERSION,
        command,
        report,
    })?;
    s.push('\n');
    Ok(s)
}

fn write_csv<I>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

pub const SESSION_HEADER: [&str; 8] = [
    "round",
    "trials",
    "successes",
    "empirical_rate",
    "stderr",
    "analytic_rate",
    "discarded",
    "min_fidelity",
];

/// One row per round. `min_fidelity` is empty for rounds without a success.
pub fn session_csv(report: &SessionReport) -> Result<String> {
    write_csv(
        &SESSION_HEADER,
        report.rounds.iter().map(|r| {
            vec![
                r.round.to_string(),
                r.trials.to_string(),
                r.successes.to_string(),
                sig10(r.empirical_rate),
                sig10(r.stderr),
                sig10(r.analytic_rate),
                r.discarded.to_string(),
                r.min_fidelity.map(sig10).unwrap_or_default(),
            ]
        }),
    )
}

pub const SURFACE_HEADER: [&str; 5] = [
    "alpha",
    "n",
    "p_success",
    "yield_recursion",
    "yield_paper_printed",
];

pub fn surface_csv(table: &AnalyticsTable) -> Result<String> {
    write_csv(
        &SURFACE_HEADER,
        table.rows.iter().map(|r| {
            vec![
                sig10(r.alpha),
                r.n.to_string(),
                sig10(r.p_success),
                sig10(r.yield_recursion),
                sig10(r.yield_paper_printed),
            ]
        }),
    )
}
