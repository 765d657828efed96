//! CSV serialisation of the simulation counts ledger: one row per joint
//! pattern row with pair, click and matched-class counts.

use std::path::Path;

use anyhow::{bail, Context, Result};

use tfqkd_core::detect::{CountsLedger, RowCounts, RowKey};
use tfqkd_core::pattern::{Basis, Intensity};

const HEADER: [&str; 13] = [
    "basis_a",
    "intensity_a",
    "basis_b",
    "intensity_b",
    "pairs",
    "clicks_d0",
    "clicks_d1",
    "matched_direct",
    "matched_pi",
    "matched_clicks_direct_d0",
    "matched_clicks_direct_d1",
    "matched_clicks_pi_d0",
    "matched_clicks_pi_d1",
];

fn basis_str(b: Basis) -> &'static str {
    match b {
        Basis::X => "X",
        Basis::Z => "Z",
    }
}

fn parse_basis(s: &str) -> Result<Basis> {
    match s {
        "X" => Ok(Basis::X),
        "Z" => Ok(Basis::Z),
        other => bail!("unknown basis {other:?}"),
    }
}

fn parse_intensity(s: &str) -> Result<Intensity> {
    Intensity::ALL
        .into_iter()
        .find(|i| i.label().to_string() == s)
        .with_context(|| format!("unknown intensity {s:?}"))
}

pub fn write_ledger(ledger: &CountsLedger, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)
        .with_context(|| format!("writing ledger {}", path.display()))?;
    wtr.write_record(HEADER)?;
    for (key, rc) in &ledger.rows {
        wtr.write_record([
            basis_str(key.basis_a).to_string(),
            key.int_a.label().to_string(),
            basis_str(key.basis_b).to_string(),
            key.int_b.label().to_string(),
            rc.pairs.to_string(),
            rc.clicks[0].to_string(),
            rc.clicks[1].to_string(),
            rc.matched_pairs[0].to_string(),
            rc.matched_pairs[1].to_string(),
            rc.matched_clicks[0][0].to_string(),
            rc.matched_clicks[0][1].to_string(),
            rc.matched_clicks[1][0].to_string(),
            rc.matched_clicks[1][1].to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_ledger(path: &Path) -> Result<CountsLedger> {
    let mut rdr = csv::Reader::from_path(path)
        .with_context(|| format!("opening ledger {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(HEADER) {
        bail!("{}: unexpected ledger header {:?}", path.display(), headers);
    }
    let mut ledger = CountsLedger::default();
    for rec in rdr.records() {
        let rec = rec?;
        let field = |i: usize| -> Result<&str> {
            rec.get(i)
                .with_context(|| format!("{}: short record", path.display()))
        };
        let num = |i: usize| -> Result<u64> {
            field(i)?
                .trim()
                .parse()
                .with_context(|| format!("{}: bad count in column {}", path.display(), HEADER[i]))
        };
        let key = RowKey {
            basis_a: parse_basis(field(0)?)?,
            int_a: parse_intensity(field(1)?)?,
            basis_b: parse_basis(field(2)?)?,
            int_b: parse_intensity(field(3)?)?,
        };
        let rc = RowCounts {
            pairs: num(4)?,
            clicks: [num(5)?, num(6)?],
            matched_pairs: [num(7)?, num(8)?],
            matched_clicks: [[num(9)?, num(10)?], [num(11)?, num(12)?]],
        };
        ledger.total_pairs += rc.pairs;
        ledger.rows.insert(key, rc);
    }
    Ok(ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tfqkd_core::channel::ChannelParams;
    use tfqkd_core::detect::{simulate_session, EffectiveFluxes};
    use tfqkd_core::pattern::{Protocol, ProtocolParams};

    #[test]
    fn ledger_round_trip() {
        let params = ProtocolParams {
            protocol: Protocol::Sns,
            flux_s: 0.1,
            flux_u: 0.1,
            flux_v: 0.02,
            flux_w: 1e-4,
            flux_n: 1e-4,
            p_z: 0.5,
            p_x: 0.5,
            p_s_given_z: 0.1,
            p_u: 1.0 / 3.0,
            p_v: 1.0 / 3.0,
            p_w: 1.0 / 3.0,
            phase_levels: 512,
            delta_accept_rad: 11.25_f64.to_radians(),
            f_ec: 1.04,
        };
        let channel = ChannelParams {
            length_km: 50.0,
            loss_db_per_km: 0.171,
            arm_extra_db_a: 0.0,
            arm_extra_db_b: 0.0,
            measured_loss_db_a: None,
            measured_loss_db_b: None,
            charlie_transmission_a: 0.6,
            charlie_transmission_b: 0.5,
            det_eff_0: 0.73,
            det_eff_1: 0.77,
            dark_rate_hz: 14.0,
            gate_s: 2e-9,
            clock_hz: 5e8,
        };
        let fluxes = EffectiveFluxes::from_launch(&params, &channel);
        let ledger = simulate_session(&params, &channel, &fluxes, 0.3, 200_000, 9);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.csv");
        write_ledger(&ledger, &path).unwrap();
        let back = read_ledger(&path).unwrap();
        assert_eq!(back, ledger);
    }
}
