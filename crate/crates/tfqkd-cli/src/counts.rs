//! Labelled session-summary CSV: one `quantity,value` row per recorded
//! figure, covering detection rows, error rates and post-processing tallies.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Recorded quantities of one session, keyed by snake_case labels such as
/// `detected_zz_sn` or `e1ph_before`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionCounts {
    map: BTreeMap<String, f64>,
}

impl SessionCounts {
    pub fn load(path: &Path) -> Result<SessionCounts> {
        let mut rdr = csv::Reader::from_path(path)
            .with_context(|| format!("opening counts file {}", path.display()))?;
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "quantity" || &headers[1] != "value" {
            bail!(
                "{}: expected header quantity,value; found {:?}",
                path.display(),
                headers
            );
        }
        let mut map = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            let key = rec
                .get(0)
                .with_context(|| format!("{}: missing quantity", path.display()))?;
            let value: f64 = rec
                .get(1)
                .with_context(|| format!("{}: missing value for {key}", path.display()))?
                .trim()
                .parse()
                .with_context(|| format!("{}: bad value for {key}", path.display()))?;
            map.insert(key.to_string(), value);
        }
        Ok(SessionCounts { map })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)
            .with_context(|| format!("writing counts file {}", path.display()))?;
        wtr.write_record(["quantity", "value"])?;
        for (k, v) in &self.map {
            wtr.write_record([k.as_str(), &format_sig(*v)])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn get(&self, key: &str) -> Result<f64> {
        self.map
            .get(key)
            .copied()
            .with_context(|| format!("counts file is missing the quantity {key:?}"))
    }

    pub fn try_get(&self, key: &str) -> Option<f64> {
        self.map.get(key).copied()
    }

    pub fn insert(&mut self, key: &str, value: f64) {
        self.map.insert(key.to_string(), value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.map.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Detected-pair count of a joint pattern row, e.g. `("zx", "su")`.
    pub fn detected(&self, bases: &str, ints: &str) -> Result<f64> {
        self.get(&format!("detected_{bases}_{ints}"))
    }
}

/// Render with at least six significant digits, integers unpadded.
pub fn format_sig(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v}")
    } else {
        format!("{v:.8e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let mut c = SessionCounts::default();
        c.insert("detected_zz_ss", 39403.0);
        c.insert("e1ph_before", 0.0371);
        c.write(&path).unwrap();
        let back = SessionCounts::load(&path).unwrap();
        assert_eq!(back.detected("zz", "ss").unwrap(), 39403.0);
        assert!((back.get("e1ph_before").unwrap() - 0.0371).abs() < 1e-12);
        assert!(back.get("missing").is_err());
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_sig(39403.0), "39403");
        let s = format_sig(1.0984567e-6);
        assert!(s.starts_with("1.0984567"), "{s}");
    }
}
