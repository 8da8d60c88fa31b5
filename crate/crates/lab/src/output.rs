//! Atomic file output and lossless number formatting.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::LabError;

/// 17 significant digits: round-trips every binary64.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Writes `contents` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), LabError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), LabError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Minimal CSV builder; fields never contain separators.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<(), LabError> {
        write_atomic(path, self.text.as_bytes())
    }
}

/// File-system friendly family label, `power:p=2` → `power_p2`.
pub fn slug(family: &str) -> String {
    family.chars().filter(|c| *c != '=').map(|c| if c == ':' { '_' } else { c }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1.5), "1.5000000000000000e0");
        assert_eq!(num(f64::NAN), "NaN");
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("power:p=2"), "power_p2");
        assert_eq!(slug("exp"), "exp");
    }
}
