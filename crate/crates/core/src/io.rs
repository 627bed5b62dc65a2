//! Spectrum, grid and sample-set files.
//!
//! Floats are written with 17 significant digits so every value read back
//! is bit-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::SampleSet;
use crate::spectrum::{EigenEntry, Spectrum, SpectrumFile};

/// Round-trip float formatting.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses spectrum JSON (`{"eigenvalues":[...]}`) or `value,multiplicity`
/// CSV lines (header optional, `#` comments and blank lines skipped).
pub fn parse_spectrum(text: &str) -> Result<Spectrum> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return Ok(serde_json::from_str(trimmed)?);
    }
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::Parse(format!(
                "line {}: expected value,multiplicity",
                lineno + 1
            )));
        }
        let value = match fields[0].parse::<f64>() {
            Ok(v) => v,
            Err(_) if entries.is_empty() && lineno == 0 => continue, // header
            Err(_) => {
                return Err(Error::Parse(format!(
                    "line {}: bad value {:?}",
                    lineno + 1,
                    fields[0]
                )))
            }
        };
        let multiplicity = fields[1].parse::<usize>().map_err(|_| {
            Error::Parse(format!(
                "line {}: bad multiplicity {:?}",
                lineno + 1,
                fields[1]
            ))
        })?;
        entries.push(EigenEntry {
            value,
            multiplicity,
        });
    }
    Spectrum::try_from(SpectrumFile {
        eigenvalues: entries,
    })
}

pub fn read_spectrum(path: &Path) -> Result<Spectrum> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_spectrum(&text)
}

pub fn spectrum_json(s: &Spectrum) -> String {
    // serde_json prints the shortest round-trip representation
    serde_json::to_string_pretty(s).expect("spectrum serializes") + "\n"
}

pub fn spectrum_csv(s: &Spectrum) -> String {
    let mut out = String::from("value,multiplicity\n");
    for (&v, &n) in s.values().iter().zip(s.multiplicities()) {
        let _ = writeln!(out, "{},{n}", fmt_float(v));
    }
    out
}

/// Grid CSV with the given header columns; each row is one x and its values.
pub fn grid_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| fmt_float(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Metadata stored next to a sample CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSidecar {
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    pub spectrum: Spectrum,
}

/// `<csv path>.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn samples_csv(set: &SampleSet) -> String {
    let mut out = String::from("value\n");
    for &v in &set.values {
        out.push_str(&fmt_float(v));
        out.push('\n');
    }
    out
}

pub fn samples_sidecar(set: &SampleSet) -> String {
    let meta = SampleSidecar {
        seed: set.seed,
        n: set.len(),
        spectrum: set.spectrum.clone(),
    };
    serde_json::to_string_pretty(&meta).expect("sidecar serializes") + "\n"
}

/// Writes the sample CSV and its JSON sidecar.
pub fn write_samples(path: &Path, set: &SampleSet) -> Result<()> {
    write(path, &samples_csv(set))?;
    write(&sidecar_path(path), &samples_sidecar(set))
}

/// Reads a sample CSV together with its sidecar.
pub fn read_samples(path: &Path) -> Result<SampleSet> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let meta_path = sidecar_path(path);
    let meta_text = fs::read_to_string(&meta_path)
        .map_err(|e| Error::Io(format!("{}: {e}", meta_path.display())))?;
    let meta: SampleSidecar = serde_json::from_str(&meta_text)?;
    let mut values = Vec::with_capacity(meta.n);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.parse::<f64>().is_err()) {
            continue;
        }
        values.push(
            line.parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {}: bad sample {line:?}", lineno + 1)))?,
        );
    }
    if values.len() != meta.n {
        return Err(Error::Parse(format!(
            "sidecar says {} samples, file has {}",
            meta.n,
            values.len()
        )));
    }
    Ok(SampleSet {
        spectrum: meta.spectrum,
        seed: meta.seed,
        values,
    })
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_spectrum_with_and_without_header() {
        let a = parse_spectrum("value,multiplicity\n1.5,2\n-1,1\n").unwrap();
        let b = parse_spectrum("# comment\n-1,1\n\n1.5, 2\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values(), &[-1.0, 1.5]);
        assert_eq!(a.multiplicities(), &[1, 2]);
        assert!(parse_spectrum("1.0,0\n").is_err());
        assert!(parse_spectrum("1.0,2\nx,1\n").is_err());
        assert!(parse_spectrum("1.0\n").is_err());
    }

    #[test]
    fn spectrum_round_trips_bit_identically() {
        let s =
            Spectrum::new(vec![-0.1, 1e-300, 1.0 / 3.0, 2f64.sqrt()], vec![1, 3, 4, 2]).unwrap();
        assert_eq!(parse_spectrum(&spectrum_json(&s)).unwrap(), s);
        assert_eq!(parse_spectrum(&spectrum_csv(&s)).unwrap(), s);
    }

    #[test]
    fn grid_format() {
        let text = grid_csv(&["x", "value"], &[vec![0.5, 1.0 / 3.0]]);
        assert_eq!(
            text,
            "x,value\n5.0000000000000000e-1,3.3333333333333331e-1\n"
        );
        let back: f64 = "3.3333333333333331e-1".parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }
}
