//! Decimal serialization and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::scalar::Real;

/// Significant decimal digits carried by `bits` of mantissa.
pub fn digits_for_bits(bits: u32) -> usize {
    ((bits as f64) * std::f64::consts::LOG10_2).ceil() as usize + 1
}

/// Decimal string with as many digits as the value's mantissa supports.
pub fn fmt_real<T: Real>(x: &T) -> String {
    let bits = x.bits();
    if bits <= 53 {
        return fmt_f64(x.to_f64());
    }
    let any: &dyn std::any::Any = x;
    match any.downcast_ref::<crate::BigFloat>() {
        Some(b) => b.inner().to_string_radix(10, Some(digits_for_bits(bits))),
        None => fmt_f64(x.to_f64()),
    }
}

pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// `log10|x|` without overflow.
pub fn log10_abs<T: Real>(x: &T) -> f64 {
    x.ln_abs() / std::f64::consts::LN_10
}

/// Echo of a run's resolved configuration, written next to each artifact.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub artifact: String,
    pub mantissa_bits: u32,
    pub tolerance: f64,
    pub params: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, artifact: &Path, mantissa_bits: u32, tolerance: f64, params: serde_json::Value) -> Self {
        Manifest {
            tool: "starklab",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            artifact: artifact.display().to_string(),
            mantissa_bits,
            tolerance,
            params,
        }
    }

    /// `<artifact>.manifest.json`.
    pub fn path_for(artifact: &Path) -> PathBuf {
        let mut name = artifact.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        artifact.with_file_name(name)
    }

    pub fn write_next_to(&self, artifact: &Path) -> Result<PathBuf> {
        let path = Self::path_for(artifact);
        let mut f = std::fs::File::create(&path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{BigFloat, PrecisionContext};

    #[test]
    fn digits_follow_precision() {
        let ctx = PrecisionContext::with_bits(256);
        let third = BigFloat::lift_ratio(1, 3, &ctx);
        let s = fmt_real(&third);
        assert!(s.starts_with("3.333333333333333333333333333333333333333333333333333333333333333333333333333"));
        assert_eq!(fmt_real(&0.5f64), "5.0000000000000000e-1");
        assert_eq!(digits_for_bits(53), 17);
    }

    #[test]
    fn manifest_path() {
        let p = Manifest::path_for(Path::new("/tmp/x/sums.csv"));
        assert_eq!(p, Path::new("/tmp/x/sums.csv.manifest.json"));
    }
}
