//! Binary container for a solved value function.
//!
//! Layout, all little-endian: the magic `KVF1`, `u32` columns, `u32`
//! rows, then `cols * rows` `f64` values in row-major order (row 0
//! first, columns ascending within a row).

use std::fs;
use std::io::Write;
use std::path::Path;

use kickmind_core::{CellId, FieldSpec, ValueFunction};

use crate::CliError;

pub const VALUE_MAGIC: &[u8; 4] = b"KVF1";

/// Serializes a value function into the binary container.
pub fn encode_value_function(v: &ValueFunction) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + v.values().len() * 8);
    out.extend_from_slice(VALUE_MAGIC);
    out.extend_from_slice(&v.cols().to_le_bytes());
    out.extend_from_slice(&v.rows().to_le_bytes());
    for value in v.values() {
        out.extend_from_slice(&value.to_le_bytes());
    }
    out
}

/// Parses the binary container back into a value function.
pub fn decode_value_function(bytes: &[u8]) -> Result<ValueFunction, CliError> {
    let bad = |reason: &str| CliError::Config(format!("malformed value file: {reason}"));
    if bytes.len() < 12 {
        return Err(bad("shorter than the 12-byte header"));
    }
    if &bytes[0..4] != VALUE_MAGIC {
        return Err(bad("bad magic, expected KVF1"));
    }
    let cols = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let count = cols as usize * rows as usize;
    if bytes.len() != 12 + count * 8 {
        return Err(bad("length does not match the declared grid"));
    }
    let values: Vec<f64> = bytes[12..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ValueFunction::from_values(cols, rows, values)
        .map_err(|e| CliError::config("malformed value file", e))
}

pub fn write_value_function(path: &Path, v: &ValueFunction) -> Result<(), CliError> {
    fs::write(path, encode_value_function(v))
        .map_err(|e| CliError::config(&format!("cannot write {}", path.display()), e))
}

pub fn read_value_function(path: &Path) -> Result<ValueFunction, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::config(&format!("cannot read {}", path.display()), e))?;
    decode_value_function(&bytes)
}

/// Writes `col,row,value` CSV rows, row-major, one line per cell.
/// Values are printed with the shortest representation that parses
/// back to the same `f64`, so the export is lossless.
pub fn write_value_csv(out: &mut impl Write, v: &ValueFunction) -> std::io::Result<()> {
    writeln!(out, "col,row,value")?;
    for row in 0..v.rows() {
        for col in 0..v.cols() {
            writeln!(out, "{col},{row},{}", v.get(CellId::new(col, row)))?;
        }
    }
    Ok(())
}

/// Checks that a loaded value function matches the field it is about
/// to be used with.
pub fn check_grid(v: &ValueFunction, field: &FieldSpec) -> Result<(), CliError> {
    if v.matches_grid(field) {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "value function grid is {}x{} but the field needs {}x{}",
            v.cols(),
            v.rows(),
            field.cols(),
            field.rows()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ValueFunction {
        let values: Vec<f64> = (0..12).map(|i| i as f64 * 0.5 + 0.25).collect();
        ValueFunction::from_values(4, 3, values).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let v = sample();
        let decoded = decode_value_function(&encode_value_function(&v)).unwrap();
        assert_eq!(decoded.cols(), 4);
        assert_eq!(decoded.rows(), 3);
        assert_eq!(decoded.values(), v.values());
    }

    #[test]
    fn header_layout_is_fixed() {
        let bytes = encode_value_function(&sample());
        assert_eq!(&bytes[0..4], b"KVF1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 4);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(bytes.len(), 12 + 12 * 8);
    }

    #[test]
    fn truncated_and_corrupt_files_are_rejected() {
        let bytes = encode_value_function(&sample());
        assert!(decode_value_function(&bytes[..11]).is_err());
        assert!(decode_value_function(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong_magic = bytes.clone();
        wrong_magic[0] = b'X';
        assert!(decode_value_function(&wrong_magic).is_err());
    }

    #[test]
    fn csv_lists_every_cell_losslessly() {
        let v = sample();
        let mut buf = Vec::new();
        write_value_csv(&mut buf, &v).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 12);
        assert_eq!(lines[0], "col,row,value");
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields[0], "0");
        assert_eq!(fields[1], "0");
        assert_eq!(fields[2].parse::<f64>().unwrap(), 0.25);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let field = FieldSpec::default();
        let err = check_grid(&sample(), &field).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
