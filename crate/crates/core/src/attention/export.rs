//! Attention-map export: min-max normalization, CSV, and binary PGM.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{LasError, Result};
use crate::tensor::{Scalar, Tensor};

/// Min-max normalize into [0, 1]. A constant matrix normalizes to all
/// zeros (documented behavior, not an error).
pub fn min_max_normalize<T: Scalar>(m: &Tensor<T>) -> Result<Tensor<f64>> {
    if !m.all_finite() {
        return Err(LasError::Numeric("attention map has non-finite entries".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in m.data() {
        let x = v.as_f64();
        lo = lo.min(x);
        hi = hi.max(x);
    }
    let span = hi - lo;
    let out = if span == 0.0 {
        Tensor::zeros(m.shape().to_vec())
    } else {
        Tensor::new(
            m.shape().to_vec(),
            m.data().iter().map(|v| (v.as_f64() - lo) / span).collect(),
        )?
    };
    Ok(out)
}

/// Row-major CSV with 17 significant digits per entry.
pub fn write_csv(m: &Tensor<f64>, path: &Path) -> Result<()> {
    let (rows, cols) = m.dims2()?;
    let mut w = BufWriter::new(File::create(path)?);
    for i in 0..rows {
        let mut line = String::with_capacity(cols * 24);
        for j in 0..cols {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{:.16e}", m.at2(i, j)));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Binary PGM (magic P5, maxval 255), one byte per entry of a matrix
/// already scaled into [0, 1].
pub fn write_pgm(m: &Tensor<f64>, path: &Path) -> Result<()> {
    let (rows, cols) = m.dims2()?;
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{cols} {rows}\n255\n")?;
    let bytes: Vec<u8> = m
        .data()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

/// Min-max normalize an attention matrix and write `{stem}.csv` plus
/// `{stem}.pgm`. Returns the two paths written.
pub fn export_attention_map<T: Scalar>(m: &Tensor<T>, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    let norm = min_max_normalize(m)?;
    let csv = stem.with_extension("csv");
    let pgm = stem.with_extension("pgm");
    write_csv(&norm, &csv)?;
    write_pgm(&norm, &pgm)?;
    Ok((csv, pgm))
}

/// Mean absolute difference between horizontally adjacent entries; the
/// smoothness figure used to compare LaS maps against vanilla ones
/// (lower = smoother rows).
pub fn column_smoothness<T: Scalar>(m: &Tensor<T>) -> Result<f64> {
    let (rows, cols) = m.dims2()?;
    if cols < 2 {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for i in 0..rows {
        let r = m.row(i);
        for j in 0..cols - 1 {
            acc += (r[j + 1].as_f64() - r[j].as_f64()).abs();
        }
    }
    Ok(acc / (rows * (cols - 1)) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_hand_example() {
        let m = Tensor::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let n = min_max_normalize(&m).unwrap();
        let want = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (a, b) in n.data().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_matrix_normalizes_to_zero() {
        let m = Tensor::filled(vec![3, 3], 4.2);
        let n = min_max_normalize(&m).unwrap();
        assert!(n.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_map_has_strong_diagonal_in_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let m = Tensor::from_fn2(4, 4, |i, j| if i == j { 1.0 } else { 0.0 });
        let (csv, pgm) = export_attention_map(&m, &dir.path().join("map")).unwrap();
        assert!(csv.exists() && pgm.exists());
        let bytes = std::fs::read(&pgm).unwrap();
        let header = b"P5\n4 4\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        let px = &bytes[header.len()..];
        assert_eq!(px.len(), 16);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 255 } else { 0 };
                assert_eq!(px[i * 4 + j], want);
            }
        }
    }

    #[test]
    fn csv_has_17_significant_digits() {
        let dir = tempfile::tempdir().unwrap();
        let m = Tensor::from_rows(&[vec![1.0 / 3.0, 0.0]]).unwrap();
        let p = dir.path().join("m.csv");
        write_csv(&m, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("3.3333333333333331e-1,"), "{text}");
        let parsed: f64 = text.split(',').next().unwrap().parse().unwrap();
        assert_eq!(parsed, 1.0 / 3.0);
    }

    #[test]
    fn pooling_lowers_column_smoothness() {
        use crate::tensor::ops::avg_pool_rows;
        let m = Tensor::from_fn2(6, 6, |i, j| if (i + j) % 2 == 0 { 1.0 } else { 0.0 });
        let pooled = avg_pool_rows(&m, 3).unwrap();
        let raw = column_smoothness(&m).unwrap();
        let smooth = column_smoothness(&pooled).unwrap();
        assert!(smooth < raw, "{smooth} !< {raw}");
    }
}
