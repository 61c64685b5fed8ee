//! Matrix file formats.
//!
//! Text: first line `n`, then `n` lines of `n` whitespace-separated reals.
//! Binary: little-endian `u64` `n`, then `n * n` little-endian `f64`, row-major.
//! Both loaders enforce symmetry through [`SymmetricMatrixOracle::from_dense`].

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::SymmetricMatrixOracle;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Text,
    Binary,
}

impl MatrixFormat {
    /// `.bin` selects binary, anything else text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => MatrixFormat::Binary,
            _ => MatrixFormat::Text,
        }
    }
}

pub fn read_text<R: BufRead>(reader: R) -> Result<SymmetricMatrixOracle> {
    let mut lines = reader.lines();
    let header = loop {
        match lines.next() {
            Some(line) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
            None => return Err(Error::Parse("empty matrix file".into())),
        }
    };
    let n: usize = header
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad dimension line `{}`", header.trim())))?;
    if n == 0 {
        return Err(Error::Parse("dimension must be positive".into()));
    }
    let mut data = Vec::with_capacity(n * n);
    let mut row = 0;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if row == n {
            return Err(Error::Parse(format!("more than {n} rows")));
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::Parse(format!("row {row}: bad number `{tok}`")))?;
            data.push(v);
        }
        if data.len() - before != n {
            return Err(Error::Parse(format!(
                "row {row}: expected {n} values, found {}",
                data.len() - before
            )));
        }
        row += 1;
    }
    if row != n {
        return Err(Error::Parse(format!("expected {n} rows, found {row}")));
    }
    SymmetricMatrixOracle::from_row_major(n, &data)
}

pub fn write_text<W: Write>(oracle: &SymmetricMatrixOracle, mut w: W) -> Result<()> {
    let n = oracle.n();
    writeln!(w, "{n}")?;
    for i in 0..n {
        for j in 0..n {
            if j > 0 {
                w.write_all(b" ")?;
            }
            write!(w, "{}", oracle.peek(i, j))?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut reader: R) -> Result<SymmetricMatrixOracle> {
    let mut word = [0u8; 8];
    reader.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word);
    let n = usize::try_from(n).map_err(|_| Error::Parse(format!("dimension {n} too large")))?;
    if n == 0 {
        return Err(Error::Parse("dimension must be positive".into()));
    }
    let total = n
        .checked_mul(n)
        .ok_or_else(|| Error::Parse(format!("dimension {n} too large")))?;
    let mut data = Vec::with_capacity(total);
    for _ in 0..total {
        reader
            .read_exact(&mut word)
            .map_err(|e| Error::Parse(format!("truncated binary matrix: {e}")))?;
        data.push(f64::from_le_bytes(word));
    }
    SymmetricMatrixOracle::from_row_major(n, &data)
}

pub fn write_binary<W: Write>(oracle: &SymmetricMatrixOracle, mut w: W) -> Result<()> {
    let n = oracle.n();
    w.write_all(&(n as u64).to_le_bytes())?;
    for i in 0..n {
        for j in 0..n {
            w.write_all(&oracle.peek(i, j).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<SymmetricMatrixOracle> {
    let f = BufReader::new(File::open(path)?);
    match MatrixFormat::from_path(path) {
        MatrixFormat::Text => read_text(f),
        MatrixFormat::Binary => read_binary(f),
    }
}

pub fn save(oracle: &SymmetricMatrixOracle, path: &Path, format: MatrixFormat) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    match format {
        MatrixFormat::Text => write_text(oracle, f),
        MatrixFormat::Binary => write_binary(oracle, f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{generate, MatrixKind};

    #[test]
    fn text_round_trip_is_exact() {
        let o = generate(MatrixKind::PsdGram { m: 3 }, 7, 5).unwrap();
        let mut buf = Vec::new();
        write_text(&o, &mut buf).unwrap();
        let back = read_text(&buf[..]).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(o.peek(i, j), back.peek(i, j));
            }
        }
    }

    #[test]
    fn binary_layout() {
        let o = SymmetricMatrixOracle::from_row_major(2, &[1.0, 2.0, 2.0, 3.0]).unwrap();
        let mut buf = Vec::new();
        write_binary(&o, &mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 * 8);
        assert_eq!(&buf[..8], &2u64.to_le_bytes());
        assert_eq!(&buf[8 + 8..8 + 16], &2.0f64.to_le_bytes());
        let back = read_binary(&buf[..]).unwrap();
        assert_eq!(back.peek(1, 1), 3.0);
    }

    #[test]
    fn text_rejects_asymmetric_and_ragged() {
        assert!(matches!(
            read_text("2\n1 2\n3 4\n".as_bytes()),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(matches!(
            read_text("2\n1 2\n2\n".as_bytes()),
            Err(Error::Parse(_))
        ));
        assert!(read_text("".as_bytes()).is_err());
    }

    #[test]
    fn truncated_binary_is_parse_error() {
        let mut buf = 2u64.to_le_bytes().to_vec();
        buf.extend_from_slice(&1.0f64.to_le_bytes());
        assert!(matches!(read_binary(&buf[..]), Err(Error::Parse(_))));
    }
}
