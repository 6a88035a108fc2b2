use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Shortest text that parses back to the same `f64` (at most 17 significant
/// digits). Plain notation in the usual range, exponent notation outside it.
pub fn number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Csv {
        let mut csv = Csv {
            text: String::new(),
        };
        let cols: Vec<&str> = header.iter().map(|s| s.as_ref()).collect();
        csv.text.push_str(&cols.join(","));
        csv.text.push('\n');
        csv
    }

    pub fn row(&mut self, values: &[f64]) {
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            let _ = write!(self.text, "{}", number(*v));
        }
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Header `t,y,Ty,T^2y,...` for a state of dimension `n`.
pub fn state_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((0..n).map(|k| match k {
        0 => "y".to_string(),
        1 => "Ty".to_string(),
        k => format!("T^{k}y"),
    }));
    h
}

/// Writes every file or none: each goes to a temporary sibling first and is
/// renamed into place only after all temporaries were written.
pub fn write_all(files: &[(PathBuf, String)]) -> Result<(), CliError> {
    let mut staged = Vec::with_capacity(files.len());
    for (path, contents) in files {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let io = |e: std::io::Error| CliError::Input(format!("{}: {e}", path.display()));
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        tmp.write_all(contents.as_bytes()).map_err(io)?;
        tmp.flush().map_err(io)?;
        staged.push((tmp, path));
    }
    let mut done: Vec<&PathBuf> = Vec::new();
    for (tmp, path) in staged {
        if let Err(e) = tmp.persist(path) {
            for p in done {
                let _ = std::fs::remove_file(p);
            }
            return Err(CliError::Input(format!("{}: {}", path.display(), e.error)));
        }
        done.push(path);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [
            0.0,
            16.0,
            -0.4161468365471424,
            1e-300,
            6.02e23,
            1.0 / 3.0,
            f64::MIN_POSITIVE,
        ] {
            let s = number(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(number(16.0), "16");
        assert_eq!(number(4.0), "4");
    }

    #[test]
    fn headers() {
        assert_eq!(state_header(3).join(","), "t,y,Ty,T^2y");
        let mut csv = Csv::new(&["t", "y"]);
        csv.row(&[1.0, 0.5]);
        assert_eq!(csv.into_string(), "t,y\n1,0.5\n");
    }
}
