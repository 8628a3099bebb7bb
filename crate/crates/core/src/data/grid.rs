//! Plain-text image grids.
//!
//! ```text
//! GRID <height> <width> <channels>
//! <height lines of width*channels space-separated values, channel-interleaved>
//! ```
//!
//! Values are written with six decimals, so files are byte-stable.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const GRID_EXTENSION: &str = "grid";

pub fn grid_text(image: &Tensor) -> Result<String> {
    let &[h, w, c] = image.shape() else {
        return Err(Error::dim("grid", image.shape(), &[0, 0, 0]));
    };
    let mut out = format!("GRID {h} {w} {c}\n");
    for row in image.data().chunks(w * c) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{v:.6}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_grid(text: &str, path: &Path) -> Result<Tensor> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
    let dims: Vec<usize> = match header.as_slice() {
        ["GRID", rest @ ..] if rest.len() == 3 => rest
            .iter()
            .map(|d| d.parse().map_err(|_| err(1, format!("bad extent '{d}'"))))
            .collect::<Result<_>>()?,
        _ => {
            return Err(err(
                1,
                "expected header 'GRID <height> <width> <channels>'".into(),
            ))
        }
    };
    let (h, w, c) = (dims[0], dims[1], dims[2]);
    let mut data = Vec::with_capacity(h * w * c);
    for (i, line) in lines.enumerate() {
        if i >= h {
            if line.trim().is_empty() {
                continue;
            }
            return Err(err(i + 2, format!("more than {h} rows")));
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            data.push(
                tok.parse::<f64>()
                    .map_err(|_| err(i + 2, format!("bad value '{tok}'")))?,
            );
        }
        if data.len() - before != w * c {
            return Err(err(
                i + 2,
                format!("expected {} values, found {}", w * c, data.len() - before),
            ));
        }
    }
    if data.len() != h * w * c {
        return Err(err(h + 1, format!("expected {h} rows")));
    }
    Tensor::new([h, w, c], data)
}

pub fn write_grid(path: &Path, image: &Tensor) -> Result<()> {
    std::fs::write(path, grid_text(image)?).map_err(|e| Error::io(path, e))
}

pub fn read_grid(path: &Path) -> Result<Tensor> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_grid(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let t = Tensor::new([2, 3, 1], vec![0.5, -1.25, 2.0, 0.0, 3.125, -0.5]).unwrap();
        let text = grid_text(&t).unwrap();
        assert_eq!(text.lines().next(), Some("GRID 2 3 1"));
        assert_eq!(parse_grid(&text, Path::new("x.grid")).unwrap(), t);
    }

    #[test]
    fn malformed() {
        let p = Path::new("x.grid");
        assert!(parse_grid("GRID 2 2\n", p).is_err());
        assert!(parse_grid("GRID 2 2 1\n1 2\n3\n", p)
            .unwrap_err()
            .to_string()
            .contains(":3:"));
        assert!(parse_grid("GRID 2 2 1\n1 2\n", p).is_err());
    }
}
