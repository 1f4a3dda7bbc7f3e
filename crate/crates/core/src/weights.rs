//! Real and dual-rail weight matrices of a one-hidden-layer network.
//!
//! Layer matrices carry the bias in their last column: `w1` is `H × (I+1)`
//! and `w2` is `O × (H+1)`.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub w1: DMatrix<f64>,
    pub w2: DMatrix<f64>,
}

impl Weights {
    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            w1: DMatrix::zeros(hidden, input + 1),
            w2: DMatrix::zeros(output, hidden + 1),
        }
    }

    pub fn from_rows(w1: &[&[f64]], w2: &[&[f64]]) -> Self {
        Self {
            w1: matrix(w1),
            w2: matrix(w2),
        }
    }

    pub fn input_width(&self) -> usize {
        self.w1.ncols() - 1
    }

    pub fn hidden_width(&self) -> usize {
        self.w1.nrows()
    }

    pub fn output_width(&self) -> usize {
        self.w2.nrows()
    }

    pub fn check_shape(&self) -> Result<()> {
        if self.w1.ncols() < 2 || self.w1.nrows() == 0 || self.w2.nrows() == 0 {
            return Err(Error::Config("weight matrices must be nonempty".into()));
        }
        if self.w2.ncols() != self.w1.nrows() + 1 {
            return Err(Error::Dimension {
                expected: self.w1.nrows() + 1,
                got: self.w2.ncols(),
            });
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Weights) -> f64 {
        let a = (&self.w1 - &other.w1).abs().max();
        let b = (&self.w2 - &other.w2).abs().max();
        a.max(b)
    }

    /// Splits each entry onto the rail matching its sign.
    pub fn split(&self) -> WeightSet {
        let pos = |m: &DMatrix<f64>| m.map(|v| v.max(0.0));
        let neg = |m: &DMatrix<f64>| m.map(|v| (-v).max(0.0));
        WeightSet {
            w1p: pos(&self.w1),
            w1m: neg(&self.w1),
            w2p: pos(&self.w2),
            w2m: neg(&self.w2),
        }
    }

    pub fn scale(&self, k: f64) -> Weights {
        Weights {
            w1: &self.w1 * k,
            w2: &self.w2 * k,
        }
    }

    pub fn add(&self, other: &Weights) -> Weights {
        Weights {
            w1: &self.w1 + &other.w1,
            w2: &self.w2 + &other.w2,
        }
    }
}

fn matrix(rows: &[&[f64]]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

/// Dual-rail weights: decoded value is `plus - minus` entrywise.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub w1p: DMatrix<f64>,
    pub w1m: DMatrix<f64>,
    pub w2p: DMatrix<f64>,
    pub w2m: DMatrix<f64>,
}

impl WeightSet {
    pub fn from_rows(
        w1p: &[&[f64]],
        w1m: &[&[f64]],
        w2p: &[&[f64]],
        w2m: &[&[f64]],
    ) -> Self {
        Self {
            w1p: matrix(w1p),
            w1m: matrix(w1m),
            w2p: matrix(w2p),
            w2m: matrix(w2m),
        }
    }

    pub fn decode(&self) -> Weights {
        Weights {
            w1: &self.w1p - &self.w1m,
            w2: &self.w2p - &self.w2m,
        }
    }

    pub fn input_width(&self) -> usize {
        self.w1p.ncols() - 1
    }

    pub fn hidden_width(&self) -> usize {
        self.w1p.nrows()
    }

    pub fn output_width(&self) -> usize {
        self.w2p.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        if self.w1p.shape() != self.w1m.shape() || self.w2p.shape() != self.w2m.shape() {
            return Err(Error::Config("dual-rail matrices differ in shape".into()));
        }
        self.decode().check_shape()?;
        let all = self
            .w1p
            .iter()
            .chain(self.w1m.iter())
            .chain(self.w2p.iter())
            .chain(self.w2m.iter());
        for v in all {
            if !(*v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "dual-rail weights must be finite and nonnegative, found {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &WeightSet) -> f64 {
        [
            (&self.w1p - &other.w1p).abs().max(),
            (&self.w1m - &other.w1m).abs().max(),
            (&self.w2p - &other.w2p).abs().max(),
            (&self.w2m - &other.w2m).abs().max(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Writes `layer,row,col,plus,minus` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["layer", "row", "col", "plus", "minus"])?;
        for (layer, p, m) in [(1, &self.w1p, &self.w1m), (2, &self.w2p, &self.w2m)] {
            for i in 0..p.nrows() {
                for j in 0..p.ncols() {
                    wr.write_record([
                        layer.to_string(),
                        (i + 1).to_string(),
                        (j + 1).to_string(),
                        p[(i, j)].to_string(),
                        m[(i, j)].to_string(),
                    ])?;
                }
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut entries: Vec<(usize, usize, usize, f64, f64)> = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let field = |k: usize| -> Result<&str> {
                rec.get(k)
                    .ok_or_else(|| Error::Config(format!("weight row missing column {k}")))
            };
            let int = |k: usize| -> Result<usize> {
                field(k)?
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad index `{}`", field(k).unwrap_or(""))))
            };
            let num = |k: usize| -> Result<f64> {
                field(k)?
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad value `{}`", field(k).unwrap_or(""))))
            };
            entries.push((int(0)?, int(1)?, int(2)?, num(3)?, num(4)?));
        }
        let dims = |layer: usize| {
            entries
                .iter()
                .filter(|e| e.0 == layer)
                .fold((0, 0), |(r, c), e| (r.max(e.1), c.max(e.2)))
        };
        let (r1, c1) = dims(1);
        let (r2, c2) = dims(2);
        if entries.iter().any(|e| e.0 != 1 && e.0 != 2 || e.1 == 0 || e.2 == 0) {
            return Err(Error::Config("weight indices are 1-based, layers 1 or 2".into()));
        }
        let mut ws = WeightSet {
            w1p: DMatrix::zeros(r1, c1),
            w1m: DMatrix::zeros(r1, c1),
            w2p: DMatrix::zeros(r2, c2),
            w2m: DMatrix::zeros(r2, c2),
        };
        let mut seen = 0;
        for (layer, i, j, p, m) in entries {
            let (mp, mm) = if layer == 1 {
                (&mut ws.w1p, &mut ws.w1m)
            } else {
                (&mut ws.w2p, &mut ws.w2m)
            };
            mp[(i - 1, j - 1)] = p;
            mm[(i - 1, j - 1)] = m;
            seen += 1;
        }
        if seen != r1 * c1 + r2 * c2 {
            return Err(Error::Config("weight table is incomplete or has duplicates".into()));
        }
        ws.validate()?;
        Ok(ws)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> WeightSet {
        WeightSet::from_rows(
            &[&[3.0, 3.0, 2.5], &[4.0, 3.0, 2.0]],
            &[&[4.0, 4.0, 1.0], &[3.0, 2.0, 2.5]],
            &[&[2.0, 3.0, 2.5]],
            &[&[1.0, 2.0, 4.0]],
        )
    }

    #[test]
    fn split_recombine_exact() {
        let w = sample().decode();
        assert_eq!(w.split().decode(), w);
        assert_eq!(w.w1[(0, 0)], -1.0);
        assert_eq!(w.w2[(0, 2)], -1.5);
    }

    #[test]
    fn csv_round_trip() {
        let mut ws = sample();
        ws.w1p[(1, 2)] = 0.1 + 0.2;
        let mut buf = Vec::new();
        ws.write_csv(&mut buf).unwrap();
        let back = WeightSet::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, ws);
    }

    #[test]
    fn rejects_negative_rails() {
        let mut ws = sample();
        ws.w2m[(0, 0)] = -0.5;
        assert!(ws.validate().is_err());
    }
}
