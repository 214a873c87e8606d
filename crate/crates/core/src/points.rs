//! Point sets and their on-disk formats.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const GKPT_MAGIC: &[u8; 4] = b"GKPT";

/// `n` points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    n: usize,
    d: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(n: usize, d: usize, coords: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if coords.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: coords.len(),
            });
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite coordinate at point {}, axis {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self { n, d, coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::InvalidInput(format!(
                "row {bad} has {} coordinates, expected {d}",
                rows[bad].len()
            )));
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn sq_dist(&self, i: usize, j: usize) -> f64 {
        sq_dist(self.point(i), self.point(j))
    }

    pub fn subset(&self, idx: &[usize]) -> PointSet {
        let mut coords = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            coords.extend_from_slice(self.point(i));
        }
        PointSet {
            n: idx.len(),
            d: self.d,
            coords,
        }
    }

    /// Applies `x -> (x - shift) * scale` to every point.
    pub fn affine(&self, shift: &[f64], scale: f64) -> PointSet {
        let coords = self
            .coords
            .chunks_exact(self.d)
            .flat_map(|p| p.iter().zip(shift).map(move |(x, s)| (x - s) * scale))
            .collect();
        PointSet {
            n: self.n,
            d: self.d,
            coords,
        }
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.d];
        for p in self.coords.chunks_exact(self.d) {
            for (ci, x) in c.iter_mut().zip(p) {
                *ci += x;
            }
        }
        if self.n > 0 {
            c.iter_mut().for_each(|ci| *ci /= self.n as f64);
        }
        c
    }

    /// Axis-aligned bounding box as `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.d];
        let mut hi = vec![f64::NEG_INFINITY; self.d];
        for p in self.coords.chunks_exact(self.d) {
            for k in 0..self.d {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Smallest and largest squared distance over distinct pairs. O(n^2 d).
    pub fn sq_dist_range(&self) -> Option<(f64, f64)> {
        if self.n < 2 {
            return None;
        }
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..self.n {
            let pi = self.point(i);
            for j in i + 1..self.n {
                let z = sq_dist(pi, self.point(j));
                lo = lo.min(z);
                hi = hi.max(z);
            }
        }
        Some((lo, hi))
    }

    /// Distance ratio `max ||x_i - x_j|| / min ||x_i - x_j||` over distinct pairs.
    pub fn alpha_dist(&self) -> Option<f64> {
        self.sq_dist_range().map(|(lo, hi)| (hi / lo).sqrt())
    }

    /// First pair of coincident points, if any.
    pub fn find_coincident(&self) -> Option<(usize, usize)> {
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&a, &b| {
            self.point(a)
                .iter()
                .zip(self.point(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        order
            .windows(2)
            .find(|w| self.point(w[0]) == self.point(w[1]))
            .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|e| {
                        Error::Parse(format!("line {}: {:?}: {e}", lineno + 1, t.trim()))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for p in self.coords.chunks_exact(self.d) {
            let line: Vec<String> = p.iter().map(|x| format!("{x:?}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_gkpt<R: Read>(mut reader: R) -> Result<Self> {
        let mut header = [0u8; 12];
        reader.read_exact(&mut header)?;
        if &header[0..4] != GKPT_MAGIC {
            return Err(Error::Parse("missing GKPT magic bytes".into()));
        }
        let n = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let mut buf = vec![0u8; n * d * 8];
        reader.read_exact(&mut buf)?;
        let coords = buf
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        Self::new(n, d, coords)
    }

    pub fn write_gkpt<W: Write>(&self, mut w: W) -> Result<()> {
        let n = u32::try_from(self.n).map_err(|_| Error::InvalidInput("n exceeds u32".into()))?;
        let d = u32::try_from(self.d).map_err(|_| Error::InvalidInput("d exceeds u32".into()))?;
        w.write_all(GKPT_MAGIC)?;
        w.write_all(&n.to_le_bytes())?;
        w.write_all(&d.to_le_bytes())?;
        for x in &self.coords {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    /// Loads a point file, detecting the binary format by its magic bytes.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(GKPT_MAGIC) {
            Self::read_gkpt(&bytes[..])
        } else {
            Self::read_csv(&bytes[..])
        }
    }

    /// Saves as GKPT when the extension is `gkpt`, CSV otherwise.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        if path.extension().is_some_and(|e| e == "gkpt") {
            self.write_gkpt(file)
        } else {
            self.write_csv(file)
        }
    }
}

/// Reads one value per line, skipping blank lines and `#` comments.
pub fn read_vector<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(t.parse().map_err(|e| Error::Parse(format!("line {}: {t:?}: {e}", lineno + 1)))?);
    }
    Ok(out)
}

pub fn write_vector<W: Write>(v: &[f64], mut w: W) -> Result<()> {
    for x in v {
        writeln!(w, "{x:?}")?;
    }
    Ok(())
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(PointSet::new(1, 2, vec![0.0, f64::NAN]).is_err());
        assert!(PointSet::new(1, 2, vec![0.0]).is_err());
    }

    #[test]
    fn gkpt_round_trip() {
        let p = PointSet::new(3, 2, vec![0.0, 1.5, -2.0, 3.25, 1e-300, 7.0]).unwrap();
        let mut buf = Vec::new();
        p.write_gkpt(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"GKPT");
        assert_eq!(buf.len(), 12 + 6 * 8);
        assert_eq!(PointSet::read_gkpt(&buf[..]).unwrap(), p);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let p = PointSet::new(2, 3, vec![0.1, 0.2, 0.30000000000000004, -1e-17, 5.0, 6.0]).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(PointSet::read_csv(&buf[..]).unwrap(), p);
    }

    #[test]
    fn vector_round_trip_is_exact() {
        let v = vec![0.1, -3.0, 1e-300, 0.30000000000000004];
        let mut buf = Vec::new();
        write_vector(&v, &mut buf).unwrap();
        assert_eq!(read_vector(&buf[..]).unwrap(), v);
        assert!(read_vector("1\nx\n".as_bytes()).is_err());
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        assert!(PointSet::read_csv("1,2\n3\n".as_bytes()).is_err());
    }

    #[test]
    fn coincident_detection() {
        let p = PointSet::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(p.find_coincident(), Some((0, 2)));
        let q = PointSet::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(q.find_coincident(), None);
    }

    #[test]
    fn distance_ratio() {
        let p = PointSet::from_rows(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(p.alpha_dist(), Some(3.0));
    }
}
