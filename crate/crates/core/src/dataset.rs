use rand::Rng;

use crate::error::{invalid, Error, Result};

/// An ordered multiset of points in `[0,1]^d`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    coords: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        Ok(Self { dim, coords: Vec::new() })
    }

    pub fn with_capacity(dim: usize, points: usize) -> Result<Self> {
        let mut ds = Self::new(dim)?;
        ds.coords.reserve(points * dim);
        Ok(ds)
    }

    /// Builds a dataset from a flat row-major coordinate buffer.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if coords.len() % dim != 0 {
            return Err(invalid(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_points<I, P>(dim: usize, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = P>,
        P: AsRef<[f64]>,
    {
        let mut ds = Self::new(dim)?;
        for p in points {
            ds.push(p.as_ref())?;
        }
        Ok(ds)
    }

    /// `n` i.i.d. uniform points on `[0,1)^d`.
    pub fn uniform<R: Rng + ?Sized>(dim: usize, n: usize, rng: &mut R) -> Result<Self> {
        let mut ds = Self::with_capacity(dim, n)?;
        ds.coords.extend((0..n * dim).map(|_| rng.random::<f64>()));
        Ok(ds)
    }

    pub fn push(&mut self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: point.len() });
        }
        self.coords.extend_from_slice(point);
        Ok(())
    }

    /// Appends `copies` copies of `point`.
    pub fn push_repeated(&mut self, point: &[f64], copies: usize) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: point.len() });
        }
        self.coords.reserve(copies * self.dim);
        for _ in 0..copies {
            self.coords.extend_from_slice(point);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Fails on the first coordinate outside `[0, 1]` (or NaN).
    pub fn check_unit_cube(&self) -> Result<()> {
        for (row, p) in self.points().enumerate() {
            check_point(p).map_err(|(column, value)| Error::OutOfDomain { row, column, value })?;
        }
        Ok(())
    }
}

pub(crate) fn check_point(p: &[f64]) -> std::result::Result<(), (usize, f64)> {
    match p.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(column) => Err((column, p[column])),
        None => Ok(()),
    }
}

/// ℓ∞ distance between two points of equal dimension.
pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_out_of_range() {
        assert!(Dataset::from_flat(2, vec![0.1, 0.2, 0.3]).is_err());
        let ds = Dataset::from_points(2, [[0.1, 0.2], [0.5, 1.2]]).unwrap();
        match ds.check_unit_cube() {
            Err(Error::OutOfDomain { row: 1, column: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let nan = Dataset::from_points(1, [[f64::NAN]]).unwrap();
        assert!(nan.check_unit_cube().is_err());
    }

    #[test]
    fn linf_is_max_coordinate_gap() {
        assert_eq!(linf(&[0.0, 0.0], &[0.25, -0.5]), 0.5);
    }
}
