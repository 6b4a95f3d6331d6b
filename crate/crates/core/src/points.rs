//! Row-major storage for clouds of points in ℝᵈ.

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::scalar::Scalar;

/// A finite list of points of a common dimension, stored contiguously.
///
/// Serializes as a JSON array of coordinate arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet<T> {
    dim: usize,
    coords: Vec<T>,
}

impl<T: Scalar> PointSet<T> {
    pub fn new(dim: usize) -> Self {
        Self { dim, coords: Vec::new() }
    }

    pub fn with_capacity(dim: usize, n: usize) -> Self {
        Self { dim, coords: Vec::with_capacity(dim * n) }
    }

    /// Builds from flat row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(param!("point dimension must be positive"));
        }
        if coords.len() % dim != 0 {
            return Err(param!(
                "{} coordinates do not split into rows of length {}",
                coords.len(),
                dim
            ));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_rows<R: AsRef<[T]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let mut out = Self::with_capacity(dim, rows.len());
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(param!("row {} has {} coordinates, expected {}", i, r.len(), dim));
            }
            out.coords.extend_from_slice(r);
        }
        Ok(out)
    }

    pub fn push(&mut self, p: &[T]) {
        assert_eq!(p.len(), self.dim, "pushed point has wrong dimension");
        self.coords.extend_from_slice(p);
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.coords.len() / self.dim
        }
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[T] {
        &self.coords
    }

    /// Applies a permutation: row `i` of the output is row `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = Self::with_capacity(self.dim, perm.len());
        for &p in perm {
            out.push(self.row(p));
        }
        out
    }

    /// Largest pairwise distance, computed exactly in O(n²).
    pub fn diameter(&self) -> T {
        let mut best = T::zero();
        let n = self.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let d = crate::scalar::dist2(self.row(i), self.row(j));
                if d > best {
                    best = d;
                }
            }
        }
        best.sqrt()
    }

    pub fn to_vecs(&self) -> Vec<Vec<T>> {
        self.rows().map(|r| r.to_vec()).collect()
    }
}

impl<T: Scalar> Serialize for PointSet<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.len()))?;
        for r in self.rows() {
            seq.serialize_element(r)?;
        }
        seq.end()
    }
}

impl<'de, T: Scalar> Deserialize<'de> for PointSet<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct RowsVisitor<T>(std::marker::PhantomData<T>);

        impl<'de, T: Scalar> Visitor<'de> for RowsVisitor<T> {
            type Value = PointSet<T>;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("an array of equal-length coordinate arrays")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Self::Value, A::Error> {
                let mut dim = None;
                let mut coords = Vec::new();
                while let Some(row) = seq.next_element::<Vec<T>>()? {
                    match dim {
                        None => {
                            if row.is_empty() {
                                return Err(de::Error::custom("empty coordinate row"));
                            }
                            dim = Some(row.len());
                        }
                        Some(d) if d != row.len() => {
                            return Err(de::Error::custom(format!(
                                "row of length {} in a {}-dimensional point list",
                                row.len(),
                                d
                            )));
                        }
                        _ => {}
                    }
                    coords.extend(row);
                }
                // An empty list still needs a dimension; 1 is an arbitrary placeholder.
                Ok(PointSet { dim: dim.unwrap_or(1), coords })
            }
        }

        deserializer.deserialize_seq(RowsVisitor(std::marker::PhantomData))
    }
}
