//! Dense real vectors of small dimension.

use std::fmt;
use std::ops::{Add, Deref, Index, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, WcError};

/// A point in ℝⁿ.
///
/// Vectors read from external input are required to be finite; vectors built
/// internally are trusted. JSON accepts either an array or a bare number
/// (shorthand for a 1-vector).
#[derive(Clone, PartialEq, Default)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Self {
        Vector(coords)
    }

    /// Checked constructor for untrusted input.
    pub fn try_new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(WcError::InvalidArgument("vector must have dimension ≥ 1".into()));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(WcError::InvalidArgument(format!("vector entries must be finite, got {bad}")));
        }
        Ok(Vector(coords))
    }

    pub fn scalar(value: f64) -> Self {
        Vector(vec![value])
    }

    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    pub fn filled(n: usize, value: f64) -> Self {
        Vector(vec![value; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, k: f64) -> Vector {
        Vector(self.0.iter().map(|a| a * k).collect())
    }

    pub fn dist(&self, other: &Vector) -> f64 {
        dist(&self.0, &other.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector(self.0.iter().map(|&c| f(c)).collect())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl From<&[f64]> for Vector {
    fn from(v: &[f64]) -> Self {
        Vector(v.to_vec())
    }
}

impl From<f64> for Vector {
    fn from(v: f64) -> Self {
        Vector(vec![v])
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul<f64> for &Vector {
    type Output = Vector;
    fn mul(self, k: f64) -> Vector {
        self.scale(k)
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scale(-1.0)
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for Vector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Scalar(f64),
            Coords(Vec<f64>),
        }
        let coords = match Repr::deserialize(d)? {
            Repr::Scalar(x) => vec![x],
            Repr::Coords(c) => c,
        };
        Vector::try_new(coords).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let a = Vector::new(vec![1.0, 2.0]);
        let b = Vector::new(vec![3.0, -1.0]);
        assert_eq!((&a + &b).as_slice(), &[4.0, 1.0]);
        assert_eq!((&a - &b).as_slice(), &[-2.0, 3.0]);
        assert_eq!(a.dot(&b), 1.0);
        assert_eq!((&a * 2.0).as_slice(), &[2.0, 4.0]);
        assert!((Vector::new(vec![3.0, 4.0]).norm() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn json_accepts_scalar_and_array() {
        let v: Vector = serde_json::from_str("1.5").unwrap();
        assert_eq!(v.as_slice(), &[1.5]);
        let w: Vector = serde_json::from_str("[1, 2]").unwrap();
        assert_eq!(w.as_slice(), &[1.0, 2.0]);
        assert!(serde_json::from_str::<Vector>("[]").is_err());
        assert_eq!(serde_json::to_string(&w).unwrap(), "[1.0,2.0]");
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Vector::try_new(vec![f64::NAN]).is_err());
        assert!(Vector::try_new(vec![1.0, f64::INFINITY]).is_err());
    }
}
