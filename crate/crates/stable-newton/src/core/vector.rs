use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::CoreError;

/// Dense real vector with finite entries.
///
/// Construction rejects NaN and infinite entries so downstream numerics can
/// rely on finiteness without re-checking.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    inner: DVector<f64>,
}

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self, CoreError> {
        if let Some(bad) = entries.iter().find(|e| !e.is_finite()) {
            return Err(CoreError::NonFinite {
                what: format!("vector entry {bad}"),
            });
        }
        Ok(Self {
            inner: DVector::from_vec(entries),
        })
    }

    pub fn from_slice(entries: &[f64]) -> Result<Self, CoreError> {
        Self::new(entries.to_vec())
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            inner: DVector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.inner.as_slice()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.inner.iter()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.inner.dot(&other.inner)
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner.norm()
    }

    pub fn norm_linf(&self) -> f64 {
        self.inner.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// self + alpha * other
    pub fn add_scaled(&self, alpha: f64, other: &Vector) -> Vector {
        Vector {
            inner: &self.inner + alpha * &other.inner,
        }
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        Vector {
            inner: &self.inner - &other.inner,
        }
    }

    pub fn scale(&self, alpha: f64) -> Vector {
        Vector {
            inner: alpha * &self.inner,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.inner.iter().all(|v| v.is_finite())
    }

    pub(crate) fn from_dvector(inner: DVector<f64>) -> Self {
        Self { inner }
    }

    pub(crate) fn as_dvector(&self) -> &DVector<f64> {
        &self.inner
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.inner[i]
    }
}

impl std::fmt::Display for Vector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.inner.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

impl Serialize for Vector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let entries = Vec::<f64>::deserialize(d)?;
        Vector::new(entries).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
        assert!(Vector::new(vec![1.0, -2.5]).is_ok());
    }

    #[test]
    fn norms() {
        let v = Vector::from_slice(&[3.0, -4.0]).unwrap();
        assert_eq!(v.norm_l2(), 5.0);
        assert_eq!(v.norm_linf(), 4.0);
        assert_eq!(v.dot(&v), 25.0);
    }
}
