use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{RadialShape2D, SphericalShape3D};
use crate::{Error, Result};

/// On-disk shape document `{kind, center, order, coefficients}`.
///
/// Floats are written in shortest round-trip form, so reading a written
/// document reproduces every coefficient bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeDocument {
    pub kind: String,
    pub center: Vec<f64>,
    pub order: usize,
    pub coefficients: Vec<f64>,
}

pub const KIND_2D: &str = "radial2d";
pub const KIND_3D: &str = "spherical3d";

impl From<&RadialShape2D> for ShapeDocument {
    fn from(s: &RadialShape2D) -> Self {
        Self {
            kind: KIND_2D.into(),
            center: s.center().to_vec(),
            order: s.order(),
            coefficients: s.coefficients().to_vec(),
        }
    }
}

impl From<&SphericalShape3D> for ShapeDocument {
    fn from(s: &SphericalShape3D) -> Self {
        Self {
            kind: KIND_3D.into(),
            center: s.center().to_vec(),
            order: s.order(),
            coefficients: s.coefficients().to_vec(),
        }
    }
}

impl ShapeDocument {
    pub fn to_radial_2d(&self) -> Result<RadialShape2D> {
        if self.kind != KIND_2D {
            return Err(Error::InvalidInput(format!("expected kind '{KIND_2D}', got '{}'", self.kind)));
        }
        let center: [f64; 2] = self
            .center
            .as_slice()
            .try_into()
            .map_err(|_| Error::InvalidInput("2D center needs two entries".into()))?;
        if self.coefficients.len() != 2 * self.order + 1 {
            return Err(Error::InvalidInput("coefficient count does not match order".into()));
        }
        RadialShape2D::new(center, self.coefficients.clone())
    }

    pub fn to_spherical_3d(&self) -> Result<SphericalShape3D> {
        if self.kind != KIND_3D {
            return Err(Error::InvalidInput(format!("expected kind '{KIND_3D}', got '{}'", self.kind)));
        }
        let center: [f64; 3] = self
            .center
            .as_slice()
            .try_into()
            .map_err(|_| Error::InvalidInput("3D center needs three entries".into()))?;
        SphericalShape3D::new(center, self.order, self.coefficients.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
