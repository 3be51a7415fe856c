use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The room axis an array's broadside faces.
///
/// A planar array only sees the two in-plane direction cosines, so the sign
/// of the normal component has to come from how the array is mounted.
/// Each mount is a proper rotation taking room coordinates to the array's
/// local `(x', y', z')` frame with `z'` along the broadside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mount {
    PosX,
    NegX,
    PosY,
    NegY,
    #[default]
    PosZ,
    NegZ,
}

impl Mount {
    pub const ALL: [Mount; 6] = [
        Mount::PosX,
        Mount::NegX,
        Mount::PosY,
        Mount::NegY,
        Mount::PosZ,
        Mount::NegZ,
    ];

    pub fn to_local(self, v: &Vector3<f64>) -> Vector3<f64> {
        let (x, y, z) = (v.x, v.y, v.z);
        match self {
            Mount::PosZ => Vector3::new(x, y, z),
            Mount::NegZ => Vector3::new(x, -y, -z),
            Mount::PosY => Vector3::new(x, -z, y),
            Mount::NegY => Vector3::new(x, z, -y),
            Mount::PosX => Vector3::new(y, z, x),
            Mount::NegX => Vector3::new(y, -z, -x),
        }
    }

    pub fn to_room(self, v: &Vector3<f64>) -> Vector3<f64> {
        let (a, b, c) = (v.x, v.y, v.z);
        match self {
            Mount::PosZ => Vector3::new(a, b, c),
            Mount::NegZ => Vector3::new(a, -b, -c),
            Mount::PosY => Vector3::new(a, c, -b),
            Mount::NegY => Vector3::new(a, -c, b),
            Mount::PosX => Vector3::new(c, a, b),
            Mount::NegX => Vector3::new(-c, a, -b),
        }
    }

    /// Broadside direction in room coordinates.
    pub fn normal(self) -> Vector3<f64> {
        self.to_room(&Vector3::z())
    }
}

impl std::str::FromStr for Mount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "+x" | "pos_x" => Mount::PosX,
            "-x" | "neg_x" => Mount::NegX,
            "+y" | "pos_y" => Mount::PosY,
            "-y" | "neg_y" => Mount::NegY,
            "+z" | "pos_z" => Mount::PosZ,
            "-z" | "neg_z" => Mount::NegZ,
            _ => return Err(Error::Config(format!("unknown mount {s:?}"))),
        })
    }
}

/// Uniform rectangular array with half-wavelength spacing. Element `(a, b)`
/// sits at `lambda/2 * (a, b, 0)` in the local frame and has flat index
/// `a * ny + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub nx: usize,
    pub ny: usize,
    #[serde(default)]
    pub mount: Mount,
}

impl ArrayGeometry {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Argument(format!("array must be at least 1x1, got {nx}x{ny}")));
        }
        Ok(Self {
            nx,
            ny,
            mount: Mount::PosZ,
        })
    }

    pub fn with_mount(self, mount: Mount) -> Self {
        Self { mount, ..self }
    }

    /// Number of elements.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when `direction` (room frame) lies strictly in front of the array.
    pub fn sees(&self, direction: &Vector3<f64>) -> bool {
        self.mount.to_local(direction).z > 0.0
    }
}

/// `[a(d)]_n = exp(-j pi n d)`, `n = 0..n-1`.
pub fn partial_steering(n: usize, d: f64) -> Vec<Complex64> {
    (0..n)
        .map(|i| Complex64::from_polar(1.0, -std::f64::consts::PI * i as f64 * d))
        .collect()
}

pub(crate) fn check_unit(v: &Vector3<f64>, tol: f64) -> Result<()> {
    let n = v.norm();
    if (n - 1.0).abs() > tol || !n.is_finite() {
        return Err(Error::Domain(format!("direction {v:?} has norm {n}, expected 1")));
    }
    Ok(())
}

/// Steering vector `a^x(d_x) ⊗ a^y(d_y)` toward a room-frame `direction`,
/// with `(d_x, d_y)` its in-plane cosines in the array frame.
pub fn steering(array: &ArrayGeometry, direction: &Vector3<f64>) -> Result<Vec<Complex64>> {
    check_unit(direction, 1e-9)?;
    let local = array.mount.to_local(direction);
    let ax = partial_steering(array.nx, local.x);
    let ay = partial_steering(array.ny, local.y);
    Ok(ax.iter().flat_map(|a| ay.iter().map(move |b| a * b)).collect())
}
