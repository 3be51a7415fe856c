//! Image-method ground truth for an empty axis-aligned room.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::PathParams;
use crate::error::{Error, Result};
use crate::locate::PathClass;
use crate::SPEED_OF_LIGHT;

/// Box `[0, lx] x [0, ly] x [0, lz]` with the floor at `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
}

impl Room {
    pub fn new(lx: f64, ly: f64, lz: f64) -> Result<Self> {
        let room = Self { lx, ly, lz };
        room.validate()?;
        Ok(room)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.lx, self.ly, self.lz].iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("room extents must be positive, got {self:?}")));
        }
        Ok(())
    }

    pub fn extents(&self) -> Vector3<f64> {
        Vector3::new(self.lx, self.ly, self.lz)
    }

    pub fn contains_strictly(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|k| p[k] > 0.0 && p[k] < self.extents()[k])
    }
}

/// Access point (anchor) and user positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub anchor: Vector3<f64>,
    pub user: Vector3<f64>,
}

impl Placement {
    pub fn new(room: &Room, anchor: Vector3<f64>, user: Vector3<f64>) -> Result<Self> {
        for (name, p) in [("anchor", anchor), ("user", user)] {
            if !room.contains_strictly(&p) {
                return Err(Error::Domain(format!("{name} {p:?} is not strictly inside the room")));
            }
        }
        if anchor == user {
            return Err(Error::Domain("anchor and user coincide".into()));
        }
        Ok(Self { anchor, user })
    }
}

/// A reflecting surface: the plane `x_axis = offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Surface {
    pub axis: usize,
    pub offset: f64,
}

impl Surface {
    pub fn all(room: &Room) -> [Surface; 6] {
        let e = room.extents();
        [
            Surface { axis: 0, offset: 0.0 },
            Surface { axis: 0, offset: e.x },
            Surface { axis: 1, offset: 0.0 },
            Surface { axis: 1, offset: e.y },
            Surface { axis: 2, offset: 0.0 },
            Surface { axis: 2, offset: e.z },
        ]
    }

    pub fn mirror_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let mut q = *p;
        q[self.axis] = 2.0 * self.offset - p[self.axis];
        q
    }

    pub fn is_vertical(&self) -> bool {
        self.axis != 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceOptions {
    #[serde(default = "default_loss")]
    pub reflection_loss_db: f64,
    /// Carrier wavelength for the gain phase and free-space factor.
    #[serde(default = "default_wavelength")]
    pub wavelength_m: f64,
    /// Also emit second-order images, labelled spurious.
    #[serde(default)]
    pub second_order: bool,
}

fn default_loss() -> f64 {
    6.0
}

fn default_wavelength() -> f64 {
    SPEED_OF_LIGHT / 60e9
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            reflection_loss_db: default_loss(),
            wavelength_m: default_wavelength(),
            second_order: false,
        }
    }
}

/// One generated path with its construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TracedPath {
    pub params: PathParams,
    pub class: PathClass,
    /// Virtual image of the user the anchor sees along the path.
    pub image: Vector3<f64>,
    pub bounces: Vec<Surface>,
}

fn path_from_image(
    placement: &Placement,
    bounces: Vec<Surface>,
    class: PathClass,
    opts: &TraceOptions,
) -> Result<TracedPath> {
    let image = bounces.iter().fold(placement.user, |p, s| s.mirror_point(&p));
    let d = (image - placement.anchor).norm();
    let doa = (image - placement.anchor) / d;
    // Leaving the user toward the first bounce: the reversed arrival ray,
    // mirrored back through every surface.
    let mut dod = -doa;
    for s in &bounces {
        dod[s.axis] = -dod[s.axis];
    }
    let lambda = opts.wavelength_m;
    let magnitude = lambda / (4.0 * std::f64::consts::PI * d)
        * 10f64.powf(-(bounces.len() as f64) * opts.reflection_loss_db / 20.0);
    let gain = Complex64::from_polar(magnitude, -2.0 * std::f64::consts::PI * d / lambda);
    Ok(TracedPath {
        params: PathParams::new(gain, doa, dod, d / SPEED_OF_LIGHT)?,
        class,
        image,
        bounces,
    })
}

/// LoS plus the six first-order reflections, in the order LoS, walls
/// `x = 0`, `x = lx`, `y = 0`, `y = ly`, floor, ceiling; then, if requested,
/// the distinct second-order images.
pub fn trace_paths(room: &Room, placement: &Placement, opts: &TraceOptions) -> Result<Vec<TracedPath>> {
    room.validate()?;
    let surfaces = Surface::all(room);
    let mut out = vec![path_from_image(placement, vec![], PathClass::LineOfSight, opts)?];
    for s in surfaces {
        let class = if s.is_vertical() {
            PathClass::WallReflection
        } else {
            PathClass::FloorCeilingReflection
        };
        out.push(path_from_image(placement, vec![s], class, opts)?);
    }
    if opts.second_order {
        let mut seen: Vec<Vector3<f64>> = Vec::new();
        for first in surfaces {
            for second in surfaces {
                if first == second {
                    continue;
                }
                let p = path_from_image(placement, vec![first, second], PathClass::Spurious, opts)?;
                if seen.iter().any(|q| (q - p.image).norm() < 1e-12) {
                    continue;
                }
                seen.push(p.image);
                out.push(p);
            }
        }
    }
    Ok(out)
}

pub fn ground_truth_classes(paths: &[TracedPath]) -> Vec<PathClass> {
    paths.iter().map(|p| p.class).collect()
}
