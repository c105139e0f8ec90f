//! Cascaded two-port model of a shunt surface in front of layered media.
//!
//! Each slab is a transmission line and the surface is a shunt admittance.
//! The chain matrix maps `(E, H)` at the load-side port to the source-side
//! port, and the end-to-end `T` and `Gamma` follow from terminating it in the
//! source and load half-space impedances.

use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{check_frequency, Error, Result};
use crate::media::{power_ratio, Layer, Medium};

/// Denominators below this magnitude are treated as singular.
pub const SINGULARITY_THRESHOLD: f64 = 1e-12;
/// Floor applied when dB values are written to files.
pub const DB_FLOOR: f64 = -200.0;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const J: Complex64 = Complex64::new(0.0, 1.0);

/// 2x2 complex chain (ABCD) matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbcdMatrix {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl AbcdMatrix {
    pub const IDENTITY: AbcdMatrix = AbcdMatrix {
        a: ONE,
        b: ZERO,
        c: ZERO,
        d: ONE,
    };

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self { a, b, c, d }
    }

    /// Shunt element `[[1, 0], [Y, 1]]`.
    pub fn shunt(admittance: Complex64) -> Result<Self> {
        if !(admittance.re.is_finite() && admittance.im.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "shunt admittance must be finite, got {admittance}"
            )));
        }
        Ok(Self::new(ONE, ZERO, admittance, ONE))
    }

    /// Transmission-line section for a slab at normal incidence.
    pub fn line(layer: &Layer, frequency: f64) -> Result<Self> {
        check_frequency(frequency)?;
        if !(layer.thickness.is_finite() && layer.thickness > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "layer thickness must be positive, got {}",
                layer.thickness
            )));
        }
        let k = layer.medium.phase_constant(frequency)?;
        let z = layer.medium.intrinsic_impedance(frequency)?;
        let phase = k * layer.thickness;
        let (cos, sin) = (phase.cos(), phase.sin());
        Ok(Self::new(cos, J * z * sin, J * sin / z, cos))
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det.norm() < SINGULARITY_THRESHOLD {
            return None;
        }
        Some(Self::new(self.d / det, -self.b / det, -self.c / det, self.a / det))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self.a - other.a).norm() <= tol
            && (self.b - other.b).norm() <= tol
            && (self.c - other.c).norm() <= tol
            && (self.d - other.d).norm() <= tol
    }
}

impl Mul for AbcdMatrix {
    type Output = AbcdMatrix;

    fn mul(self, rhs: AbcdMatrix) -> AbcdMatrix {
        AbcdMatrix {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }
}

/// Product of chain matrices in propagation order, source side first.
pub fn cascade(matrices: &[AbcdMatrix]) -> Result<AbcdMatrix> {
    let (first, rest) = matrices
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("cascade needs at least one matrix".into()))?;
    Ok(rest.iter().fold(*first, |acc, m| acc * *m))
}

/// Source half-space, finite slabs, load half-space, and where the surface sits.
#[derive(Debug, Clone, PartialEq)]
pub struct StackSpec {
    pub source: Medium,
    pub layers: Vec<Layer>,
    pub load: Medium,
    /// Number of layers between the source half-space and the surface.
    pub surface_index: usize,
}

/// Thicknesses of the default air-to-tissue stack, in millimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TissueGeometry {
    pub gap_mm: f64,
    pub skin_mm: f64,
    pub fat_mm: f64,
}

impl Default for TissueGeometry {
    fn default() -> Self {
        Self {
            gap_mm: 6.0,
            skin_mm: 2.0,
            fat_mm: 15.0,
        }
    }
}

/// Default surface-to-media gap in millimetres.
pub const DEFAULT_GAP_MM: f64 = 6.0;

impl StackSpec {
    pub fn new(source: Medium, layers: Vec<Layer>, load: Medium) -> Self {
        Self {
            source,
            layers,
            load,
            surface_index: 0,
        }
    }

    pub fn with_surface_index(mut self, index: usize) -> Self {
        self.surface_index = index;
        self
    }

    /// Bare interface between two half-spaces.
    pub fn interface(source: Medium, load: Medium) -> Self {
        Self::new(source, Vec::new(), load)
    }

    /// Surface, air gap, then a water half-space.
    pub fn air_water(gap_mm: f64) -> Result<Self> {
        Ok(Self::new(
            Medium::air(),
            vec![Layer::from_mm(Medium::air(), gap_mm)?],
            Medium::water(),
        ))
    }

    /// Surface, air gap, skin, fat, then a muscle half-space.
    pub fn air_tissue(geometry: TissueGeometry) -> Result<Self> {
        Ok(Self::new(
            Medium::air(),
            vec![
                Layer::from_mm(Medium::air(), geometry.gap_mm)?,
                Layer::from_mm(Medium::skin(), geometry.skin_mm)?,
                Layer::from_mm(Medium::fat(), geometry.fat_mm)?,
            ],
            Medium::muscle(),
        ))
    }

    /// Adds a slab of load medium in front of the load half-space, placing
    /// the observation point `depth` metres inside the load.
    pub fn with_load_depth(mut self, depth: f64) -> Result<Self> {
        self.layers.push(Layer::new(self.load.clone(), depth)?);
        Ok(self)
    }

    /// The same physical stack seen from the load side.
    pub fn reversed(&self) -> Self {
        Self {
            source: self.load.clone(),
            layers: self.layers.iter().rev().cloned().collect(),
            load: self.source.clone(),
            surface_index: self.layers.len() - self.surface_index,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.surface_index > self.layers.len() {
            return Err(Error::InvalidArgument(format!(
                "surface index {} exceeds layer count {}",
                self.surface_index,
                self.layers.len()
            )));
        }
        for layer in &self.layers {
            if !(layer.thickness.is_finite() && layer.thickness > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "layer `{}` has non-positive thickness {}",
                    layer.medium.name(),
                    layer.thickness
                )));
            }
        }
        Ok(())
    }

    pub fn is_lossless(&self) -> bool {
        self.source.is_lossless() && self.load.is_lossless() && self.layers.iter().all(|l| l.medium.is_lossless())
    }

    /// Chain matrix with the shunt inserted at `surface_index`.
    pub fn abcd(&self, surface_admittance: Complex64, frequency: f64) -> Result<AbcdMatrix> {
        self.validate()?;
        let mut chain = Vec::with_capacity(self.layers.len() + 1);
        for (i, layer) in self.layers.iter().enumerate() {
            if i == self.surface_index {
                chain.push(AbcdMatrix::shunt(surface_admittance)?);
            }
            chain.push(AbcdMatrix::line(layer, frequency)?);
        }
        if self.surface_index == self.layers.len() {
            chain.push(AbcdMatrix::shunt(surface_admittance)?);
        }
        cascade(&chain)
    }

    pub fn solve(&self, surface_admittance: Complex64, frequency: f64) -> Result<CascadeSolution> {
        solve_stack(self, surface_admittance, frequency)
    }
}

/// End-to-end field ratios and power fractions of a solved stack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeSolution {
    /// `E_load^+ / E_source^+`.
    pub t: Complex64,
    /// `E_source^- / E_source^+`.
    pub gamma: Complex64,
    pub through_power: f64,
    pub reflected_power: f64,
}

impl CascadeSolution {
    pub fn through_power_db(&self) -> f64 {
        power_db(self.through_power)
    }

    pub fn reflected_power_db(&self) -> f64 {
        power_db(self.reflected_power)
    }
}

/// `10 log10(p)`, or `-inf` when `p <= 0`.
pub fn power_db(power: f64) -> f64 {
    if power > 0.0 {
        10.0 * power.log10()
    } else {
        f64::NEG_INFINITY
    }
}

/// Clamps to [`DB_FLOOR`] so CSV output stays finite.
pub fn floor_db(db: f64) -> f64 {
    if db.is_nan() {
        DB_FLOOR
    } else {
        db.max(DB_FLOOR)
    }
}

pub fn solve_stack(stack: &StackSpec, surface_admittance: Complex64, frequency: f64) -> Result<CascadeSolution> {
    let m = stack.abcd(surface_admittance, frequency)?;
    let z_src = stack.source.intrinsic_impedance(frequency)?;
    let z_load = stack.load.intrinsic_impedance(frequency)?;
    let forward = m.a + m.b / z_load;
    let backward = m.c * z_src + m.d * z_src / z_load;
    let denom = forward + backward;
    if denom.norm() < SINGULARITY_THRESHOLD || !denom.norm().is_finite() {
        return Err(Error::DegenerateStack {
            magnitude: denom.norm(),
        });
    }
    let t = Complex64::new(2.0, 0.0) / denom;
    let gamma = (forward - backward) / denom;
    Ok(CascadeSolution {
        t,
        gamma,
        through_power: t.norm_sqr() * power_ratio(z_src, z_load),
        reflected_power: gamma.norm_sqr(),
    })
}

pub fn through_power_db(stack: &StackSpec, surface_admittance: Complex64, frequency: f64) -> Result<f64> {
    Ok(solve_stack(stack, surface_admittance, frequency)?.through_power_db())
}
