//! Electromagnetic media and the bare two-media interface.
//!
//! All quantities use the `e^{+jwt}` time convention: a lossy medium has a
//! complex permittivity with negative imaginary part, and the propagation
//! constant `k = beta - j*alpha` carries attenuation in its imaginary part.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{check_frequency, Error, Result};

/// Permittivity of vacuum in F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Impedance of free space in ohms.
pub const FREE_SPACE_IMPEDANCE: f64 = 376.730_313_668;
/// Speed of light in vacuum in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Default operating frequency (2.4 GHz ISM band).
pub const DEFAULT_FREQUENCY: f64 = 2.4e9;

pub fn angular_frequency(frequency: f64) -> f64 {
    2.0 * PI * frequency
}

/// A homogeneous, isotropic, non-magnetic material.
#[derive(Debug, Clone, PartialEq)]
pub struct Medium {
    name: String,
    relative_permittivity: f64,
    relative_permeability: f64,
    conductivity: f64,
}

impl Medium {
    /// Creates a medium with `mu_r = 1`.
    pub fn new(name: impl Into<String>, relative_permittivity: f64, conductivity: f64) -> Result<Self> {
        let name = name.into();
        if !(relative_permittivity.is_finite() && relative_permittivity >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "medium `{name}`: relative permittivity must be >= 1, got {relative_permittivity}"
            )));
        }
        if !(conductivity.is_finite() && conductivity >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "medium `{name}`: conductivity must be >= 0, got {conductivity}"
            )));
        }
        Ok(Self {
            name,
            relative_permittivity,
            relative_permeability: 1.0,
            conductivity,
        })
    }

    fn builtin(name: &str, relative_permittivity: f64) -> Self {
        Self {
            name: name.to_string(),
            relative_permittivity,
            relative_permeability: 1.0,
            conductivity: 0.0,
        }
    }

    pub fn air() -> Self {
        Self::builtin("air", 1.0)
    }

    pub fn water() -> Self {
        Self::builtin("water", 81.0)
    }

    pub fn skin() -> Self {
        Self::builtin("skin", 43.75)
    }

    pub fn fat() -> Self {
        Self::builtin("fat", 5.46)
    }

    pub fn muscle() -> Self {
        Self::builtin("muscle", 55.03)
    }

    /// Looks up one of the built-in lossless media by name.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "air" => Some(Self::air()),
            "water" => Some(Self::water()),
            "skin" => Some(Self::skin()),
            "fat" => Some(Self::fat()),
            "muscle" => Some(Self::muscle()),
            _ => None,
        }
    }

    /// Names of the built-in media, in registry order.
    pub fn builtin_names() -> [&'static str; 5] {
        ["air", "water", "skin", "fat", "muscle"]
    }

    /// Returns a copy of this medium with the given conductivity.
    pub fn with_conductivity(&self, conductivity: f64) -> Result<Self> {
        let name = if conductivity > 0.0 {
            format!("{}-lossy", self.name)
        } else {
            self.name.clone()
        };
        Medium::new(name, self.relative_permittivity, conductivity)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn relative_permittivity(&self) -> f64 {
        self.relative_permittivity
    }

    pub fn relative_permeability(&self) -> f64 {
        self.relative_permeability
    }

    pub fn conductivity(&self) -> f64 {
        self.conductivity
    }

    pub fn is_lossless(&self) -> bool {
        self.conductivity == 0.0
    }

    /// `eps_r - j*sigma/(w*eps_0)`.
    pub fn complex_permittivity(&self, frequency: f64) -> Result<Complex64> {
        check_frequency(frequency)?;
        let omega = angular_frequency(frequency);
        Ok(Complex64::new(
            self.relative_permittivity,
            -self.conductivity / (omega * VACUUM_PERMITTIVITY),
        ))
    }

    /// Wave impedance `Z_0 * sqrt(mu_r / eps_c)` (principal root, positive real part).
    pub fn intrinsic_impedance(&self, frequency: f64) -> Result<Complex64> {
        let eps = self.complex_permittivity(frequency)?;
        Ok((Complex64::from(self.relative_permeability) / eps).sqrt() * FREE_SPACE_IMPEDANCE)
    }

    /// Propagation constant `(w/c) * sqrt(mu_r * eps_c)` in rad/m.
    pub fn phase_constant(&self, frequency: f64) -> Result<Complex64> {
        let eps = self.complex_permittivity(frequency)?;
        let omega = angular_frequency(frequency);
        Ok((eps * self.relative_permeability).sqrt() * (omega / SPEED_OF_LIGHT))
    }
}

/// A slab of a medium with finite thickness in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub medium: Medium,
    pub thickness: f64,
}

impl Layer {
    pub fn new(medium: Medium, thickness: f64) -> Result<Self> {
        if !(thickness.is_finite() && thickness > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "layer `{}`: thickness must be positive and finite, got {thickness}",
                medium.name()
            )));
        }
        Ok(Self { medium, thickness })
    }

    pub fn from_mm(medium: Medium, thickness_mm: f64) -> Result<Self> {
        Self::new(medium, thickness_mm * 1e-3)
    }
}

/// Reflection and transmission at a single planar interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FresnelResult {
    pub gamma: Complex64,
    pub t: Complex64,
    pub reflected_power: f64,
    pub through_power: f64,
}

/// Ratio of time-averaged power densities for equal field amplitudes,
/// `Re(1/Z_dst) / Re(1/Z_src)`. Reduces to `Z_src / Z_dst` for real impedances.
pub(crate) fn power_ratio(z_src: Complex64, z_dst: Complex64) -> f64 {
    z_dst.inv().re / z_src.inv().re
}

/// Normal-incidence interface between two half-spaces.
pub fn fresnel_interface(src: &Medium, dst: &Medium, frequency: f64) -> Result<FresnelResult> {
    let z_src = src.intrinsic_impedance(frequency)?;
    let z_dst = dst.intrinsic_impedance(frequency)?;
    let gamma = (z_dst - z_src) / (z_dst + z_src);
    let t = Complex64::new(1.0, 0.0) + gamma;
    Ok(FresnelResult {
        gamma,
        t,
        reflected_power: gamma.norm_sqr(),
        through_power: t.norm_sqr() * power_ratio(z_src, z_dst),
    })
}
