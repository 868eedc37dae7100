//! The disk-to-half-plane Möbius map `T(z) = a (1 − z)/(1 + z)`.

use super::ConformalError;
use num_complex::Complex64;

/// Möbius transformation `T(z) = a (1 − z)/(1 + z)` taking the unit disk
/// onto the upper half-plane, with `T(1) = 0` and the unit circle going to
/// the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap {
    a: Complex64,
}

impl MobiusMap {
    pub fn coefficient(&self) -> Complex64 {
        self.a
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        self.a * (Complex64::new(1.0, 0.0) - z) / (Complex64::new(1.0, 0.0) + z)
    }

    /// Inverse map, half-plane back to the disk.
    pub fn invert(&self, w: Complex64) -> Complex64 {
        // w = a (1 - z)/(1 + z)  =>  z = (a - w)/(a + w).
        (self.a - w) / (self.a + w)
    }
}

/// Builds the Möbius map pinned to a unit-circle point `ξ1` in the open
/// first-quadrant arc: `T(ξ1) = 1`, `T(conj ξ1) = -1`, `T(1) = 0`.
///
/// The coefficient is `a = (1 + ξ1)/(1 − ξ1)`, which is purely imaginary
/// with positive imaginary part for the admitted arc, so the disk goes to
/// the upper half-plane.
pub fn mobius_disk_to_halfplane(xi1: Complex64) -> Result<MobiusMap, ConformalError> {
    if (xi1.norm() - 1.0).abs() > 1e-9 {
        return Err(ConformalError::InvalidNormalization(format!(
            "|xi1| = {} is not on the unit circle",
            xi1.norm()
        )));
    }
    if xi1.re <= 0.0 || xi1.im <= 0.0 {
        return Err(ConformalError::InvalidNormalization(
            "xi1 must lie on the open first-quadrant arc (Re > 0, Im > 0)".into(),
        ));
    }
    let one = Complex64::new(1.0, 0.0);
    Ok(MobiusMap {
        a: (one + xi1) / (one - xi1),
    })
}
