//! Real spherical harmonics up to degree 2, in the usual (l, m) order.

use crate::error::{Error, Result};
use crate::geometry::Vec3;

pub const SH_C0: f64 = 0.282_094_791_773_878_14;
pub const SH_C1: f64 = 0.488_602_511_902_919_9;
pub const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];

/// Number of basis functions for `degree`.
pub fn sh_len(degree: u32) -> usize {
    ((degree + 1) * (degree + 1)) as usize
}

/// Basis values of unit direction `d`. Fails for degrees above 2 or when `d`
/// is not unit length.
pub fn eval_sh_basis(d: &Vec3, degree: u32) -> Result<Vec<f64>> {
    if degree > 2 {
        return Err(Error::InvalidField(format!("spherical harmonics degree {degree} > 2")));
    }
    let norm = d.norm();
    if !((norm - 1.0).abs() <= 1e-6) {
        return Err(Error::UnnormalizedDirection(norm));
    }
    let mut out = [0.0; 9];
    sh_basis_into(d, degree, &mut out);
    Ok(out[..sh_len(degree)].to_vec())
}

/// Unchecked variant writing the first `sh_len(degree)` entries of `out`.
#[inline]
pub(crate) fn sh_basis_into(d: &Vec3, degree: u32, out: &mut [f64; 9]) {
    let (x, y, z) = (d.x, d.y, d.z);
    out[0] = SH_C0;
    if degree >= 1 {
        out[1] = -SH_C1 * y;
        out[2] = SH_C1 * z;
        out[3] = -SH_C1 * x;
    }
    if degree >= 2 {
        out[4] = SH_C2[0] * x * y;
        out[5] = SH_C2[1] * y * z;
        out[6] = SH_C2[2] * (2.0 * z * z - x * x - y * y);
        out[7] = SH_C2[3] * x * z;
        out[8] = SH_C2[4] * (x * x - y * y);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(eval_sh_basis(&Vec3::x(), 0).unwrap(), vec![SH_C0]);
        let b = eval_sh_basis(&Vec3::z(), 1).unwrap();
        assert_eq!(b[1], 0.0);
        assert!((b[2] - (3.0 / (4.0 * std::f64::consts::PI)).sqrt()).abs() < 1e-12);
        assert_eq!(b[3], 0.0);
        assert!(matches!(eval_sh_basis(&Vec3::new(1.0, 1.0, 0.0), 1), Err(Error::UnnormalizedDirection(_))));
        assert!(eval_sh_basis(&Vec3::z(), 3).is_err());
    }
}
