//! `VRF1` binary field files (little-endian).
//!
//! ```text
//! "VRF1"  u32 nx ny nz  f64 min.x min.y min.z max.x max.y max.z  u32 sh_degree
//! f32 density[nx*ny*nz]            (x fastest)
//! f32 coeffs[nx*ny*nz * 3 * (sh_degree+1)^2]   (per node, channel-major)
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::field::sh::sh_len;
use crate::field::VoxelRadianceField;
use crate::geometry::{Aabb, Point3};
use crate::io_util::write_atomic;

pub const FIELD_MAGIC: &[u8; 4] = b"VRF1";

pub fn field_to_bytes(field: &VoxelRadianceField) -> Vec<u8> {
    let mut out = Vec::with_capacity(68 + 4 * (field.density().len() + field.coeffs().len()));
    out.extend_from_slice(FIELD_MAGIC);
    for d in field.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    let dom = field.domain();
    for v in dom.min.iter().chain(dom.max.iter()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&field.sh_degree().to_le_bytes());
    for v in field.density().iter().chain(field.coeffs()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Little-endian cursor that reports truncation with the name of the missing part.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Truncated(format!("missing {what} at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    pub(crate) fn f32s(&mut self, count: usize, what: &str) -> Result<Vec<f32>> {
        let len = count
            .checked_mul(4)
            .ok_or_else(|| Error::Truncated(format!("{what} size overflows")))?;
        let raw = self.take(len, what)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

/// Checks a 4-byte magic of the form `<tag><version>` against `expected`.
pub(crate) fn check_magic(r: &mut Reader, expected: &[u8; 4]) -> Result<()> {
    let magic: [u8; 4] = r.take(4, "magic")?.try_into().unwrap();
    if &magic == expected {
        return Ok(());
    }
    if magic[..3] == expected[..3] && magic[3].is_ascii_digit() {
        return Err(Error::UnsupportedVersion(String::from_utf8_lossy(&magic).into_owned()));
    }
    Err(Error::BadMagic(magic))
}

pub fn field_from_bytes(bytes: &[u8]) -> Result<VoxelRadianceField> {
    let mut r = Reader::new(bytes);
    check_magic(&mut r, FIELD_MAGIC)?;
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = r.u32("grid dimensions")? as usize;
    }
    let mut v = [0.0; 6];
    for x in &mut v {
        *x = r.f64("domain")?;
    }
    let domain = Aabb::new(Point3::new(v[0], v[1], v[2]), Point3::new(v[3], v[4], v[5]))
        .map_err(|e| Error::InvalidField(e.to_string()))?;
    let degree = r.u32("sh degree")?;
    if degree > 2 {
        return Err(Error::InvalidField(format!("spherical harmonics degree {degree} > 2")));
    }
    let nodes = dims[0]
        .checked_mul(dims[1])
        .and_then(|n| n.checked_mul(dims[2]))
        .ok_or_else(|| Error::InvalidField("grid dimensions overflow".into()))?;
    let density = r.f32s(nodes, "density")?;
    let coeffs = r.f32s(nodes * 3 * sh_len(degree), "coefficients")?;
    if r.remaining() != 0 {
        return Err(Error::InvalidField(format!("{} trailing bytes", r.remaining())));
    }
    VoxelRadianceField::new(dims, domain, degree, density, coeffs)
}

pub fn save_field(field: &VoxelRadianceField, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &field_to_bytes(field))
}

pub fn load_field(path: impl AsRef<Path>) -> Result<VoxelRadianceField> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).at(path))?;
    field_from_bytes(&bytes).map_err(|e| e.at(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VoxelRadianceField {
        let b = Aabb::new(Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0)).unwrap();
        VoxelRadianceField::constant([2, 2, 2], b, 1.5, [0.2, 0.4, 0.6]).unwrap()
    }

    #[test]
    fn layout_size_and_round_trip() {
        let f = small();
        let bytes = field_to_bytes(&f);
        assert_eq!(bytes.len(), 196);
        assert_eq!(field_from_bytes(&bytes).unwrap(), f);
    }

    #[test]
    fn header_errors() {
        let mut bytes = field_to_bytes(&small());
        assert!(matches!(field_from_bytes(&bytes[..100]), Err(Error::Truncated(_))));
        bytes[3] = b'9';
        let e = field_from_bytes(&bytes).unwrap_err();
        assert!(e.to_string().starts_with("unsupported version"));
        bytes[0] = b'X';
        assert!(matches!(field_from_bytes(&bytes), Err(Error::BadMagic(_))));
    }
}
