use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Camera-frame depths on the pixel grid, row-major. Zero means no surface.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl DepthMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        DepthMap {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::dimension("depth map", width * height, data.len()));
        }
        if data.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::invalid(
                "depth map",
                "entries must be finite and >= 0",
            ));
        }
        Ok(DepthMap {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, col: usize, row: usize) -> Result<f64> {
        if col >= self.width || row >= self.height {
            return Err(Error::OutOfBounds {
                col,
                row,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.data[row * self.width + col])
    }

    pub fn is_covered(&self, col: usize, row: usize) -> bool {
        self.data[row * self.width + col] > 0.0
    }

    pub fn coverage(&self) -> usize {
        self.data.iter().filter(|&&d| d > 0.0).count()
    }

    /// 16-bit binary PGM, depth mapped linearly from `[0, far]` onto
    /// `[0, 65535]` and clamped. The mapping is written as a header comment.
    pub fn to_pgm(&self, far: f64) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 2 * self.data.len());
        write!(
            out,
            "P5\n# depth_m = value / 65535 * {far}\n{} {}\n65535\n",
            self.width, self.height
        )
        .unwrap();
        for &d in &self.data {
            let v = ((d / far).clamp(0.0, 1.0) * 65535.0).round() as u16;
            out.extend_from_slice(&v.to_be_bytes());
        }
        out
    }

    pub fn write_pgm(&self, path: &Path, far: f64) -> Result<()> {
        std::fs::write(path, self.to_pgm(far)).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_layout() {
        let m = DepthMap::from_data(2, 1, vec![0.0, 1.0]).unwrap();
        let bytes = m.to_pgm(2.0);
        let header = b"P5\n# depth_m = value / 65535 * 2\n2 1\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..], &[0, 0, 0x80, 0x00]);
    }

    #[test]
    fn out_of_bounds_lookup() {
        let m = DepthMap::zeros(3, 2);
        assert!(m.get(2, 1).is_ok());
        assert!(matches!(m.get(3, 0), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn negative_depth_rejected() {
        assert!(DepthMap::from_data(1, 1, vec![-0.1]).is_err());
    }
}
