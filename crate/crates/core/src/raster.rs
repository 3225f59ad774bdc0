//! Minimal binary PPM (P6) image I/O.
//!
//! Plain portable pixmaps keep golden-file comparisons byte-exact and
//! language-agnostic; no image library needed for 24-bit RGB frames.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("not a binary PPM (P6) file")]
    BadMagic,
    #[error("malformed PPM header: {0}")]
    BadHeader(String),
    #[error("pixel payload truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
}

/// 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    /// Row-major RGB triples.
    pub pixels: Vec<[u8; 3]>,
}

impl Image {
    pub fn filled(width: u32, height: u32, color: [u8; 3]) -> Self {
        Self {
            width,
            height,
            pixels: vec![color; (width * height) as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, color: [u8; 3]) {
        self.pixels[(y * self.width + x) as usize] = color;
    }

    /// Encode as binary PPM. The header is fixed-format so identical
    /// images produce identical bytes.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for px in &self.pixels {
            out.extend_from_slice(px);
        }
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self, RasterError> {
        if !bytes.starts_with(b"P6") {
            return Err(RasterError::BadMagic);
        }
        let mut pos = 2;
        let mut fields = [0usize; 3];
        for field in fields.iter_mut() {
            // Skip whitespace and `#` comment lines between header fields.
            loop {
                match bytes.get(pos) {
                    Some(b) if b.is_ascii_whitespace() => pos += 1,
                    Some(b'#') => {
                        while let Some(&b) = bytes.get(pos) {
                            pos += 1;
                            if b == b'\n' {
                                break;
                            }
                        }
                    }
                    _ => break,
                }
            }
            let start = pos;
            while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
                pos += 1;
            }
            if start == pos {
                return Err(RasterError::BadHeader("expected an integer".to_string()));
            }
            let text = std::str::from_utf8(&bytes[start..pos]).unwrap();
            *field = text
                .parse()
                .map_err(|_| RasterError::BadHeader(format!("bad integer `{text}`")))?;
        }
        let [width, height, maxval] = fields;
        if maxval != 255 {
            return Err(RasterError::BadHeader(format!(
                "only maxval 255 supported, got {maxval}"
            )));
        }
        // Exactly one whitespace byte separates the header from the payload.
        if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
            return Err(RasterError::BadHeader("missing header terminator".to_string()));
        }
        pos += 1;
        let expected = width * height * 3;
        let payload = &bytes[pos..];
        if payload.len() < expected {
            return Err(RasterError::Truncated {
                expected,
                found: payload.len(),
            });
        }
        let pixels = payload[..expected]
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect();
        Ok(Self {
            width: width as u32,
            height: height as u32,
            pixels,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_p6() {
        assert!(matches!(
            Image::from_ppm(b"P3\n1 1\n255\n0 0 0\n"),
            Err(RasterError::BadMagic)
        ));
    }

    #[test]
    fn reads_comments_in_header() {
        let bytes = b"P6\n# a comment\n2 1\n255\n\x01\x02\x03\x04\x05\x06";
        let img = Image::from_ppm(bytes).unwrap();
        assert_eq!(img.width, 2);
        assert_eq!(img.get(1, 0), [4, 5, 6]);
    }

    #[test]
    fn truncated_payload_detected() {
        let bytes = b"P6\n2 2\n255\n\x00\x00\x00";
        assert!(matches!(
            Image::from_ppm(bytes),
            Err(RasterError::Truncated { .. })
        ));
    }

    proptest! {
        #[test]
        fn ppm_round_trip(width in 1u32..20, height in 1u32..20, seed in 0u64..1000) {
            let mut img = Image::filled(width, height, [0, 0, 0]);
            let mut s = seed;
            for px in img.pixels.iter_mut() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                *px = [(s >> 16) as u8, (s >> 24) as u8, (s >> 32) as u8];
            }
            let back = Image::from_ppm(&img.to_ppm()).unwrap();
            prop_assert_eq!(back, img);
        }
    }
}
