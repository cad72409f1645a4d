//! IDX image container parsing (big-endian header, magic 0x00000803).

use std::fs;
use std::io::Read;
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt};

use super::DatagenError;
use super::mnist::MNIST_PIXELS;

const IMAGE_MAGIC: u32 = 0x0000_0803;

/// Parsed 28x28 image set, pixels flat in file order.
#[derive(Debug, Clone)]
pub struct IdxImages {
    count: usize,
    pixels: Vec<u8>,
}

impl IdxImages {
    pub fn count(&self) -> usize {
        self.count
    }

    /// Row-major 784-byte pixel grid of image `i`.
    pub fn image(&self, i: usize) -> &[u8] {
        &self.pixels[i * MNIST_PIXELS..(i + 1) * MNIST_PIXELS]
    }
}

/// Parse an IDX image file from disk.
pub fn parse_idx(path: &Path) -> Result<IdxImages, DatagenError> {
    parse_idx_bytes(&fs::read(path)?)
}

/// Parse IDX image bytes. Fails on bad magic, non-28x28 dimensions, or a
/// byte count shorter than the header promises; never returns partial data.
pub fn parse_idx_bytes(bytes: &[u8]) -> Result<IdxImages, DatagenError> {
    let mut cursor = std::io::Cursor::new(bytes);
    let magic = cursor.read_u32::<BigEndian>()?;
    if magic != IMAGE_MAGIC {
        return Err(DatagenError::BadMagic { got: magic });
    }
    let count = cursor.read_u32::<BigEndian>()? as usize;
    let rows = cursor.read_u32::<BigEndian>()?;
    let cols = cursor.read_u32::<BigEndian>()?;
    if rows != 28 || cols != 28 {
        return Err(DatagenError::WrongDimensions { rows, cols });
    }
    let expected = count * MNIST_PIXELS;
    let mut pixels = vec![0u8; expected];
    if let Err(e) = cursor.read_exact(&mut pixels) {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            return Err(DatagenError::Truncated {
                expected,
                got: bytes.len().saturating_sub(16),
            });
        }
        return Err(DatagenError::Io(e));
    }
    Ok(IdxImages { count, pixels })
}
