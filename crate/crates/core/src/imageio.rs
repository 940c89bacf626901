//! Image file format.
//!
//! Little-endian: magic `b"GMIMAGE1"`, u32 format version (= 1), u32 width,
//! u32 height, u32 depth (= 1 for 2-D), f64 pixel size (mm), f64 HU offset,
//! then `width * height * depth` f32 samples in row-major order.
//! Stored samples `s` map to Hounsfield units as `s + offset`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::binio::{read_f32, read_f64, read_u32, write_f32, write_f64, write_u32};
use crate::error::{Error, Result};
use crate::image::Image;

pub const IMAGE_MAGIC: &[u8; 8] = b"GMIMAGE1";
pub const IMAGE_FORMAT_VERSION: u32 = 1;

pub fn write_image<W: Write>(image: &Image, mut w: W) -> Result<()> {
    w.write_all(IMAGE_MAGIC)?;
    write_u32(&mut w, IMAGE_FORMAT_VERSION)?;
    write_u32(&mut w, image.width() as u32)?;
    write_u32(&mut w, image.height() as u32)?;
    write_u32(&mut w, 1)?;
    write_f64(&mut w, image.pixel_size())?;
    write_f64(&mut w, 0.0)?;
    for &v in image.data() {
        write_f32(&mut w, v as f32)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_image<R: Read>(mut r: R) -> Result<Image> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != IMAGE_MAGIC {
        return Err(Error::Format("not an image file".into()));
    }
    let version = read_u32(&mut r)?;
    if version != IMAGE_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported image format version {version}")));
    }
    let width = read_u32(&mut r)? as usize;
    let height = read_u32(&mut r)? as usize;
    let depth = read_u32(&mut r)? as usize;
    if depth != 1 {
        return Err(Error::Format(format!("volumes are not supported (depth {depth})")));
    }
    if width == 0 || height == 0 || width.saturating_mul(height) > 1 << 28 {
        return Err(Error::Format(format!("implausible image size {width}x{height}")));
    }
    let pixel_size = read_f64(&mut r)?;
    let offset = read_f64(&mut r)?;
    let mut data = Vec::with_capacity(width * height);
    for _ in 0..width * height {
        data.push(read_f32(&mut r)? as f64 + offset);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("header dimensions do not match payload length".into()));
    }
    Image::new(width, height, pixel_size, data).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_image(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    write_image(image, BufWriter::new(File::create(path)?))
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    read_image(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_at_f32_precision() {
        let img = Image::from_fn(5, 3, 0.5, |r, c| -1000.0 + (r * 5 + c) as f64 * 0.1);
        let mut buf = Vec::new();
        write_image(&img, &mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 16 + 16 + 15 * 4);
        let back = read_image(buf.as_slice()).unwrap();
        assert_eq!(back.width(), 5);
        assert_eq!(back.height(), 3);
        assert_eq!(back.pixel_size(), 0.5);
        for (a, b) in back.data().iter().zip(img.data()) {
            assert_eq!(*a, *b as f32 as f64);
        }
    }

    #[test]
    fn payload_length_checked() {
        let img = Image::zeros(2, 2);
        let mut buf = Vec::new();
        write_image(&img, &mut buf).unwrap();
        buf.extend([0u8; 4]);
        assert!(matches!(read_image(buf.as_slice()), Err(Error::Format(_))));
        buf.truncate(buf.len() - 8);
        assert!(read_image(buf.as_slice()).is_err());
    }
}
