//! Reading and writing single-channel images.
//!
//! 8-bit and 16-bit grayscale PNG and TIFF are accepted. Color, alpha and
//! floating-point images are rejected rather than silently converted, since a
//! luminance conversion would change the phenotype being measured.

use std::fs::File;
use std::io::{BufWriter, Read};
use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::imgcore::{normalize_minmax, BinaryMask, GrayImage, RawImage};

/// A decoded grayscale image and its sample depth.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedImage {
    pub raw: RawImage,
    pub bit_depth: u8,
}

impl LoadedImage {
    /// The 8-bit image, if the file stored 8-bit samples.
    pub fn as_gray8(&self) -> Option<GrayImage> {
        (self.bit_depth == 8).then(|| {
            let (w, h) = self.raw.dims();
            let pixels = self.raw.samples().iter().map(|&s| s as u8).collect();
            GrayImage::new(w, h, pixels).expect("dimensions come from a decoded image")
        })
    }
}

fn unsupported(path: &Path, reason: impl Into<String>) -> Error {
    Error::UnsupportedImage {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

pub fn read_raw(path: &Path) -> Result<LoadedImage> {
    let reader = ImageReader::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = reader.with_guessed_format().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match reader.format() {
        Some(ImageFormat::Png | ImageFormat::Tiff) => {}
        Some(other) => return Err(unsupported(path, format!("unsupported format {other:?}"))),
        None => return Err(unsupported(path, "unrecognized image format")),
    }
    let decoded = reader.decode().map_err(|source| Error::Decode {
        path: path.to_path_buf(),
        source,
    })?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let (samples, bit_depth): (Vec<u32>, u8) = match decoded {
        DynamicImage::ImageLuma8(img) => (img.into_raw().into_iter().map(u32::from).collect(), 8),
        DynamicImage::ImageLuma16(img) => (img.into_raw().into_iter().map(u32::from).collect(), 16),
        other => {
            return Err(unsupported(
                path,
                format!("expected single-channel grayscale, found {:?}", other.color()),
            ))
        }
    };
    let raw = RawImage::new(w, h, samples).map_err(|e| unsupported(path, e.to_string()))?;
    Ok(LoadedImage { raw, bit_depth })
}

/// Reads an 8-bit grayscale image. Higher bit depths are refused: scoring
/// thresholds refer to 8-bit intensities and a rescale would move them.
pub fn read_gray(path: &Path) -> Result<GrayImage> {
    let loaded = read_raw(path)?;
    let depth = loaded.bit_depth;
    loaded
        .as_gray8()
        .ok_or_else(|| unsupported(path, format!("expected 8-bit samples, found {depth}-bit")))
}

/// Reads any accepted grayscale image, min-max normalizing deeper samples
/// into 0..=255. 8-bit input is returned unchanged.
pub fn read_gray_normalized(path: &Path) -> Result<GrayImage> {
    let loaded = read_raw(path)?;
    Ok(match loaded.as_gray8() {
        Some(img) => img,
        None => normalize_minmax(&loaded.raw),
    })
}

pub fn write_gray_png(path: &Path, img: &GrayImage) -> Result<()> {
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.pixels().to_vec())
        .expect("buffer length matches dimensions");
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    buf.write_to(&mut BufWriter::new(file), ImageFormat::Png)
        .map_err(|source| Error::Encode {
            path: path.to_path_buf(),
            source,
        })
}

/// Writes a 16-bit grayscale PNG. Samples above 65535 are an error.
pub fn write_gray16_png(path: &Path, raw: &RawImage) -> Result<()> {
    let samples = raw
        .samples()
        .iter()
        .map(|&s| u16::try_from(s).map_err(|_| Error::InvalidParameter(format!("sample {s} exceeds 16 bits"))))
        .collect::<Result<Vec<u16>>>()?;
    let buf = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(raw.width() as u32, raw.height() as u32, samples)
        .expect("buffer length matches dimensions");
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    buf.write_to(&mut BufWriter::new(file), ImageFormat::Png)
        .map_err(|source| Error::Encode {
            path: path.to_path_buf(),
            source,
        })
}

/// Masks are stored as 8-bit PNG with values {0, 255}.
pub fn write_mask_png(path: &Path, mask: &BinaryMask) -> Result<()> {
    write_gray_png(path, &mask.to_gray())
}

pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    Ok(BinaryMask::from_gray(&read_gray(path)?))
}

/// Lowercase hex SHA-256 of a file's bytes.
pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GrayImage {
        GrayImage::from_fn(7, 5, |x, y| (x * 30 + y * 7) as u8).unwrap()
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        write_gray_png(&p, &sample()).unwrap();
        assert_eq!(read_gray(&p).unwrap(), sample());
        assert_eq!(read_raw(&p).unwrap().bit_depth, 8);
    }

    #[test]
    fn sixteen_bit_is_normalized_not_scored() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("deep.png");
        let raw = RawImage::new(3, 1, vec![0, 32767, 65535]).unwrap();
        write_gray16_png(&p, &raw).unwrap();
        let loaded = read_raw(&p).unwrap();
        assert_eq!(
            (loaded.bit_depth, loaded.raw.samples()),
            (16, &[0u32, 32767, 65535][..])
        );
        assert!(matches!(read_gray(&p), Err(Error::UnsupportedImage { .. })));
        assert_eq!(read_gray_normalized(&p).unwrap().pixels(), &[0, 127, 255]);
    }

    #[test]
    fn tiff_is_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.tif");
        let img = sample();
        image::GrayImage::from_raw(7, 5, img.pixels().to_vec())
            .unwrap()
            .save(&p)
            .unwrap();
        assert_eq!(read_gray(&p).unwrap(), img);
    }

    #[test]
    fn color_input_is_rejected_with_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rgb.png");
        image::RgbImage::new(4, 4).save(&p).unwrap();
        let err = read_gray(&p).unwrap_err();
        assert!(matches!(err, Error::UnsupportedImage { .. }));
        assert!(err.to_string().contains("rgb.png"));
    }

    #[test]
    fn missing_and_garbage_files_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.png");
        assert!(read_gray(&missing).unwrap_err().to_string().contains("nope.png"));
        let junk = dir.path().join("junk.png");
        std::fs::write(&junk, b"\x89PNG\r\n\x1a\nnot really").unwrap();
        assert!(read_gray(&junk).unwrap_err().to_string().contains("junk.png"));
    }

    #[test]
    fn masks_store_as_0_and_255() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        let m = BinaryMask::from_fn(6, 6, |x, y| x > y).unwrap();
        write_mask_png(&p, &m).unwrap();
        let g = read_gray(&p).unwrap();
        assert!(g.pixels().iter().all(|&v| v == 0 || v == 255));
        assert_eq!(read_mask(&p).unwrap(), m);
    }

    #[test]
    fn sha256_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        std::fs::write(&p, b"abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
