//! Color conversion and on-disk formats.
//!
//! Two formats are supported. A raw tensor file is the 4-byte magic `FDR1`,
//! then `m`, `n`, `t` as little-endian `u32`, then `m·n·t` little-endian
//! `f32` values in tensor storage order. A frame directory holds 8-bit PNG
//! frames named by their zero-padded index (`000000.png`, ...).
//!
//! Writers stage their output next to the destination and rename it into
//! place, so a failed run never leaves a half-written file behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use fastderain_core::{ColorVideo, Dims, Tensor3};
use image::{DynamicImage, GrayImage, RgbImage};
use tempfile::{NamedTempFile, TempDir};

pub const RAW_MAGIC: [u8; 4] = *b"FDR1";
const HEADER_LEN: u64 = 16;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: bad magic {found:?}, expected \"FDR1\"", path.display())]
    BadMagic { path: PathBuf, found: Vec<u8> },
    #[error("{}: size mismatch, expected {expected} bytes but found {actual}", path.display())]
    SizeMismatch {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error("{}: frame is {found:?} (width, height) but earlier frames are {expected:?}", path.display())]
    InconsistentFrame {
        path: PathBuf,
        expected: (u32, u32),
        found: (u32, u32),
    },
    #[error("{}: no numbered frames found", path.display())]
    NoFrames { path: PathBuf },
    #[error("{}: invalid contents: {source}", path.display())]
    Contents {
        path: PathBuf,
        source: fastderain_core::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A grayscale or RGB video, all values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Video {
    Gray(Tensor3),
    Color(ColorVideo),
}

impl Video {
    pub fn dims(&self) -> Dims {
        match self {
            Video::Gray(x) => x.dims(),
            Video::Color(c) => c.dims(),
        }
    }

    /// The luma plane; a gray video is its own luma.
    pub fn luma(&self) -> Tensor3 {
        match self {
            Video::Gray(x) => x.clone(),
            Video::Color(c) => rgb_to_yuv(c)[0].clone(),
        }
    }
}

/// BT.601 full-range RGB → YUV, with chroma centred on 0.5.
pub fn rgb_to_yuv(v: &ColorVideo) -> [Tensor3; 3] {
    let [r, g, b] = v.channels();
    let mix = |cr: f64, cg: f64, cb: f64, offset: f64| {
        let data = r
            .as_slice()
            .iter()
            .zip(g.as_slice())
            .zip(b.as_slice())
            .map(|((&r, &g), &b)| offset + cr * r + cg * g + cb * b)
            .collect();
        Tensor3::from_vec(v.dims(), data).expect("finite inputs give finite outputs")
    };
    [
        mix(0.299, 0.587, 0.114, 0.0),
        mix(-0.168_736, -0.331_264, 0.5, 0.5),
        mix(0.5, -0.418_688, -0.081_312, 0.5),
    ]
}

/// Inverse of [`rgb_to_yuv`]; channels are clamped to `[0, 1]`.
pub fn yuv_to_rgb(y: &Tensor3, u: &Tensor3, v: &Tensor3) -> fastderain_core::Result<ColorVideo> {
    y.check_dims(u)?;
    y.check_dims(v)?;
    let ch = |f: &dyn Fn(f64, f64, f64) -> f64| {
        let data = y
            .as_slice()
            .iter()
            .zip(u.as_slice())
            .zip(v.as_slice())
            .map(|((&y, &u), &v)| f(y, u - 0.5, v - 0.5))
            .collect();
        Tensor3::from_vec(y.dims(), data)
    };
    ColorVideo::new(
        ch(&|y, _, v| y + 1.402 * v)?,
        ch(&|y, u, v| y - 0.344_136 * u - 0.714_136 * v)?,
        ch(&|y, u, _| y + 1.772 * u)?,
    )
}

/// Output staged in a temporary location beside its destination.
#[derive(Debug)]
pub struct Staged {
    dest: PathBuf,
    inner: StagedInner,
}

#[derive(Debug)]
enum StagedInner {
    File(NamedTempFile),
    Dir(TempDir),
}

impl Staged {
    pub fn destination(&self) -> &Path {
        &self.dest
    }

    /// Moves the staged output into place, replacing any previous output.
    pub fn commit(self) -> Result<(), IoError> {
        let dest = self.dest;
        match self.inner {
            StagedInner::File(tmp) => tmp.persist(&dest).map(drop).map_err(|e| IoError::Io {
                path: dest.clone(),
                source: e.error,
            }),
            StagedInner::Dir(tmp) => {
                let staged = tmp.keep();
                // a directory cannot be renamed over a non-empty one, so the
                // old output is moved aside first and removed afterwards
                let old = if dest.exists() {
                    let aside = staged.with_extension("old");
                    fs::rename(&dest, &aside).map_err(io_err(&dest))?;
                    Some(aside)
                } else {
                    None
                };
                if let Err(e) = fs::rename(&staged, &dest) {
                    if let Some(aside) = &old {
                        let _ = fs::rename(aside, &dest);
                    }
                    let _ = fs::remove_dir_all(&staged);
                    return Err(io_err(&dest)(e));
                }
                if let Some(aside) = old {
                    if aside.is_dir() {
                        fs::remove_dir_all(&aside).map_err(io_err(&aside))?;
                    } else {
                        fs::remove_file(&aside).map_err(io_err(&aside))?;
                    }
                }
                Ok(())
            }
        }
    }
}

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// Writes `bytes` to a temporary file next to `path`.
pub fn stage_bytes(path: &Path, bytes: &[u8]) -> Result<Staged, IoError> {
    let mut tmp = NamedTempFile::new_in(parent_dir(path)).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    Ok(Staged {
        dest: path.to_path_buf(),
        inner: StagedInner::File(tmp),
    })
}

pub fn write_bytes_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    stage_bytes(path, bytes)?.commit()
}

pub fn encode_raw(x: &Tensor3) -> Vec<u8> {
    let d = x.dims();
    let mut out = Vec::with_capacity(HEADER_LEN as usize + 4 * d.len());
    out.extend_from_slice(&RAW_MAGIC);
    for extent in [d.m, d.n, d.t] {
        let e = u32::try_from(extent).expect("extent fits in u32");
        out.extend_from_slice(&e.to_le_bytes());
    }
    for &v in x.as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_raw(path: &Path, bytes: &[u8]) -> Result<Tensor3, IoError> {
    let actual = bytes.len() as u64;
    if bytes.len() < 4 || bytes[..4] != RAW_MAGIC {
        if bytes.len() < 4 && RAW_MAGIC.starts_with(bytes) {
            return Err(IoError::SizeMismatch {
                path: path.to_path_buf(),
                expected: HEADER_LEN,
                actual,
            });
        }
        return Err(IoError::BadMagic {
            path: path.to_path_buf(),
            found: bytes[..bytes.len().min(4)].to_vec(),
        });
    }
    if actual < HEADER_LEN {
        return Err(IoError::SizeMismatch {
            path: path.to_path_buf(),
            expected: HEADER_LEN,
            actual,
        });
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
    let (m, n, t) = (word(4), word(8), word(12));
    let expected = HEADER_LEN + 4 * u64::from(m) * u64::from(n) * u64::from(t);
    if actual != expected {
        return Err(IoError::SizeMismatch {
            path: path.to_path_buf(),
            expected,
            actual,
        });
    }
    let data = bytes[HEADER_LEN as usize..]
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
        .collect();
    let dims = Dims::new(m as usize, n as usize, t as usize);
    Tensor3::from_vec(dims, data).map_err(|source| IoError::Contents {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_raw(path: &Path) -> Result<Tensor3, IoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_raw(path, &bytes)
}

pub fn stage_raw(path: &Path, x: &Tensor3) -> Result<Staged, IoError> {
    stage_bytes(path, &encode_raw(x))
}

pub fn write_raw(path: &Path, x: &Tensor3) -> Result<(), IoError> {
    stage_raw(path, x)?.commit()
}

/// Numbered frame files of `dir`, sorted by index.
fn frame_paths(dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    let mut found = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let index = path
            .file_stem()
            .and_then(|s| s.to_str())
            .filter(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|s| s.parse::<u64>().ok());
        if let (Some(index), true) = (index, path.is_file()) {
            found.push((index, path));
        }
    }
    if found.is_empty() {
        return Err(IoError::NoFrames {
            path: dir.to_path_buf(),
        });
    }
    found.sort();
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

fn to_unit(v: u8) -> f64 {
    f64::from(v) / 255.0
}

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Loads a frame directory. Frames must share their size; if any frame has
/// color the whole video is read as RGB.
pub fn read_frames(dir: &Path) -> Result<Video, IoError> {
    let paths = frame_paths(dir)?;
    let mut images = Vec::with_capacity(paths.len());
    let mut size = None;
    for path in &paths {
        let img = image::open(path).map_err(|source| IoError::Image {
            path: path.clone(),
            source,
        })?;
        let found = (img.width(), img.height());
        match size {
            None => size = Some(found),
            Some(expected) if expected != found => {
                return Err(IoError::InconsistentFrame {
                    path: path.clone(),
                    expected,
                    found,
                })
            }
            Some(_) => {}
        }
        images.push(img);
    }
    let (w, h) = size.expect("at least one frame");
    let dims = Dims::new(h as usize, w as usize, images.len());
    let contents = |source| IoError::Contents {
        path: dir.to_path_buf(),
        source,
    };

    if images.iter().any(|img| img.color().has_color()) {
        let mut chans = [
            Tensor3::zeros(dims),
            Tensor3::zeros(dims),
            Tensor3::zeros(dims),
        ];
        for (k, img) in images.iter().enumerate() {
            for (x, y, px) in img.to_rgb8().enumerate_pixels() {
                for (c, chan) in chans.iter_mut().enumerate() {
                    chan.set(y as usize, x as usize, k, to_unit(px[c]));
                }
            }
        }
        let [r, g, b] = chans;
        Ok(Video::Color(ColorVideo::new(r, g, b).map_err(contents)?))
    } else {
        let mut x = Tensor3::zeros(dims);
        for (k, img) in images.iter().enumerate() {
            for (col, row, px) in img.to_luma8().enumerate_pixels() {
                x.set(row as usize, col as usize, k, to_unit(px[0]));
            }
        }
        Ok(Video::Gray(x))
    }
}

fn frame_image(video: &Video, k: usize) -> DynamicImage {
    let d = video.dims();
    let (w, h) = (d.n as u32, d.m as u32);
    match video {
        Video::Gray(x) => DynamicImage::ImageLuma8(GrayImage::from_fn(w, h, |c, r| {
            image::Luma([to_byte(x.get(r as usize, c as usize, k))])
        })),
        Video::Color(v) => {
            let [r, g, b] = v.channels();
            DynamicImage::ImageRgb8(RgbImage::from_fn(w, h, |c, row| {
                let at = |t: &Tensor3| to_byte(t.get(row as usize, c as usize, k));
                image::Rgb([at(r), at(g), at(b)])
            }))
        }
    }
}

/// Writes every frame into a temporary directory next to `dir`.
pub fn stage_frames(dir: &Path, video: &Video) -> Result<Staged, IoError> {
    let parent = parent_dir(dir);
    let tmp = tempfile::Builder::new()
        .prefix(".fastderain-frames")
        .tempdir_in(parent)
        .map_err(io_err(parent))?;
    for k in 0..video.dims().t {
        let path = tmp.path().join(format!("{k:06}.png"));
        frame_image(video, k)
            .save_with_format(&path, image::ImageFormat::Png)
            .map_err(|source| IoError::Image { path, source })?;
    }
    Ok(Staged {
        dest: dir.to_path_buf(),
        inner: StagedInner::Dir(tmp),
    })
}

pub fn write_frames(dir: &Path, video: &Video) -> Result<(), IoError> {
    stage_frames(dir, video)?.commit()
}
