//! Raster containers, lossless IO and the geometric primitives shared by the
//! preprocessing, augmentation and baseline code.
//!
//! Images are 8-bit, row-major and interleaved. [`Frame`] is a single gray
//! channel (one OCT B-scan), [`FundusImage`] is RGB. Both are the same generic
//! [`Image`] type so every geometric operation is written once.

use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage};

use crate::error::{Error, Result};

/// Number of directional B-scans per OCT volume.
pub const FRAMES_PER_VOLUME: usize = 6;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Image<const C: usize> {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

/// One gray OCT B-scan.
pub type Frame = Image<1>;
/// An RGB en-face fundus photograph.
pub type FundusImage = Image<3>;

impl<const C: usize> std::fmt::Debug for Image<C> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Image")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &C)
            .finish()
    }
}

impl<const C: usize> Image<C> {
    pub const CHANNELS: usize = C;

    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if data.len() != width * height * C {
            return Err(Error::DimMismatch(format!(
                "{}x{}x{} image needs {} values, got {}",
                width,
                height,
                C,
                width * height * C,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: [u8; C]) -> Result<Self> {
        let data = value
            .iter()
            .copied()
            .cycle()
            .take(width * height * C)
            .collect();
        Self::new(width, height, data)
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; C],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * C);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; C] {
        let i = (y * self.width + x) * C;
        let mut out = [0u8; C];
        out.copy_from_slice(&self.data[i..i + C]);
        out
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, value: [u8; C]) {
        let i = (y * self.width + x) * C;
        self.data[i..i + C].copy_from_slice(&value);
    }

    pub fn row(&self, y: usize) -> &[u8] {
        let stride = self.width * C;
        &self.data[y * stride..(y + 1) * stride]
    }
}

impl Frame {
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }
}

impl FundusImage {
    /// Gray conversion with rounded BT.601 luma weights.
    pub fn to_gray(&self) -> Frame {
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| luma(p[0], p[1], p[2]))
            .collect();
        Frame {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// `round(0.299 R + 0.587 G + 0.114 B)`.
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    y.round().clamp(0.0, 255.0) as u8
}

/// Conversion between [`Image`] and the codec layer.
pub trait Codec: Sized {
    fn from_dynamic(img: DynamicImage) -> Result<Self>;
    fn to_dynamic(&self) -> DynamicImage;
}

impl Codec for Frame {
    fn from_dynamic(img: DynamicImage) -> Result<Self> {
        let (w, h) = (img.width() as usize, img.height() as usize);
        let data = match img {
            DynamicImage::ImageLuma8(g) => g.into_raw(),
            other => other
                .to_rgb8()
                .into_raw()
                .chunks_exact(3)
                .map(|p| luma(p[0], p[1], p[2]))
                .collect(),
        };
        Frame::new(w, h, data)
    }

    fn to_dynamic(&self) -> DynamicImage {
        let buf = GrayImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("buffer length matches dimensions");
        DynamicImage::ImageLuma8(buf)
    }
}

impl Codec for FundusImage {
    fn from_dynamic(img: DynamicImage) -> Result<Self> {
        let (w, h) = (img.width() as usize, img.height() as usize);
        FundusImage::new(w, h, img.to_rgb8().into_raw())
    }

    fn to_dynamic(&self) -> DynamicImage {
        let buf = RgbImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("buffer length matches dimensions");
        DynamicImage::ImageRgb8(buf)
    }
}

/// Channel layout requested from [`load_image_as`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorMode {
    Gray,
    Rgb,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyImage {
    Gray(Frame),
    Rgb(FundusImage),
}

/// Loads a PNG or JPG file into the requested image type. RGB sources loaded
/// as [`Frame`] are converted with [`luma`].
pub fn load_image<I: Codec>(path: impl AsRef<Path>) -> Result<I> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let reader = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let img = reader.decode().map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    I::from_dynamic(img)
}

pub fn load_image_as(path: impl AsRef<Path>, mode: ColorMode) -> Result<AnyImage> {
    Ok(match mode {
        ColorMode::Gray => AnyImage::Gray(load_image(path)?),
        ColorMode::Rgb => AnyImage::Rgb(load_image(path)?),
    })
}

/// Writes the image as PNG regardless of the file extension.
pub fn save_image<I: Codec>(img: &I, path: impl AsRef<Path>) -> Result<()> {
    use image::codecs::png::{CompressionType, FilterType, PngEncoder};
    use image::ImageEncoder;

    let path = path.as_ref();
    let dynamic = img.to_dynamic();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let writer = std::io::BufWriter::new(file);
    let encoder = PngEncoder::new_with_quality(writer, CompressionType::Fast, FilterType::Adaptive);
    encoder
        .write_image(
            dynamic.as_bytes(),
            dynamic.width(),
            dynamic.height(),
            dynamic.color().into(),
        )
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Io {
                path: path.to_path_buf(),
                source: std::io::Error::other(other.to_string()),
            },
        })
}

/// Reads width and height from the file header without decoding pixels.
pub fn image_dimensions(path: impl AsRef<Path>) -> Result<(usize, usize)> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let (w, h) = image::image_dimensions(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok((w as usize, h as usize))
}

pub fn mirror_horizontal<const C: usize>(img: &Image<C>) -> Image<C> {
    let stride = img.width * C;
    let mut data = Vec::with_capacity(img.data.len());
    for row in img.data.chunks_exact(stride) {
        for px in row.chunks_exact(C).rev() {
            data.extend_from_slice(px);
        }
    }
    Image {
        width: img.width,
        height: img.height,
        data,
    }
}

/// Bilinear resampling with half-pixel centres and border clamping.
pub fn resize_bilinear<const C: usize>(
    img: &Image<C>,
    out_w: usize,
    out_h: usize,
) -> Result<Image<C>> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidDimensions {
            width: out_w,
            height: out_h,
        });
    }
    if (out_w, out_h) == img.dims() {
        return Ok(img.clone());
    }
    let xs = axis_taps(img.width, out_w);
    let ys = axis_taps(img.height, out_h);
    let mut data = Vec::with_capacity(out_w * out_h * C);
    for &(y0, y1, fy) in &ys {
        let r0 = img.row(y0);
        let r1 = img.row(y1);
        for &(x0, x1, fx) in &xs {
            for c in 0..C {
                let p00 = f64::from(r0[x0 * C + c]);
                let p10 = f64::from(r0[x1 * C + c]);
                let p01 = f64::from(r1[x0 * C + c]);
                let p11 = f64::from(r1[x1 * C + c]);
                let top = p00 + (p10 - p00) * fx;
                let bottom = p01 + (p11 - p01) * fx;
                data.push(quantize(top + (bottom - top) * fy));
            }
        }
    }
    Image::new(out_w, out_h, data)
}

/// Source index pair and blend weight for each destination coordinate.
fn axis_taps(src_len: usize, dst_len: usize) -> Vec<(usize, usize, f64)> {
    let scale = src_len as f64 / dst_len as f64;
    let max = (src_len - 1) as f64;
    (0..dst_len)
        .map(|d| {
            let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src_len - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

pub(crate) fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Bilinear sample of channel `c` at a real-valued position. Positions more
/// than a rounding error outside the pixel grid return `None`.
pub(crate) fn sample_bilinear<const C: usize>(
    img: &Image<C>,
    c: usize,
    x: f64,
    y: f64,
) -> Option<f64> {
    const EPS: f64 = 1e-9;
    let max_x = (img.width - 1) as f64;
    let max_y = (img.height - 1) as f64;
    if !(x >= -EPS && y >= -EPS && x <= max_x + EPS && y <= max_y + EPS) {
        return None;
    }
    let x = x.clamp(0.0, max_x);
    let y = y.clamp(0.0, max_y);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let at = |xx: usize, yy: usize| f64::from(img.data[(yy * img.width + xx) * C + c]);
    let top = at(x0, y0) + (at(x1, y0) - at(x0, y0)) * fx;
    let bottom = at(x0, y1) + (at(x1, y1) - at(x0, y1)) * fx;
    Some(top + (bottom - top) * fy)
}

/// Rotates counter-clockwise (as displayed) about the image centre, keeping
/// the canvas size. Uncovered pixels are black.
pub fn rotate_about_center<const C: usize>(img: &Image<C>, theta_deg: f64) -> Image<C> {
    let rad = theta_deg.to_radians();
    let (sin, cos) = rad.sin_cos();
    let cx = (img.width as f64 - 1.0) / 2.0;
    let cy = (img.height as f64 - 1.0) / 2.0;
    let mut data = Vec::with_capacity(img.data.len());
    for y in 0..img.height {
        let dy = y as f64 - cy;
        for x in 0..img.width {
            let dx = x as f64 - cx;
            // inverse map: rotate the output offset clockwise by theta
            let sx = cx + dx * cos - dy * sin;
            let sy = cy + dx * sin + dy * cos;
            for c in 0..C {
                data.push(sample_bilinear(img, c, sx, sy).map_or(0, quantize));
            }
        }
    }
    Image {
        width: img.width,
        height: img.height,
        data,
    }
}

pub fn crop_rect<const C: usize>(
    img: &Image<C>,
    x0: usize,
    y0: usize,
    w: usize,
    h: usize,
) -> Result<Image<C>> {
    let fits = w > 0
        && h > 0
        && x0.checked_add(w).is_some_and(|r| r <= img.width)
        && y0.checked_add(h).is_some_and(|b| b <= img.height);
    if !fits {
        return Err(Error::OutOfBounds {
            x0,
            y0,
            w,
            h,
            width: img.width,
            height: img.height,
        });
    }
    let mut data = Vec::with_capacity(w * h * C);
    for y in y0..y0 + h {
        data.extend_from_slice(&img.row(y)[x0 * C..(x0 + w) * C]);
    }
    Image::new(w, h, data)
}

/// Six directional B-scans of one eye, all of identical size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OctVolume {
    frames: [Frame; FRAMES_PER_VOLUME],
}

impl OctVolume {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        let frames: [Frame; FRAMES_PER_VOLUME] = frames
            .try_into()
            .map_err(|v: Vec<Frame>| Error::FrameCount(v.len()))?;
        let dims = frames[0].dims();
        if let Some(k) = frames.iter().position(|f| f.dims() != dims) {
            return Err(Error::DimMismatch(format!(
                "frame {k} is {:?}, frame 0 is {:?}",
                frames[k].dims(),
                dims
            )));
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[Frame; FRAMES_PER_VOLUME] {
        &self.frames
    }

    pub fn frame(&self, k: usize) -> &Frame {
        &self.frames[k]
    }

    pub fn into_frames(self) -> [Frame; FRAMES_PER_VOLUME] {
        self.frames
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    /// Applies `f` to every frame; `f` must preserve a common size.
    pub fn map_frames(&self, mut f: impl FnMut(usize, &Frame) -> Result<Frame>) -> Result<Self> {
        let frames = self
            .frames
            .iter()
            .enumerate()
            .map(|(k, fr)| f(k, fr))
            .collect::<Result<Vec<_>>>()?;
        Self::new(frames)
    }

    /// Loads `<dir>/<k>.png` (or `.jpg`) for k in 0..6.
    pub fn load_dir(dir: impl AsRef<Path>, sample_id: &str) -> Result<Self> {
        let dir = dir.as_ref();
        let mut frames = Vec::with_capacity(FRAMES_PER_VOLUME);
        for k in 0..FRAMES_PER_VOLUME {
            let path = frame_path(dir, k).ok_or_else(|| Error::MissingFrame(sample_id.into(), k))?;
            frames.push(load_image::<Frame>(path)?);
        }
        Self::new(frames)
    }

    /// Writes `<dir>/<k>.png`, creating `dir` if needed.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (k, frame) in self.frames.iter().enumerate() {
            save_image(frame, dir.join(format!("{k}.png")))?;
        }
        Ok(())
    }
}

/// Finds frame `k` inside a volume directory, preferring PNG.
pub fn frame_path(dir: &Path, k: usize) -> Option<std::path::PathBuf> {
    ["png", "jpg", "jpeg"]
        .iter()
        .map(|ext| dir.join(format!("{k}.{ext}")))
        .find(|p| p.is_file())
}
