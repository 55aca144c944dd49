//! Grayscale images, impulse noise, network-driven median filtering and SSIM.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::network::Network;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImageError {
    #[error("not a binary PGM (expected magic P5, found {0:?})")]
    BadMagic(String),
    #[error("unsupported PGM variant {0}: only binary P5 is supported")]
    UnsupportedFormat(String),
    #[error("maxval must be 255, found {0}")]
    Maxval(u32),
    #[error("malformed PGM header: {0}")]
    Header(String),
    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("probability {0} is outside [0, 1]")]
    Probability(f64),
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("a {window}x{window} window needs a single-output network on {expected} inputs")]
    WindowMismatch { window: usize, expected: usize },
    #[error("invalid image: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::Invalid("dimensions must be positive".into()));
        }
        if pixels.len() != width * height {
            return Err(ImageError::Invalid(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let pixels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        GrayImage {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Pixel with coordinates clamped to the image (replicate padding).
    fn clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn inverted(&self) -> Self {
        GrayImage {
            pixels: self.pixels.iter().map(|&p| 255 - p).collect(),
            ..self.clone()
        }
    }
}

fn skip_space_and_comments(bytes: &[u8], mut pos: usize) -> usize {
    while pos < bytes.len() {
        if bytes[pos].is_ascii_whitespace() {
            pos += 1;
        } else if bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else {
            break;
        }
    }
    pos
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<u32, ImageError> {
    *pos = skip_space_and_comments(bytes, *pos);
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| ImageError::Header(format!("missing {what}")))
}

/// Reads a binary (P5) PGM with maxval 255.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    let magic = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
    match magic.as_str() {
        "P5" => {}
        "P2" | "P1" | "P3" | "P4" | "P6" => return Err(ImageError::UnsupportedFormat(magic)),
        _ => return Err(ImageError::BadMagic(magic)),
    }
    let mut pos = 2;
    let width = header_number(bytes, &mut pos, "width")? as usize;
    let height = header_number(bytes, &mut pos, "height")? as usize;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(ImageError::Maxval(maxval));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(ImageError::Header("missing separator after maxval".into())),
    }
    let expected = width * height;
    let data = &bytes[pos..];
    if data.len() < expected {
        return Err(ImageError::Truncated {
            expected,
            found: data.len(),
        });
    }
    GrayImage::new(width, height, data[..expected].to_vec())
}

pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

fn check_probability(p: f64) -> Result<(), ImageError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(ImageError::Probability(p))
    }
}

/// Each pixel independently becomes 0 or 255 (equally likely) with
/// probability `p`.
pub fn add_salt_pepper<R: Rng>(img: &GrayImage, p: f64, rng: &mut R) -> Result<GrayImage, ImageError> {
    check_probability(p)?;
    let pixels = img
        .pixels
        .iter()
        .map(|&v| {
            if rng.gen_bool(p) {
                if rng.gen_bool(0.5) {
                    255
                } else {
                    0
                }
            } else {
                v
            }
        })
        .collect();
    GrayImage::new(img.width, img.height, pixels)
}

/// Each pixel independently becomes a uniform random value with
/// probability `p`.
pub fn add_shot_noise<R: Rng>(img: &GrayImage, p: f64, rng: &mut R) -> Result<GrayImage, ImageError> {
    check_probability(p)?;
    let pixels = img
        .pixels
        .iter()
        .map(|&v| if rng.gen_bool(p) { rng.gen() } else { v })
        .collect();
    GrayImage::new(img.width, img.height, pixels)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    Three,
    Five,
}

impl Window {
    pub fn side(self) -> usize {
        match self {
            Window::Three => 3,
            Window::Five => 5,
        }
    }

    pub fn inputs(self) -> usize {
        self.side() * self.side()
    }

    pub fn for_inputs(n: usize) -> Option<Window> {
        match n {
            9 => Some(Window::Three),
            25 => Some(Window::Five),
            _ => None,
        }
    }
}

/// Applies `net` to every window (row-major order, replicated borders).
pub fn median_filter(img: &GrayImage, net: &Network, window: Window) -> Result<GrayImage, ImageError> {
    if net.n() != window.inputs() || net.outputs().len() != 1 {
        return Err(ImageError::WindowMismatch {
            window: window.side(),
            expected: window.inputs(),
        });
    }
    let net = net.prune();
    let out = net.outputs()[0];
    let r = (window.side() / 2) as isize;
    let w = img.width;
    let mut pixels = vec![0u8; img.pixels.len()];
    pixels.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let mut values = vec![0u8; net.signal_count()];
        for (x, px) in row.iter_mut().enumerate() {
            let mut i = 0;
            for dy in -r..=r {
                for dx in -r..=r {
                    values[i] = img.clamped(x as isize + dx, y as isize + dy);
                    i += 1;
                }
            }
            for (k, op) in net.ops().iter().enumerate() {
                let (a, b) = (values[op.a], values[op.b]);
                values[i + 2 * k] = a.min(b);
                values[i + 2 * k + 1] = a.max(b);
            }
            *px = values[out];
        }
    });
    GrayImage::new(img.width, img.height, pixels)
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const DYNAMIC_RANGE: f64 = 255.0;

fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size / 2) as f64;
    let raw: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Separable "valid" filtering of a row-major plane.
fn filter_valid(plane: &[f64], width: usize, height: usize, kernel: &[f64]) -> (Vec<f64>, usize, usize) {
    let k = kernel.len();
    let (ow, oh) = (width + 1 - k, height + 1 - k);
    let mut rows = vec![0.0; ow * height];
    for y in 0..height {
        for x in 0..ow {
            rows[y * ow + x] = (0..k).map(|i| kernel[i] * plane[y * width + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..k).map(|i| kernel[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    (out, ow, oh)
}

/// Mean structural similarity with an 11x11 Gaussian window (sigma 1.5),
/// evaluated where the window fits inside the image. Images smaller than
/// the window use the largest odd window that fits.
pub fn ssim(a: &GrayImage, b: &GrayImage) -> Result<f64, ImageError> {
    if a.width != b.width || a.height != b.height {
        return Err(ImageError::DimensionMismatch(a.width, a.height, b.width, b.height));
    }
    let (w, h) = (a.width, a.height);
    let mut size = SSIM_WINDOW.min(w).min(h);
    if size % 2 == 0 {
        size -= 1;
    }
    let kernel = gaussian_kernel(size, SSIM_SIGMA);
    let x: Vec<f64> = a.pixels.iter().map(|&v| f64::from(v)).collect();
    let y: Vec<f64> = b.pixels.iter().map(|&v| f64::from(v)).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
    let (mx, _, _) = filter_valid(&x, w, h, &kernel);
    let (my, _, _) = filter_valid(&y, w, h, &kernel);
    let (exx, _, _) = filter_valid(&xx, w, h, &kernel);
    let (eyy, _, _) = filter_valid(&yy, w, h, &kernel);
    let (exy, ow, oh) = filter_valid(&xy, w, h, &kernel);

    let c1 = (K1 * DYNAMIC_RANGE).powi(2);
    let c2 = (K2 * DYNAMIC_RANGE).powi(2);
    let total: f64 = (0..ow * oh)
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let vx = exx[i] - ux * ux;
            let vy = eyy[i] - uy * uy;
            let cxy = exy[i] - ux * uy;
            ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / (ow * oh) as f64)
}

/// Procedural grayscale test scenes with smooth regions, edges and texture.
pub mod scenes {
    use super::GrayImage;

    fn clamp(v: f64) -> u8 {
        v.round().clamp(0.0, 255.0) as u8
    }

    /// Diagonal ramp with a bright disc.
    pub fn gradient_disc(size: usize) -> GrayImage {
        let s = size as f64;
        GrayImage::from_fn(size, size, |x, y| {
            let (fx, fy) = (x as f64 / s, y as f64 / s);
            let base = 40.0 + 150.0 * (fx + fy) / 2.0;
            let d = ((fx - 0.6).powi(2) + (fy - 0.4).powi(2)).sqrt();
            clamp(if d < 0.2 { 230.0 - 60.0 * d } else { base })
        })
    }

    /// Overlapping rectangles and bars of different intensities.
    pub fn blocks(size: usize) -> GrayImage {
        GrayImage::from_fn(size, size, |x, y| {
            let (u, v) = (x * 8 / size, y * 8 / size);
            let mut value = 60 + 20 * ((u + 2 * v) % 5) as u32;
            if (size / 4..size / 2).contains(&x) && (size / 5..4 * size / 5).contains(&y) {
                value = 210;
            }
            if (y / 3) % 7 == 0 && x > size / 2 {
                value = 25;
            }
            value.min(255) as u8
        })
    }

    /// Low-frequency interference pattern.
    pub fn waves(size: usize) -> GrayImage {
        let s = size as f64;
        GrayImage::from_fn(size, size, |x, y| {
            let (fx, fy) = (x as f64 / s, y as f64 / s);
            let v = (fx * 9.0).sin() * (fy * 7.0).cos() + 0.5 * ((fx + fy) * 13.0).sin();
            clamp(128.0 + 70.0 * v)
        })
    }

    /// Rings around an off-centre point.
    pub fn rings(size: usize) -> GrayImage {
        let s = size as f64;
        GrayImage::from_fn(size, size, |x, y| {
            let (fx, fy) = (x as f64 / s - 0.35, y as f64 / s - 0.55);
            let r = (fx * fx + fy * fy).sqrt();
            clamp(128.0 + 100.0 * (r * 30.0).cos() * (-r * 2.0).exp())
        })
    }

    pub fn all(size: usize) -> Vec<(&'static str, GrayImage)> {
        vec![
            ("gradient_disc", gradient_disc(size)),
            ("blocks", blocks(size)),
            ("waves", waves(size)),
            ("rings", rings(size)),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{gen_exact_median, gen_mom, known};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::new(w, h, (0..w * h).map(|_| rng.gen()).collect()).unwrap()
    }

    #[test]
    fn pgm_one_pixel() {
        let img = GrayImage::new(1, 1, vec![0]).unwrap();
        let mut expected = b"P5\n1 1\n255\n".to_vec();
        expected.push(0);
        assert_eq!(write_pgm(&img), expected);
        assert_eq!(read_pgm(&expected).unwrap(), img);
    }

    #[test]
    fn pgm_round_trip_and_errors() {
        let img = random_image(32, 32, 1);
        assert_eq!(read_pgm(&write_pgm(&img)).unwrap(), img);

        assert!(matches!(read_pgm(b"P2\n1 1\n255\n0\n"), Err(ImageError::UnsupportedFormat(_))));
        assert!(matches!(read_pgm(b"XX"), Err(ImageError::BadMagic(_))));
        assert_eq!(read_pgm(b"P5\n1 1\n65535\n\0\0"), Err(ImageError::Maxval(65535)));
        assert_eq!(
            read_pgm(b"P5\n2 2\n255\n\0\0"),
            Err(ImageError::Truncated { expected: 4, found: 2 })
        );
        // header comments are allowed
        let with_comment = b"P5\n# made by hand\n1 1\n255\n\x07";
        assert_eq!(read_pgm(with_comment).unwrap().get(0, 0), 7);
    }

    #[test]
    fn noise_edge_cases() {
        let img = random_image(16, 16, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(add_salt_pepper(&img, 0.0, &mut rng).unwrap(), img);
        assert_eq!(add_shot_noise(&img, 0.0, &mut rng).unwrap(), img);
        let all = add_salt_pepper(&img, 1.0, &mut rng).unwrap();
        assert!(all.pixels().iter().all(|&p| p == 0 || p == 255));
        assert_eq!(add_salt_pepper(&img, 1.5, &mut rng), Err(ImageError::Probability(1.5)));
        assert_eq!(add_shot_noise(&img, -0.1, &mut rng), Err(ImageError::Probability(-0.1)));
    }

    #[test]
    fn noise_is_seeded() {
        let img = scenes::waves(64);
        let a = add_shot_noise(&img, 0.1, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = add_shot_noise(&img, 0.1, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn corruption_fraction() {
        // 10^6 pixels at p = 0.05: std dev of the fraction is about 2.2e-4
        let img = GrayImage::from_fn(1000, 1000, |_, _| 128);
        let noisy = add_salt_pepper(&img, 0.05, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let changed = noisy.pixels().iter().filter(|&&p| p != 128).count() as f64 / 1e6;
        assert!((0.045..=0.055).contains(&changed), "{changed}");
    }

    #[test]
    fn filter_constant_image() {
        let img = GrayImage::from_fn(9, 7, |_, _| 77);
        for (net, win) in [
            (known::median9(), Window::Three),
            (gen_mom(9).unwrap(), Window::Three),
            (known::median25(), Window::Five),
        ] {
            assert_eq!(median_filter(&img, &net, win).unwrap(), img);
        }
    }

    #[test]
    fn filter_center_is_true_median() {
        let values = [9u8, 200, 3, 45, 17, 88, 120, 61, 5];
        let img = GrayImage::new(3, 3, values.to_vec()).unwrap();
        let out = median_filter(&img, &known::median9(), Window::Three).unwrap();
        let mut sorted = values;
        sorted.sort_unstable();
        assert_eq!(out.get(1, 1), sorted[4]);
    }

    #[test]
    fn approximate_output_is_in_window() {
        let img = random_image(20, 20, 5);
        let mom = gen_mom(9).unwrap();
        let out = median_filter(&img, &mom, Window::Three).unwrap();
        for y in 0..20isize {
            for x in 0..20isize {
                let window: Vec<u8> = (-1..=1)
                    .flat_map(|dy| (-1..=1).map(move |dx| (dx, dy)))
                    .map(|(dx, dy)| img.clamped(x + dx, y + dy))
                    .collect();
                assert!(window.contains(&out.get(x as usize, y as usize)));
            }
        }
    }

    #[test]
    fn filter_arity_checked() {
        let img = GrayImage::from_fn(4, 4, |_, _| 0);
        assert!(matches!(
            median_filter(&img, &gen_exact_median(5).unwrap(), Window::Three),
            Err(ImageError::WindowMismatch { window: 3, expected: 9 })
        ));
        assert!(median_filter(&img, &known::median9(), Window::Five).is_err());
    }

    #[test]
    fn ssim_properties() {
        let img = scenes::blocks(48);
        assert_eq!(ssim(&img, &img).unwrap(), 1.0);
        let inv = img.inverted();
        assert!(ssim(&img, &inv).unwrap() < 1.0);
        let other = random_image(48, 48, 6);
        assert_eq!(ssim(&img, &other).unwrap(), ssim(&other, &img).unwrap());
        let small = random_image(5, 4, 7);
        assert_eq!(ssim(&small, &small).unwrap(), 1.0);
        assert!(matches!(ssim(&img, &small), Err(ImageError::DimensionMismatch(..))));
    }

    #[test]
    fn denoising_improves_ssim() {
        let img = scenes::gradient_disc(64);
        let noisy = add_salt_pepper(&img, 0.05, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let filtered = median_filter(&noisy, &known::median9(), Window::Three).unwrap();
        assert!(ssim(&img, &filtered).unwrap() > ssim(&img, &noisy).unwrap());
    }
}
