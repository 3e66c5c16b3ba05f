//! Box-aware geometric and photometric image operations.
//!
//! Geometry ops transform annotation boxes alongside pixels; photometric ops
//! never touch geometry. Everything here is a pure function of its inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::raster::DocumentImage;

/// Fill for canvas regions with no source pixel. Documents are white.
const FILL: [u8; 3] = [255, 255, 255];

/// Resampling kernel for rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Nearest,
    Bilinear,
    /// Cubic convolution with a = -0.75.
    Cubic,
}

/// What happens to boxes near the border after rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarginPolicy {
    /// Skip the rotation entirely (flagged) unless every output box keeps at
    /// least this distance from every canvas border.
    Guard(f64),
    /// Keep the rotation and clip boxes to the canvas.
    Clip,
}

/// Result of [`rotate_with_boxes`].
#[derive(Debug, Clone)]
pub struct RotationOutcome {
    pub image: DocumentImage,
    pub boxes: Vec<BBox>,
    /// True when a [`MarginPolicy::Guard`] rejected the rotation and the
    /// input was returned unchanged.
    pub guard_triggered: bool,
}

fn cubic_weight(s: f64) -> f64 {
    const A: f64 = -0.75;
    let s = s.abs();
    if s <= 1.0 {
        (A + 2.0) * s * s * s - (A + 3.0) * s * s + 1.0
    } else if s < 2.0 {
        A * s * s * s - 5.0 * A * s * s + 8.0 * A * s - 4.0 * A
    } else {
        0.0
    }
}

fn sample(image: &DocumentImage, x: f64, y: f64, interpolation: Interpolation) -> [u8; 3] {
    let w = image.width() as f64;
    let h = image.height() as f64;
    if x < -0.5 || x > w - 0.5 || y < -0.5 || y > h - 0.5 {
        return FILL;
    }
    match interpolation {
        Interpolation::Nearest => image.get_clamped(x.round() as i64, y.round() as i64),
        Interpolation::Bilinear => {
            let x0 = x.floor();
            let y0 = y.floor();
            let fx = x - x0;
            let fy = y - y0;
            let mut out = [0u8; 3];
            for c in 0..3 {
                let p00 = image.get_clamped(x0 as i64, y0 as i64)[c] as f64;
                let p10 = image.get_clamped(x0 as i64 + 1, y0 as i64)[c] as f64;
                let p01 = image.get_clamped(x0 as i64, y0 as i64 + 1)[c] as f64;
                let p11 = image.get_clamped(x0 as i64 + 1, y0 as i64 + 1)[c] as f64;
                let v = p00 * (1.0 - fx) * (1.0 - fy)
                    + p10 * fx * (1.0 - fy)
                    + p01 * (1.0 - fx) * fy
                    + p11 * fx * fy;
                out[c] = v.round().clamp(0.0, 255.0) as u8;
            }
            out
        }
        Interpolation::Cubic => {
            let x0 = x.floor();
            let y0 = y.floor();
            let fx = x - x0;
            let fy = y - y0;
            let wx: [f64; 4] = std::array::from_fn(|k| cubic_weight(fx - (k as f64 - 1.0)));
            let wy: [f64; 4] = std::array::from_fn(|k| cubic_weight(fy - (k as f64 - 1.0)));
            let mut out = [0u8; 3];
            for c in 0..3 {
                let mut v = 0.0;
                for (ky, wyk) in wy.iter().enumerate() {
                    for (kx, wxk) in wx.iter().enumerate() {
                        let px = image.get_clamped(
                            x0 as i64 + kx as i64 - 1,
                            y0 as i64 + ky as i64 - 1,
                        )[c] as f64;
                        v += px * wxk * wyk;
                    }
                }
                out[c] = v.round().clamp(0.0, 255.0) as u8;
            }
            out
        }
    }
}

/// Rotates the image about its center on an expanded canvas (no pixel loss)
/// and replaces each box with the axis-aligned envelope of its rotated
/// corners.
///
/// `max_angle_deg` is the configured bound; exceeding it is
/// [`Error::InvalidAngle`]. Angle 0 is the identity.
pub fn rotate_with_boxes(
    image: &DocumentImage,
    boxes: &[BBox],
    angle_deg: f64,
    max_angle_deg: f64,
    interpolation: Interpolation,
    margin: MarginPolicy,
) -> Result<RotationOutcome> {
    if !angle_deg.is_finite() || angle_deg.abs() > max_angle_deg {
        return Err(Error::InvalidAngle { angle: angle_deg, max: max_angle_deg });
    }
    if angle_deg == 0.0 {
        return Ok(RotationOutcome {
            image: image.clone(),
            boxes: boxes.to_vec(),
            guard_triggered: false,
        });
    }

    let theta = angle_deg.to_radians();
    let (cos, sin) = (theta.cos(), theta.sin());
    let (w, h) = (image.width() as f64, image.height() as f64);
    // epsilon absorbs float noise so exact fits (e.g. 90 degrees) do not
    // gain a spurious row
    let new_w = (w * cos.abs() + h * sin.abs() - 1e-9).ceil() as u32;
    let new_h = (w * sin.abs() + h * cos.abs() - 1e-9).ceil() as u32;
    // boxes and pixels rotate about the same continuous image center
    let src_cx = w / 2.0;
    let src_cy = h / 2.0;
    let dst_cx = new_w as f64 / 2.0;
    let dst_cy = new_h as f64 / 2.0;

    // forward map for box corners (continuous coordinates)
    let forward = |x: f64, y: f64| -> (f64, f64) {
        let (rx, ry) = (x - src_cx, y - src_cy);
        (cos * rx - sin * ry + dst_cx, sin * rx + cos * ry + dst_cy)
    };

    let mut out_boxes = Vec::with_capacity(boxes.len());
    for b in boxes {
        let corners = [
            forward(b.x_min, b.y_min),
            forward(b.x_max, b.y_min),
            forward(b.x_max, b.y_max),
            forward(b.x_min, b.y_max),
        ];
        let envelope = BBox {
            x_min: corners.iter().map(|c| c.0).fold(f64::INFINITY, f64::min),
            y_min: corners.iter().map(|c| c.1).fold(f64::INFINITY, f64::min),
            x_max: corners.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max),
            y_max: corners.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max),
        };
        out_boxes.push(envelope);
    }

    match margin {
        MarginPolicy::Guard(margin_px) => {
            let violated = out_boxes.iter().any(|b| {
                b.x_min < margin_px
                    || b.y_min < margin_px
                    || b.x_max > new_w as f64 - margin_px
                    || b.y_max > new_h as f64 - margin_px
            });
            if violated {
                return Ok(RotationOutcome {
                    image: image.clone(),
                    boxes: boxes.to_vec(),
                    guard_triggered: true,
                });
            }
        }
        MarginPolicy::Clip => {
            out_boxes = out_boxes
                .iter()
                .filter_map(|b| b.clip(new_w, new_h))
                .collect();
            if out_boxes.len() != boxes.len() {
                // cannot happen for boxes that started inside the image, but
                // keep the cardinality contract explicit
                return Err(Error::InvalidParams(
                    "rotation clipped a box away entirely".to_string(),
                ));
            }
        }
    }

    // inverse map for pixels: pixel (i, j) has continuous center
    // (i + 0.5, j + 0.5); sampling coordinates are pixel indices
    let mut out = DocumentImage::filled(new_w, new_h, FILL);
    for yd in 0..new_h {
        for xd in 0..new_w {
            let (rx, ry) = (xd as f64 + 0.5 - dst_cx, yd as f64 + 0.5 - dst_cy);
            let xs = cos * rx + sin * ry + src_cx - 0.5;
            let ys = -sin * rx + cos * ry + src_cy - 0.5;
            out.set(xd, yd, sample(image, xs, ys, interpolation));
        }
    }

    Ok(RotationOutcome { image: out, boxes: out_boxes, guard_triggered: false })
}

/// Bilinear resample to the target dimensions, scaling box coordinates by
/// the per-axis factors.
pub fn scale_with_boxes(
    image: &DocumentImage,
    boxes: &[BBox],
    target_w: u32,
    target_h: u32,
) -> Result<(DocumentImage, Vec<BBox>)> {
    if target_w == 0 || target_h == 0 {
        return Err(Error::InvalidParams("resize target must be positive".to_string()));
    }
    let sx = target_w as f64 / image.width() as f64;
    let sy = target_h as f64 / image.height() as f64;
    let scaled_boxes = boxes
        .iter()
        .map(|b| BBox {
            x_min: b.x_min * sx,
            y_min: b.y_min * sy,
            x_max: b.x_max * sx,
            y_max: b.y_max * sy,
        })
        .collect();

    if target_w == image.width() && target_h == image.height() {
        return Ok((image.clone(), scaled_boxes));
    }

    let mut out = DocumentImage::filled(target_w, target_h, FILL);
    for yd in 0..target_h {
        // pixel-center alignment
        let ys = (yd as f64 + 0.5) / sy - 0.5;
        for xd in 0..target_w {
            let xs = (xd as f64 + 0.5) / sx - 0.5;
            out.set(xd, yd, sample(image, xs, ys, Interpolation::Bilinear));
        }
    }
    Ok((out, scaled_boxes))
}

/// Replicate-border padding by a fraction of each dimension per side. Boxes
/// shift by the pad amounts.
pub fn pad_replicate(
    image: &DocumentImage,
    boxes: &[BBox],
    fraction: f64,
) -> Result<(DocumentImage, Vec<BBox>)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidParams(format!("pad fraction {fraction} outside [0, 1]")));
    }
    let pad_x = (image.width() as f64 * fraction).round() as u32;
    let pad_y = (image.height() as f64 * fraction).round() as u32;
    if pad_x == 0 && pad_y == 0 {
        return Ok((image.clone(), boxes.to_vec()));
    }
    let new_w = image.width() + 2 * pad_x;
    let new_h = image.height() + 2 * pad_y;
    let mut out = DocumentImage::filled(new_w, new_h, FILL);
    for yd in 0..new_h {
        for xd in 0..new_w {
            let xs = xd as i64 - pad_x as i64;
            let ys = yd as i64 - pad_y as i64;
            out.set(xd, yd, image.get_clamped(xs, ys));
        }
    }
    let shifted = boxes
        .iter()
        .map(|b| BBox {
            x_min: b.x_min + pad_x as f64,
            y_min: b.y_min + pad_y as f64,
            x_max: b.x_max + pad_x as f64,
            y_max: b.y_max + pad_y as f64,
        })
        .collect();
    Ok((out, shifted))
}

/// Per-channel median filter with an odd square kernel.
pub fn median_blur(image: &DocumentImage, kernel: u32) -> Result<DocumentImage> {
    if kernel == 0 || kernel % 2 == 0 {
        return Err(Error::InvalidParams(format!("median kernel must be odd, got {kernel}")));
    }
    if kernel == 1 {
        return Ok(image.clone());
    }
    let r = (kernel / 2) as i64;
    let mut out = image.clone();
    let mut window: Vec<u8> = Vec::with_capacity((kernel * kernel) as usize);
    for y in 0..image.height() {
        for x in 0..image.width() {
            let mut px = [0u8; 3];
            for (c, slot) in px.iter_mut().enumerate() {
                window.clear();
                for dy in -r..=r {
                    for dx in -r..=r {
                        window.push(image.get_clamped(x as i64 + dx, y as i64 + dy)[c]);
                    }
                }
                window.sort_unstable();
                *slot = window[window.len() / 2];
            }
            out.set(x, y, px);
        }
    }
    Ok(out)
}

/// Sampled photometric factors for one jitter application.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterFactors {
    pub brightness: f64,
    pub contrast: f64,
    pub saturation: f64,
    /// Fraction of the hue circle, in `[-0.5, 0.5]`.
    pub hue: f64,
}

impl JitterFactors {
    pub const IDENTITY: JitterFactors =
        JitterFactors { brightness: 1.0, contrast: 1.0, saturation: 1.0, hue: 0.0 };
}

fn rgb_to_hsv(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * (((g - b) / delta).rem_euclid(6.0))
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { delta / max };
    (h, s, max)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> (f64, f64, f64) {
    let c = v * s;
    let hp = (h.rem_euclid(360.0)) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    (r + m, g + m, b + m)
}

/// Brightness, contrast (about the gray midpoint), saturation, and hue
/// rotation, applied in that order in floating point, rounded once.
pub fn color_jitter(image: &DocumentImage, factors: JitterFactors) -> DocumentImage {
    if factors == JitterFactors::IDENTITY {
        return image.clone();
    }
    let mut out = image.clone();
    for y in 0..image.height() {
        for x in 0..image.width() {
            let px = image.get(x, y);
            let mut rgb = [px[0] as f64, px[1] as f64, px[2] as f64];

            for v in rgb.iter_mut() {
                *v *= factors.brightness;
                *v = (*v - 128.0) * factors.contrast + 128.0;
            }
            let gray = 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2];
            for v in rgb.iter_mut() {
                *v = gray + (*v - gray) * factors.saturation;
                *v = v.clamp(0.0, 255.0);
            }

            if factors.hue != 0.0 {
                let (h, s, v) = rgb_to_hsv(rgb[0] / 255.0, rgb[1] / 255.0, rgb[2] / 255.0);
                let (r, g, b) = hsv_to_rgb(h + factors.hue * 360.0, s, v);
                rgb = [r * 255.0, g * 255.0, b * 255.0];
            }

            out.set(
                x,
                y,
                [
                    rgb[0].round().clamp(0.0, 255.0) as u8,
                    rgb[1].round().clamp(0.0, 255.0) as u8,
                    rgb[2].round().clamp(0.0, 255.0) as u8,
                ],
            );
        }
    }
    out
}

/// Scales each channel by its multiplier, rounding and clamping to `[0, 255]`.
pub fn multiplicative_noise(image: &DocumentImage, multipliers: [f64; 3]) -> DocumentImage {
    if multipliers == [1.0; 3] {
        return image.clone();
    }
    let mut out = image.clone();
    let pixels = out.pixels_mut();
    for chunk in pixels.chunks_exact_mut(3) {
        for (c, v) in chunk.iter_mut().enumerate() {
            *v = (*v as f64 * multipliers[c]).round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn checker(w: u32, h: u32) -> DocumentImage {
        let mut img = DocumentImage::filled(w, h, [255; 3]);
        for y in 0..h {
            for x in 0..w {
                if (x / 4 + y / 4) % 2 == 0 {
                    img.set(x, y, [40, 80, 120]);
                }
            }
        }
        img
    }

    #[test]
    fn zero_angle_is_identity() {
        let img = checker(50, 40);
        let boxes = vec![BBox::new(5.0, 5.0, 20.0, 15.0).unwrap()];
        let out = rotate_with_boxes(&img, &boxes, 0.0, 5.0, Interpolation::Cubic, MarginPolicy::Clip)
            .unwrap();
        assert_eq!(out.image, img);
        assert_eq!(out.boxes, boxes);
        assert!(!out.guard_triggered);
    }

    #[test]
    fn angle_beyond_bound_is_rejected() {
        let img = checker(10, 10);
        assert!(matches!(
            rotate_with_boxes(&img, &[], 7.0, 5.0, Interpolation::Cubic, MarginPolicy::Clip),
            Err(Error::InvalidAngle { .. })
        ));
    }

    #[test]
    fn quarter_turn_square_box_maps_to_itself() {
        let img = checker(100, 100);
        let boxes = vec![BBox::new(40.0, 40.0, 60.0, 60.0).unwrap()];
        let out = rotate_with_boxes(&img, &boxes, 90.0, 90.0, Interpolation::Cubic, MarginPolicy::Clip)
            .unwrap();
        assert_eq!(out.image.width(), 100);
        assert_eq!(out.image.height(), 100);
        let b = out.boxes[0];
        assert!((b.x_min - 40.0).abs() < 1e-9);
        assert!((b.y_min - 40.0).abs() < 1e-9);
        assert!((b.x_max - 60.0).abs() < 1e-9);
        assert!((b.y_max - 60.0).abs() < 1e-9);
    }

    #[test]
    fn guard_skips_rotation_near_border() {
        let img = checker(100, 100);
        // 5 px from the left border
        let boxes = vec![BBox::new(5.0, 40.0, 30.0, 60.0).unwrap()];
        for angle in [1.0, 3.0, 5.0] {
            let out = rotate_with_boxes(
                &img,
                &boxes,
                angle,
                5.0,
                Interpolation::Cubic,
                MarginPolicy::Guard(20.0),
            )
            .unwrap();
            assert!(out.guard_triggered, "angle {angle} should trigger the guard");
            assert_eq!(out.image, img);
            assert_eq!(out.boxes, boxes);
        }
    }

    #[test]
    fn guard_passes_for_central_box() {
        let img = checker(200, 200);
        let boxes = vec![BBox::new(80.0, 80.0, 120.0, 120.0).unwrap()];
        let out = rotate_with_boxes(
            &img,
            &boxes,
            4.0,
            5.0,
            Interpolation::Cubic,
            MarginPolicy::Guard(20.0),
        )
        .unwrap();
        assert!(!out.guard_triggered);
        let (w, h) = (out.image.width() as f64, out.image.height() as f64);
        for b in &out.boxes {
            assert!(b.x_min >= 20.0 && b.y_min >= 20.0);
            assert!(b.x_max <= w - 20.0 && b.y_max <= h - 20.0);
        }
    }

    #[test]
    fn scale_identity_when_target_equals_source() {
        let img = checker(64, 48);
        let boxes = vec![BBox::new(8.0, 8.0, 24.0, 20.0).unwrap()];
        let (out, out_boxes) = scale_with_boxes(&img, &boxes, 64, 48).unwrap();
        assert_eq!(out, img);
        assert_eq!(out_boxes, boxes);
    }

    #[test]
    fn scale_doubles_boxes() {
        let img = checker(100, 100);
        let boxes = vec![BBox::new(10.0, 10.0, 20.0, 20.0).unwrap()];
        let (out, out_boxes) = scale_with_boxes(&img, &boxes, 200, 200).unwrap();
        assert_eq!((out.width(), out.height()), (200, 200));
        assert_eq!(out_boxes[0].to_array(), [20.0, 20.0, 40.0, 40.0]);
    }

    #[test]
    fn scale_anisotropic() {
        let img = checker(100, 50);
        let boxes = vec![BBox::new(10.0, 10.0, 20.0, 20.0).unwrap()];
        let (_, out_boxes) = scale_with_boxes(&img, &boxes, 50, 100).unwrap();
        assert_eq!(out_boxes[0].to_array(), [5.0, 20.0, 10.0, 40.0]);
    }

    #[test]
    fn padding_shifts_boxes() {
        let img = checker(100, 80);
        let boxes = vec![BBox::new(10.0, 10.0, 30.0, 20.0).unwrap()];
        let (out, out_boxes) = pad_replicate(&img, &boxes, 0.05).unwrap();
        assert_eq!((out.width(), out.height()), (110, 88));
        assert_eq!(out_boxes[0].to_array(), [15.0, 14.0, 35.0, 24.0]);
    }

    #[test]
    fn median_of_constant_image_is_identity() {
        let img = DocumentImage::filled(16, 16, [123, 45, 67]);
        assert_eq!(median_blur(&img, 3).unwrap(), img);
    }

    #[test]
    fn median_rejects_even_kernels() {
        let img = DocumentImage::filled(4, 4, [0; 3]);
        assert!(matches!(median_blur(&img, 4), Err(Error::InvalidParams(_))));
        assert!(matches!(median_blur(&img, 0), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn median_removes_salt_noise() {
        let mut img = DocumentImage::filled(9, 9, [200; 3]);
        img.set(4, 4, [0, 0, 0]);
        let out = median_blur(&img, 3).unwrap();
        assert_eq!(out.get(4, 4), [200, 200, 200]);
    }

    #[test]
    fn unit_noise_is_identity() {
        let img = checker(10, 10);
        assert_eq!(multiplicative_noise(&img, [1.0; 3]), img);
    }

    #[test]
    fn half_noise_halves_values() {
        let img = DocumentImage::filled(4, 4, [200; 3]);
        let out = multiplicative_noise(&img, [0.5; 3]);
        assert!(out.pixels().iter().all(|&v| v == 100));
    }

    #[test]
    fn identity_jitter_is_identity() {
        let img = checker(12, 12);
        assert_eq!(color_jitter(&img, JitterFactors::IDENTITY), img);
    }

    #[test]
    fn jitter_brightness_scales_values() {
        let img = DocumentImage::filled(4, 4, [100; 3]);
        let out = color_jitter(
            &img,
            JitterFactors { brightness: 1.2, ..JitterFactors::IDENTITY },
        );
        assert!(out.pixels().iter().all(|&v| v == 120));
    }

    #[test]
    fn hsv_round_trip() {
        for &(r, g, b) in &[(0.2, 0.6, 0.9), (0.0, 0.0, 0.0), (1.0, 1.0, 1.0), (0.8, 0.1, 0.3)] {
            let (h, s, v) = rgb_to_hsv(r, g, b);
            let (r2, g2, b2) = hsv_to_rgb(h, s, v);
            assert!((r - r2).abs() < 1e-9);
            assert!((g - g2).abs() < 1e-9);
            assert!((b - b2).abs() < 1e-9);
        }
    }
}
