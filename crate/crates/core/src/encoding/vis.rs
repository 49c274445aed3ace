use std::f64::consts::PI;
use std::io::Write;

use super::FlowEncoding;
use crate::camera::Camera;

/// Flow magnitudes (m) treated as zero: round-off of an identity mapping.
pub const VIS_FLOW_FLOOR: f64 = 1e-6;

/// Color image of the middle sample's flow: hue is the direction of the
/// flow's camera-frame `(x, y)` part, value is `|flow| / max |flow|`.
/// Images whose largest flow is below [`VIS_FLOW_FLOOR`] render black.
/// Returns the binary PPM and the normalizer.
pub fn flow_visualization_ppm(enc: &FlowEncoding, cam: &Camera) -> (Vec<u8>, f64) {
    let (w, h, n) = (enc.meta.width, enc.meta.height, enc.meta.n_samples);
    let mid = n / 2;
    let rt = cam.rotation().transpose();
    let flows: Vec<crate::Vec3> = (0..h)
        .flat_map(|row| (0..w).map(move |col| (col, row)))
        .map(|(col, row)| {
            let f = enc.flow(col, row, mid);
            rt * crate::Vec3::new(f[0] as f64, f[1] as f64, f[2] as f64)
        })
        .collect();
    let max = flows.iter().map(|f| f.norm()).fold(0.0, f64::max);

    let mut out = Vec::with_capacity(64 + 3 * w * h);
    write!(
        out,
        "P6\n# flow sample {mid}; hue = camera-frame xy direction; value = |flow| / max_flow_m\n# max_flow_m = {max}\n{w} {h}\n255\n"
    )
    .unwrap();
    for f in &flows {
        let value = if max >= VIS_FLOW_FLOOR {
            f.norm() / max
        } else {
            0.0
        };
        let hue = (f.y.atan2(f.x) + 2.0 * PI) % (2.0 * PI) / (2.0 * PI) * 6.0;
        out.extend_from_slice(&hsv_to_rgb(hue, 1.0, value));
    }
    (out, max)
}

/// `hue` in `[0, 6)`.
fn hsv_to_rgb(hue: f64, sat: f64, value: f64) -> [u8; 3] {
    let c = value * sat;
    let x = c * (1.0 - (hue % 2.0 - 1.0).abs());
    let (r, g, b) = match hue as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = value - c;
    [r, g, b].map(|ch| ((ch + m) * 255.0).round().clamp(0.0, 255.0) as u8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primary_hues() {
        assert_eq!(hsv_to_rgb(0.0, 1.0, 1.0), [255, 0, 0]);
        assert_eq!(hsv_to_rgb(2.0, 1.0, 1.0), [0, 255, 0]);
        assert_eq!(hsv_to_rgb(4.0, 1.0, 1.0), [0, 0, 255]);
        assert_eq!(hsv_to_rgb(1.3, 1.0, 0.0), [0, 0, 0]);
    }
}
