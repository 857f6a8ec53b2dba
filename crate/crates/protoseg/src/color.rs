//! sRGB to CIELAB conversion (D65 white point).

/// CIELAB triple; L in [0, 100], a/b roughly in [-128, 127].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Lab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const EPS: f64 = 0.008856;
    const KAPPA: f64 = 903.3;
    if t > EPS {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

/// Convert one sRGB pixel (components in [0,1]) to CIELAB.
pub fn rgb_to_lab(r: f64, g: f64, b: f64) -> Lab {
    let rl = srgb_to_linear(r);
    let gl = srgb_to_linear(g);
    let bl = srgb_to_linear(b);
    let x = rl * 0.4124564 + gl * 0.3575761 + bl * 0.1804375;
    let y = rl * 0.2126729 + gl * 0.7151522 + bl * 0.0721750;
    let z = rl * 0.0193339 + gl * 0.1191920 + bl * 0.9503041;
    // D65 reference white
    let fx = lab_f(x / 0.950456);
    let fy = lab_f(y / 1.0);
    let fz = lab_f(z / 1.088754);
    Lab {
        l: 116.0 * fy - 16.0,
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn black_and_white_endpoints() {
        let black = rgb_to_lab(0.0, 0.0, 0.0);
        assert!(black.l.abs() < 1e-9);
        assert!(black.a.abs() < 1e-9 && black.b.abs() < 1e-9);
        let white = rgb_to_lab(1.0, 1.0, 1.0);
        assert!((white.l - 100.0).abs() < 0.01);
        assert!(white.a.abs() < 0.01 && white.b.abs() < 0.01);
    }

    #[test]
    fn gray_axis_is_neutral() {
        for i in 1..10 {
            let v = i as f64 / 10.0;
            let lab = rgb_to_lab(v, v, v);
            assert!(lab.a.abs() < 0.01 && lab.b.abs() < 0.01);
        }
    }

    #[test]
    fn primary_colors_have_expected_signs() {
        let red = rgb_to_lab(1.0, 0.0, 0.0);
        assert!(red.a > 0.0 && red.b > 0.0);
        let green = rgb_to_lab(0.0, 1.0, 0.0);
        assert!(green.a < 0.0);
        let blue = rgb_to_lab(0.0, 0.0, 1.0);
        assert!(blue.b < 0.0);
    }
}
