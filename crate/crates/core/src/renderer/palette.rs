//! Named fill palettes, accent colours and contrast arithmetic.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub fn parse_hex(s: &str) -> Option<Rgb> {
        let h = s.strip_prefix('#')?;
        if h.len() != 6 || !h.bytes().all(|b| b.is_ascii_hexdigit()) {
            return None;
        }
        let byte = |i: usize| u8::from_str_radix(&h[i..i + 2], 16).ok();
        Some(Rgb(byte(0)?, byte(2)?, byte(4)?))
    }

    pub fn hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }

    /// Relative luminance (sRGB, WCAG definition).
    pub fn luminance(self) -> f64 {
        let lin = |c: u8| {
            let c = c as f64 / 255.0;
            if c <= 0.04045 {
                c / 12.92
            } else {
                ((c + 0.055) / 1.055).powf(2.4)
            }
        };
        0.2126 * lin(self.0) + 0.7152 * lin(self.1) + 0.0722 * lin(self.2)
    }

    /// CIE L*a*b* under D65.
    pub fn lab(self) -> [f64; 3] {
        let lin = |c: u8| {
            let c = c as f64 / 255.0;
            if c <= 0.04045 {
                c / 12.92
            } else {
                ((c + 0.055) / 1.055).powf(2.4)
            }
        };
        let (r, g, b) = (lin(self.0), lin(self.1), lin(self.2));
        let x = (0.4124 * r + 0.3576 * g + 0.1805 * b) / 0.95047;
        let y = 0.2126 * r + 0.7152 * g + 0.0722 * b;
        let z = (0.0193 * r + 0.1192 * g + 0.9505 * b) / 1.08883;
        let f = |t: f64| {
            if t > 216.0 / 24389.0 {
                t.cbrt()
            } else {
                (24389.0 / 27.0 * t + 16.0) / 116.0
            }
        };
        let (fx, fy, fz) = (f(x), f(y), f(z));
        [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
    }
}

/// WCAG contrast ratio, always >= 1.
pub fn contrast_ratio(a: Rgb, b: Rgb) -> f64 {
    let (la, lb) = (a.luminance(), b.luminance());
    (la.max(lb) + 0.05) / (la.min(lb) + 0.05)
}

/// CIE76 colour difference.
pub fn delta_e(a: Rgb, b: Rgb) -> f64 {
    let (p, q) = (a.lab(), b.lab());
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
}

pub const MIN_CONTRAST: f64 = 3.0;
/// Minimum CIE76 distance between two fills used in one scene.
pub const MIN_DELTA_E: f64 = 12.0;

const PASTEL1: [&str; 9] = [
    "#fbb4ae", "#b3cde3", "#ccebc5", "#decbe4", "#fed9a6", "#ffffcc", "#e5d8bd", "#fddaec", "#f2f2f2",
];
const PASTEL2: [&str; 8] = ["#b3e2cd", "#fdcdac", "#cbd5e8", "#f4cae4", "#e6f5c9", "#fff2ae", "#f1e2cc", "#cccccc"];

/// Fill slots scenes may use; every pair within them clears [`MIN_DELTA_E`].
pub const PALETTE_SLOTS: usize = 7;

pub const PALETTE_NAMES: [&str; 2] = ["Pastel1", "Pastel2"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette {
    pub name: &'static str,
    pub colors: Vec<Rgb>,
}

pub fn palette(name: &str) -> Option<Palette> {
    let table: &[&str] = match name {
        "Pastel1" => &PASTEL1,
        "Pastel2" => &PASTEL2,
        _ => return None,
    };
    let name = PALETTE_NAMES.into_iter().find(|n| *n == name)?;
    Some(Palette {
        name,
        colors: table.iter().map(|h| Rgb::parse_hex(h).expect("static table")).collect(),
    })
}

/// Marking colours for agents and arrows, shared by every palette.
pub const ACCENTS: [(&str, &str); 6] = [
    ("red", "#ff5a5a"),
    ("blue", "#5aa9ff"),
    ("green", "#4fd17a"),
    ("orange", "#ffa53d"),
    ("purple", "#c18bff"),
    ("yellow", "#f2e14c"),
];

pub fn accent(idx: usize) -> Option<Rgb> {
    ACCENTS.get(idx).and_then(|(_, h)| Rgb::parse_hex(h))
}

pub fn accent_name(idx: usize) -> Option<&'static str> {
    ACCENTS.get(idx).map(|(n, _)| *n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_black_contrast() {
        let c = contrast_ratio(Rgb(255, 255, 255), Rgb(0, 0, 0));
        assert!((c - 21.0).abs() < 1e-9);
    }

    #[test]
    fn palettes_resolve() {
        assert_eq!(palette("Pastel1").unwrap().colors.len(), 9);
        assert_eq!(palette("Pastel2").unwrap().colors.len(), 8);
        assert!(palette("Viridis").is_none());
    }

    #[test]
    fn pastel_fills_stand_out_on_dark_background() {
        let bg = Rgb::parse_hex("#22252b").unwrap();
        for name in PALETTE_NAMES {
            for c in palette(name).unwrap().colors.iter().take(PALETTE_SLOTS) {
                assert!(contrast_ratio(*c, bg) >= MIN_CONTRAST, "{name} {c:?}");
            }
        }
    }

    #[test]
    fn usable_slots_are_pairwise_distinct() {
        for name in PALETTE_NAMES {
            let p = palette(name).unwrap();
            for i in 0..PALETTE_SLOTS {
                for j in i + 1..PALETTE_SLOTS {
                    assert!(delta_e(p.colors[i], p.colors[j]) >= MIN_DELTA_E, "{name} {i} {j}");
                }
            }
        }
    }

    #[test]
    fn lab_of_white() {
        let l = Rgb(255, 255, 255).lab();
        assert!((l[0] - 100.0).abs() < 0.01 && l[1].abs() < 0.05 && l[2].abs() < 0.05);
    }
}
