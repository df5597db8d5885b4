//! Label colors. One 12-hue categorical palette assigned in first-appearance
//! order; labels beyond the 12th reuse hues with shifted lightness.

use std::fmt;

use serde::{Deserialize, Serialize};

/// 24-bit sRGB color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub fn hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }

    pub fn parse_hex(s: &str) -> Option<Rgb> {
        let s = s.strip_prefix('#')?;
        if s.len() != 6 {
            return None;
        }
        let c = |i: usize| u8::from_str_radix(&s[i..i + 2], 16).ok();
        Some(Rgb(c(0)?, c(2)?, c(4)?))
    }

    fn to_hsl(self) -> (f64, f64, f64) {
        let r = self.0 as f64 / 255.0;
        let g = self.1 as f64 / 255.0;
        let b = self.2 as f64 / 255.0;
        let max = r.max(g).max(b);
        let min = r.min(g).min(b);
        let l = 0.5 * (max + min);
        if max == min {
            return (0.0, 0.0, l);
        }
        let d = max - min;
        let s = if l > 0.5 { d / (2.0 - max - min) } else { d / (max + min) };
        let h = if max == r {
            ((g - b) / d).rem_euclid(6.0)
        } else if max == g {
            (b - r) / d + 2.0
        } else {
            (r - g) / d + 4.0
        };
        (h * 60.0, s, l)
    }

    fn from_hsl(h: f64, s: f64, l: f64) -> Rgb {
        let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
        let hp = h / 60.0;
        let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
        let (r, g, b) = match hp as u32 {
            0 => (c, x, 0.0),
            1 => (x, c, 0.0),
            2 => (0.0, c, x),
            3 => (0.0, x, c),
            4 => (x, 0.0, c),
            _ => (c, 0.0, x),
        };
        let m = l - 0.5 * c;
        let q = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
        Rgb(q(r), q(g), q(b))
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hex())
    }
}

impl Serialize for Rgb {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.hex())
    }
}

impl<'de> Deserialize<'de> for Rgb {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Rgb::parse_hex(&s).ok_or_else(|| serde::de::Error::custom(format!("bad color {s:?}")))
    }
}

/// Base hues: green and blue lead so a two-label scene reads like cup/bottle.
pub const BASE_COLORS: [Rgb; 12] = [
    Rgb(0x2c, 0xa0, 0x2c), // green
    Rgb(0x1f, 0x77, 0xb4), // blue
    Rgb(0xff, 0x7f, 0x0e), // orange
    Rgb(0x94, 0x67, 0xbd), // purple
    Rgb(0xe3, 0x77, 0xc2), // rose
    Rgb(0xd6, 0x27, 0x28), // red
    Rgb(0x17, 0xbe, 0xcf), // cyan
    Rgb(0xbc, 0xbd, 0x22), // olive
    Rgb(0x8c, 0x56, 0x4b), // brown
    Rgb(0x7f, 0x7f, 0x7f), // grey
    Rgb(0xfd, 0xbf, 0x6f), // light orange
    Rgb(0x6a, 0x3d, 0x9a), // dark purple
];

/// Color of the `index`-th label.
pub fn palette_color(index: usize) -> Rgb {
    let base = BASE_COLORS[index % BASE_COLORS.len()];
    let cycle = index / BASE_COLORS.len();
    if cycle == 0 {
        return base;
    }
    let (h, s, l) = base.to_hsl();
    // alternate lighter/darker so successive cycles stay distinguishable
    let step = 0.15 * cycle.div_ceil(2) as f64;
    let shifted = if cycle % 2 == 1 { l + step } else { l - step };
    Rgb::from_hsl(h, s, shifted.clamp(0.1, 0.9))
}

/// Ordered label → color table.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Palette {
    entries: Vec<PaletteEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaletteEntry {
    pub label: String,
    pub color: Rgb,
}

impl Palette {
    pub fn color(&self, label: &str) -> Option<Rgb> {
        self.entries.iter().find(|e| e.label == label).map(|e| e.color)
    }

    pub fn entries(&self) -> &[PaletteEntry] {
        &self.entries
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.label.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Assigns colors in the given order. Duplicate labels keep their first color.
/// Order matters: the same labels in another order get other colors.
pub fn assign_palette<S: AsRef<str>>(labels: &[S]) -> Palette {
    let mut entries: Vec<PaletteEntry> = Vec::new();
    for label in labels {
        let label = label.as_ref();
        if entries.iter().any(|e| e.label == label) {
            continue;
        }
        entries.push(PaletteEntry {
            label: label.to_string(),
            color: palette_color(entries.len()),
        });
    }
    Palette { entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_determines_colors() {
        let p = assign_palette(&["cup", "bottle"]);
        assert_eq!(p.color("cup"), Some(palette_color(0)));
        assert_eq!(p.color("bottle"), Some(palette_color(1)));
        let q = assign_palette(&["bottle", "cup"]);
        assert_ne!(p, q);
        assert_eq!(q.color("bottle"), Some(palette_color(0)));
        assert_eq!(assign_palette(&["cup", "bottle"]), p);
    }

    #[test]
    fn thirteenth_label_shifts_lightness_of_first_hue() {
        let labels: Vec<String> = (0..13).map(|i| format!("l{i}")).collect();
        let p = assign_palette(&labels);
        let first = p.color("l0").unwrap();
        let thirteenth = p.color("l12").unwrap();
        assert_ne!(first, thirteenth);
        let (h0, _, l0) = first.to_hsl();
        let (h12, _, l12) = thirteenth.to_hsl();
        assert!((h0 - h12).abs() < 2.0, "hue {h0} vs {h12}");
        assert!(l12 > l0);
        let distinct: std::collections::HashSet<_> = labels.iter().map(|l| p.color(l).unwrap()).collect();
        assert_eq!(distinct.len(), 13);
    }

    #[test]
    fn duplicates_keep_first_color() {
        let p = assign_palette(&["a", "b", "a"]);
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn hsl_round_trip() {
        for c in BASE_COLORS {
            let (h, s, l) = c.to_hsl();
            assert_eq!(Rgb::from_hsl(h, s, l), c);
        }
        assert_eq!(Rgb::parse_hex("#2ca02c"), Some(BASE_COLORS[0]));
        assert_eq!(Rgb::parse_hex("2ca02c"), None);
    }
}
