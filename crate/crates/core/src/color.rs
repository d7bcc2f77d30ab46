//! sRGB (D65) to CIE-LAB conversion, Euclidean LAB distance and a coarse
//! Munsell-style hue bucketing.

use core::fmt;

/// A 24-bit sRGB color. Orders lexicographically by `(r, g, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rgb24 {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb24 {
    pub const BLACK: Rgb24 = Rgb24::new(0, 0, 0);
    pub const WHITE: Rgb24 = Rgb24::new(255, 255, 255);

    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    pub const fn to_array(self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }

    pub const fn from_array([r, g, b]: [u8; 3]) -> Self {
        Self { r, g, b }
    }

    /// Channels mapped to linear-light RGB in `[0, 1]`.
    pub fn to_linear(self) -> [f64; 3] {
        [
            srgb_to_linear(self.r),
            srgb_to_linear(self.g),
            srgb_to_linear(self.b),
        ]
    }

    /// Inverse of [`Rgb24::to_linear`], clamping to gamut and rounding to the
    /// nearest integer step.
    pub fn from_linear(rgb: [f64; 3]) -> Self {
        Self::new(
            linear_to_srgb(rgb[0]),
            linear_to_srgb(rgb[1]),
            linear_to_srgb(rgb[2]),
        )
    }
}

impl fmt::Display for Rgb24 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.r, self.g, self.b)
    }
}

impl From<[u8; 3]> for Rgb24 {
    fn from(v: [u8; 3]) -> Self {
        Self::from_array(v)
    }
}

/// A CIE-LAB color (D65 reference white).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LabColor {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl LabColor {
    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        Self { l, a, b }
    }

    pub const fn to_array(self) -> [f64; 3] {
        [self.l, self.a, self.b]
    }

    pub const fn from_array([l, a, b]: [f64; 3]) -> Self {
        Self { l, a, b }
    }
}

// IEC 61966-2-1 linear sRGB -> XYZ.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.240_454_2, -1.537_138_5, -0.498_531_4],
    [-0.969_266_0, 1.876_010_8, 0.041_556_0],
    [0.055_643_4, -0.204_025_9, 1.057_225_2],
];

// Reference white is the image of linear (1, 1, 1), so sRGB white is exactly neutral.
const WHITE_X: f64 = 0.412_456_4 + 0.357_576_1 + 0.180_437_5;
const WHITE_Y: f64 = 0.212_672_9 + 0.715_152_2 + 0.072_175_0;
const WHITE_Z: f64 = 0.019_333_9 + 0.119_192_0 + 0.950_304_1;

const DELTA: f64 = 6.0 / 29.0;

fn srgb_to_linear(c: u8) -> f64 {
    let v = f64::from(c) / 255.0;
    if v <= 0.040_45 {
        v / 12.92
    } else {
        libm::pow((v + 0.055) / 1.055, 2.4)
    }
}

fn linear_to_srgb(v: f64) -> u8 {
    let v = v.clamp(0.0, 1.0);
    let s = if v <= 0.003_130_8 {
        12.92 * v
    } else {
        1.055 * libm::pow(v, 1.0 / 2.4) - 0.055
    };
    libm::round(s * 255.0).clamp(0.0, 255.0) as u8
}

fn lab_f(t: f64) -> f64 {
    if t > DELTA * DELTA * DELTA {
        libm::cbrt(t)
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

fn lab_f_inv(t: f64) -> f64 {
    if t > DELTA {
        t * t * t
    } else {
        3.0 * DELTA * DELTA * (t - 4.0 / 29.0)
    }
}

fn mat_vec(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// LAB coordinates of a linear-light RGB triple. Used directly by the observer
/// simulator, which works in linear RGB.
pub fn linear_rgb_to_lab(rgb: [f64; 3]) -> LabColor {
    let [x, y, z] = mat_vec(&RGB_TO_XYZ, rgb);
    let fx = lab_f(x / WHITE_X);
    let fy = lab_f(y / WHITE_Y);
    let fz = lab_f(z / WHITE_Z);
    LabColor {
        l: 116.0 * fy - 16.0,
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}

pub fn rgb_to_lab(c: Rgb24) -> LabColor {
    linear_rgb_to_lab(c.to_linear())
}

/// Inverse conversion, rounding to the nearest in-gamut 24-bit color.
pub fn lab_to_rgb(lab: LabColor) -> Rgb24 {
    let fy = (lab.l + 16.0) / 116.0;
    let fx = fy + lab.a / 500.0;
    let fz = fy - lab.b / 200.0;
    let xyz = [
        lab_f_inv(fx) * WHITE_X,
        lab_f_inv(fy) * WHITE_Y,
        lab_f_inv(fz) * WHITE_Z,
    ];
    Rgb24::from_linear(mat_vec(&XYZ_TO_RGB, xyz))
}

pub fn lab_distance(p: LabColor, q: LabColor) -> f64 {
    euclidean(p.to_array(), q.to_array())
}

pub(crate) fn euclidean(p: [f64; 3], q: [f64; 3]) -> f64 {
    let d0 = p[0] - q[0];
    let d1 = p[1] - q[1];
    let d2 = p[2] - q[2];
    libm::sqrt(d0 * d0 + d1 * d1 + d2 * d2)
}

/// One of the ten Munsell hue families, or the neutral (achromatic) family.
///
/// Hue families are approximated by splitting the HSV hue circle into ten
/// equal 36 degree sectors starting at pure red. Zero-saturation colors map to
/// [`HueBucket::NEUTRAL`], which never equals a chromatic bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HueBucket(u8);

impl HueBucket {
    pub const LABELS: [&'static str; 10] = ["R", "YR", "Y", "GY", "G", "BG", "B", "PB", "P", "RP"];
    pub const NEUTRAL: HueBucket = HueBucket(10);

    /// Chromatic bucket by index; `None` for indices above 9.
    pub fn chromatic(index: u8) -> Option<Self> {
        (index < 10).then_some(Self(index))
    }

    /// Bucket for a hue angle in degrees. Angles are wrapped into `[0, 360)`.
    pub fn from_hue_degrees(h: f64) -> Self {
        let h = libm::fmod(h, 360.0);
        let h = if h < 0.0 { h + 360.0 } else { h };
        let idx = libm::floor(h / 36.0) as i64;
        Self(idx.clamp(0, 9) as u8)
    }

    /// Chromatic index in `0..10`, or `None` for the neutral sentinel.
    pub fn index(self) -> Option<u8> {
        (self.0 < 10).then_some(self.0)
    }

    /// Dense ordinal in `0..=10` (neutral last), handy for table lookups.
    pub fn ordinal(self) -> usize {
        usize::from(self.0)
    }

    pub fn from_ordinal(ordinal: usize) -> Option<Self> {
        (ordinal <= 10).then_some(Self(ordinal as u8))
    }

    pub fn is_neutral(self) -> bool {
        self.0 == 10
    }

    pub fn label(self) -> &'static str {
        match self.index() {
            Some(i) => Self::LABELS[usize::from(i)],
            None => "N",
        }
    }
}

impl fmt::Display for HueBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// HSV hue angle in degrees, `None` when saturation is zero.
pub fn hue_degrees(c: Rgb24) -> Option<f64> {
    let r = f64::from(c.r);
    let g = f64::from(c.g);
    let b = f64::from(c.b);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let chroma = max - min;
    if chroma == 0.0 {
        return None;
    }
    let h = if max == r {
        60.0 * ((g - b) / chroma)
    } else if max == g {
        60.0 * ((b - r) / chroma + 2.0)
    } else {
        60.0 * ((r - g) / chroma + 4.0)
    };
    Some(if h < 0.0 { h + 360.0 } else { h })
}

pub fn hue_bucket(c: Rgb24) -> HueBucket {
    match hue_degrees(c) {
        Some(h) => HueBucket::from_hue_degrees(h),
        None => HueBucket::NEUTRAL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn black_is_origin() {
        let lab = rgb_to_lab(Rgb24::BLACK);
        assert_eq!(lab, LabColor::new(0.0, 0.0, 0.0));
    }

    #[test]
    fn white_is_neutral_100() {
        let lab = rgb_to_lab(Rgb24::WHITE);
        assert!(close(lab.l, 100.0, 1e-9), "{lab:?}");
        assert!(lab.a.abs() < 0.01 && lab.b.abs() < 0.01, "{lab:?}");
    }

    #[test]
    fn red_matches_reference_formulas() {
        // Worked by hand from the published sRGB -> XYZ(D65) -> LAB chain with
        // Xn = 0.95047, Yn = 1, Zn = 1.08883: X = 0.412456, Y = 0.212673,
        // Z = 0.019334.
        let lab = rgb_to_lab(Rgb24::new(255, 0, 0));
        assert!(close(lab.l, 53.2408, 0.05), "{lab:?}");
        assert!(close(lab.a, 80.0925, 0.05), "{lab:?}");
        assert!(close(lab.b, 67.2032, 0.05), "{lab:?}");
    }

    #[test]
    fn distance_three_four_five() {
        let p = LabColor::new(10.0, 0.0, 0.0);
        let q = LabColor::new(13.0, 4.0, 0.0);
        assert_eq!(lab_distance(p, q), 5.0);
        assert_eq!(lab_distance(p, p), 0.0);
    }

    #[test]
    fn hue_bucket_boundaries() {
        assert_eq!(hue_bucket(Rgb24::new(255, 0, 0)).index(), Some(0));
        assert_eq!(HueBucket::from_hue_degrees(359.9).index(), Some(9));
        // hue = 360 - 60/255, about 359.76 degrees
        assert_eq!(hue_bucket(Rgb24::new(255, 0, 1)).index(), Some(9));
        // equal 36 degree sectors: 120 -> 3, 240 -> 6
        assert_eq!(hue_bucket(Rgb24::new(0, 255, 0)).index(), Some(3));
        assert_eq!(hue_bucket(Rgb24::new(0, 0, 255)).index(), Some(6));
    }

    #[test]
    fn gray_is_neutral_sentinel() {
        let gray = hue_bucket(Rgb24::new(128, 128, 128));
        assert!(gray.is_neutral());
        assert_eq!(gray.index(), None);
        assert_ne!(gray, hue_bucket(Rgb24::new(255, 0, 0)));
        assert!(hue_bucket(Rgb24::BLACK).is_neutral());
    }

    fn rgb() -> impl Strategy<Value = Rgb24> {
        any::<[u8; 3]>().prop_map(Rgb24::from)
    }

    fn lab() -> impl Strategy<Value = LabColor> {
        (0.0..100.0f64, -128.0..128.0f64, -128.0..128.0f64)
            .prop_map(|(l, a, b)| LabColor::new(l, a, b))
    }

    proptest! {
        #[test]
        fn lab_round_trip_within_one_step(c in rgb()) {
            let back = lab_to_rgb(rgb_to_lab(c));
            for (x, y) in c.to_array().into_iter().zip(back.to_array()) {
                prop_assert!((i16::from(x) - i16::from(y)).abs() <= 1, "{c:?} -> {back:?}");
            }
        }

        #[test]
        fn lightness_in_range(c in rgb()) {
            let lab = rgb_to_lab(c);
            prop_assert!((-1e-9..=100.0 + 1e-9).contains(&lab.l));
        }

        #[test]
        fn distance_matches_direct_formula(p in lab(), q in lab()) {
            let direct = ((p.l - q.l).powi(2) + (p.a - q.a).powi(2) + (p.b - q.b).powi(2)).sqrt();
            prop_assert!((lab_distance(p, q) - direct).abs() <= 1e-12 * (1.0 + direct));
        }

        #[test]
        fn distance_is_a_metric(p in lab(), q in lab(), r in lab()) {
            prop_assert_eq!(lab_distance(p, q), lab_distance(q, p));
            prop_assert!(lab_distance(p, q) >= 0.0);
            prop_assert!(lab_distance(p, r) <= lab_distance(p, q) + lab_distance(q, r) + 1e-9);
        }

        #[test]
        fn chromatic_colors_get_one_bucket(c in rgb()) {
            let b = hue_bucket(c);
            let chromatic = !(c.r == c.g && c.g == c.b);
            prop_assert_eq!(b.index().is_some(), chromatic);
            prop_assert_eq!(hue_bucket(c), b);
        }
    }
}
