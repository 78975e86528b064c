//! Gray-mapped square QAM at unit average power.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constellation {
    Qpsk,
    Qam16,
    Qam64,
    Qam256,
}

impl Constellation {
    pub const ALL: [Constellation; 4] = [Self::Qpsk, Self::Qam16, Self::Qam64, Self::Qam256];

    pub fn order(self) -> u32 {
        match self {
            Self::Qpsk => 4,
            Self::Qam16 => 16,
            Self::Qam64 => 64,
            Self::Qam256 => 256,
        }
    }

    pub fn bits_per_symbol(self) -> u32 {
        self.order().trailing_zeros()
    }

    /// Amplitude levels per axis.
    pub fn levels(self) -> u32 {
        1 << (self.bits_per_symbol() / 2)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Qpsk => "qpsk",
            Self::Qam16 => "qam16",
            Self::Qam64 => "qam64",
            Self::Qam256 => "qam256",
        }
    }

    fn scale(self) -> f64 {
        (3.0 / (2.0 * (self.order() as f64 - 1.0))).sqrt()
    }

    fn axis_bits(self) -> u32 {
        self.bits_per_symbol() / 2
    }

    /// Symbol for label `bits`: upper half of the label selects the in-phase
    /// level, lower half the quadrature level, each Gray coded.
    pub fn map(self, bits: u32) -> Complex64 {
        let ab = self.axis_bits();
        let mask = (1 << ab) - 1;
        let i = self.pam_level((bits >> ab) & mask);
        let q = self.pam_level(bits & mask);
        Complex64::new(i, q) * self.scale()
    }

    /// Hard decision: label of the nearest constellation point.
    pub fn demap(self, y: Complex64) -> u32 {
        let ab = self.axis_bits();
        let s = self.scale();
        (self.pam_decide(y.re / s) << ab) | self.pam_decide(y.im / s)
    }

    pub fn nearest(self, y: Complex64) -> Complex64 {
        self.map(self.demap(y))
    }

    fn pam_level(self, gray: u32) -> f64 {
        let mut idx = gray;
        let mut shift = gray >> 1;
        while shift != 0 {
            idx ^= shift;
            shift >>= 1;
        }
        2.0 * idx as f64 - (self.levels() as f64 - 1.0)
    }

    fn pam_decide(self, a: f64) -> u32 {
        let l = self.levels() as f64;
        let idx = ((a + l - 1.0) / 2.0).round().clamp(0.0, l - 1.0) as u32;
        idx ^ (idx >> 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_average_power() {
        for c in Constellation::ALL {
            let p: f64 = (0..c.order()).map(|b| c.map(b).norm_sqr()).sum::<f64>() / c.order() as f64;
            assert!((p - 1.0).abs() < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn demap_inverts_map() {
        for c in Constellation::ALL {
            for b in 0..c.order() {
                assert_eq!(c.demap(c.map(b)), b);
            }
        }
    }

    #[test]
    fn nearest_neighbours_differ_by_one_bit() {
        for c in Constellation::ALL {
            let d = 2.0 * c.scale();
            for b in 0..c.order() {
                let p = c.map(b);
                for step in [Complex64::new(d, 0.0), Complex64::new(0.0, d)] {
                    let q = p + step;
                    let lim = (c.levels() as f64 - 1.0) * c.scale() + 1e-9;
                    if q.re.abs() <= lim && q.im.abs() <= lim {
                        assert_eq!((c.demap(q) ^ b).count_ones(), 1);
                    }
                }
            }
        }
    }

    #[test]
    fn qpsk_points() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((Constellation::Qpsk.map(0) - Complex64::new(-s, -s)).norm() < 1e-12);
        assert!((Constellation::Qpsk.map(3) - Complex64::new(s, s)).norm() < 1e-12);
    }
}
