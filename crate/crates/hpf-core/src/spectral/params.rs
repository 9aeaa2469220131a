use std::f64::consts::PI;

/// Fundamental frequency and harmonic truncation order shared by all spectra
/// of one study.
///
/// The order set is `{-h_max, ..., 0, ..., +h_max}`, so `len() = 2*h_max + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParams {
    f1_hz: f64,
    h_max: u32,
}

impl SpectralParams {
    /// New parameter set. Panics if `f1_hz <= 0` or `h_max == 0`.
    pub fn new(f1_hz: f64, h_max: u32) -> Self {
        assert!(f1_hz > 0.0, "fundamental frequency must be positive");
        assert!(h_max >= 1, "h_max must be at least 1");
        Self { f1_hz, h_max }
    }

    pub fn f1_hz(&self) -> f64 {
        self.f1_hz
    }

    /// Fundamental angular frequency in rad/s.
    pub fn omega1(&self) -> f64 {
        2.0 * PI * self.f1_hz
    }

    /// Fundamental period in seconds.
    pub fn period(&self) -> f64 {
        1.0 / self.f1_hz
    }

    pub fn h_max(&self) -> u32 {
        self.h_max
    }

    /// Number of stored orders, `2*h_max + 1`.
    pub fn len(&self) -> usize {
        2 * self.h_max as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Iterate the order set from `-h_max` to `+h_max`.
    pub fn orders(&self) -> impl Iterator<Item = i32> + Clone {
        let h = self.h_max as i32;
        -h..=h
    }

    /// Storage index of order `h`, or `None` outside the band.
    pub fn index_of(&self, h: i32) -> Option<usize> {
        let hm = self.h_max as i32;
        if h.abs() <= hm {
            Some((h + hm) as usize)
        } else {
            None
        }
    }

    /// Order stored at index `i`.
    pub fn order_at(&self, i: usize) -> i32 {
        debug_assert!(i < self.len());
        i as i32 - self.h_max as i32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_set_is_symmetric() {
        let sp = SpectralParams::new(50.0, 25);
        assert_eq!(sp.len(), 51);
        let orders: Vec<i32> = sp.orders().collect();
        assert_eq!(orders[0], -25);
        assert_eq!(orders[50], 25);
        assert_eq!(sp.index_of(0), Some(25));
        assert_eq!(sp.index_of(26), None);
        for (i, h) in sp.orders().enumerate() {
            assert_eq!(sp.order_at(i), h);
            assert_eq!(sp.index_of(h), Some(i));
        }
    }

    #[test]
    #[should_panic]
    fn rejects_nonpositive_frequency() {
        SpectralParams::new(0.0, 5);
    }
}
