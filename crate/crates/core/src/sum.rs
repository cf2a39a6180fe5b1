//! Compensated (Neumaier) accumulation for real and complex sums.

use crate::C64;

/// Neumaier's variant of Kahan summation: robust even when an addend is larger
/// than the running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Componentwise compensated complex sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSum {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: C64) {
        self.re.add(v.re);
        self.im.add(v.im);
    }

    #[inline]
    pub fn value(&self) -> C64 {
        C64::new(self.re.value(), self.im.value())
    }
}

/// Compensated sum of an iterator of reals.
pub fn neumaier<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = NeumaierSum::new();
    for v in it {
        s.add(v);
    }
    s.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_small_terms() {
        // naive summation returns 0 here
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(neumaier(v), 2.0);
    }

    #[test]
    fn harmonic_matches_reference() {
        let s = neumaier((1..=1_000_000).map(|n| 1.0 / n as f64));
        // H_n = ln n + γ + 1/(2n) − 1/(12n²) + …
        let n = 1e6_f64;
        let h = n.ln() + 0.577_215_664_901_532_9 + 0.5 / n - 1.0 / (12.0 * n * n);
        assert!((s - h).abs() < 1e-13);
    }

    #[test]
    fn complex_sum_componentwise() {
        let mut s = ComplexSum::new();
        s.add(C64::new(1.0, 1e100));
        s.add(C64::new(1e100, 1.0));
        s.add(C64::new(-1e100, -1e100));
        assert_eq!(s.value(), C64::new(1.0, 1.0));
    }
}
