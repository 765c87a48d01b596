/// Exactly rounded floating-point sum (Shewchuk partials).
///
/// The running partials represent the exact sum of everything added, so the
/// result does not depend on the order of additions or merges.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExactSum {
    partials: Vec<f64>,
    special: f64,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, mut x: f64) {
        if !x.is_finite() {
            self.special += x;
            return;
        }
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    pub fn merge(&mut self, other: &ExactSum) {
        for &p in &other.partials {
            self.add(p);
        }
        self.special += other.special;
    }

    /// Sum rounded to nearest.
    pub fn value(&self) -> f64 {
        if self.special != 0.0 || self.special.is_nan() {
            return self.special;
        }
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // round half to even across the remaining partials
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}

/// Mean and CLT error bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub error: f64,
}

/// Weighted sample moments of a fixed set of real observables.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    count: u64,
    w: ExactSum,
    w2: ExactSum,
    // per observable: Σw x, Σw x², Σw² x, Σw² x²
    sums: Vec<[ExactSum; 4]>,
}

impl MomentAccumulator {
    pub fn new(observables: usize) -> Self {
        Self {
            count: 0,
            w: ExactSum::new(),
            w2: ExactSum::new(),
            sums: vec![Default::default(); observables],
        }
    }

    pub fn observables(&self) -> usize {
        self.sums.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push(&mut self, values: &[f64]) {
        self.push_weighted(1.0, values);
    }

    pub fn push_weighted(&mut self, weight: f64, values: &[f64]) {
        assert_eq!(values.len(), self.sums.len());
        self.count += 1;
        self.w.add(weight);
        self.w2.add(weight * weight);
        for (s, &x) in self.sums.iter_mut().zip(values) {
            s[0].add(weight * x);
            s[1].add(weight * x * x);
            s[2].add(weight * weight * x);
            s[3].add(weight * weight * x * x);
        }
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        assert_eq!(self.sums.len(), other.sums.len());
        self.count += other.count;
        self.w.merge(&other.w);
        self.w2.merge(&other.w2);
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            for k in 0..4 {
                a[k].merge(&b[k]);
            }
        }
    }

    /// Weighted mean Σw x/Σw; the error is the sample standard deviation over
    /// √count for unit weights and its ratio-estimator analogue otherwise.
    pub fn estimate(&self, obs: usize) -> Estimate {
        let s = &self.sums[obs];
        let w = self.w.value();
        let mean = s[0].value() / w;
        let n = self.count as f64;
        let error = if self.count < 2 {
            f64::NAN
        } else {
            let dev = s[3].value() - 2.0 * mean * s[2].value() + mean * mean * self.w2.value();
            (n / (n - 1.0) * dev.max(0.0)).sqrt() / w.abs()
        };
        Estimate { mean, error }
    }

    pub fn estimates(&self) -> Vec<Estimate> {
        (0..self.sums.len()).map(|k| self.estimate(k)).collect()
    }
}
