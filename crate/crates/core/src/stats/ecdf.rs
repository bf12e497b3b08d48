//! Right-continuous step CDFs and Kolmogorov–Smirnov distances.

/// A distribution with finitely many atoms, stored as sorted distinct
/// locations and the cumulative mass at each.
#[derive(Clone, Debug, PartialEq)]
pub struct StepCdf {
    locations: Vec<f64>,
    cumulative: Vec<f64>,
}

/// The empirical CDF is a step CDF with equal masses.
pub type EmpiricalCdf = StepCdf;

impl StepCdf {
    /// Empirical CDF of `data`. NaNs are not allowed.
    pub fn new(data: &[f64]) -> Self {
        let mut sorted = data.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
        Self::from_sorted(&sorted)
    }

    pub fn from_sorted(sorted: &[f64]) -> Self {
        let n = sorted.len() as f64;
        let mut locations = Vec::with_capacity(sorted.len());
        let mut cumulative = Vec::with_capacity(sorted.len());
        for (i, &x) in sorted.iter().enumerate() {
            if locations.last() == Some(&x) {
                *cumulative.last_mut().unwrap() = (i + 1) as f64 / n;
            } else {
                locations.push(x);
                cumulative.push((i + 1) as f64 / n);
            }
        }
        StepCdf { locations, cumulative }
    }

    /// From `(location, mass)` atoms in any order; masses are renormalized.
    pub fn from_atoms(atoms: &mut [(f64, f64)]) -> Self {
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("NaN atom"));
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let mut locations = Vec::with_capacity(atoms.len());
        let mut cumulative: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for &(x, w) in atoms.iter() {
            acc += w;
            if locations.last() == Some(&x) {
                *cumulative.last_mut().unwrap() = acc / total;
            } else {
                locations.push(x);
                cumulative.push(acc / total);
            }
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        StepCdf { locations, cumulative }
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    /// `F(t)`, right-continuous.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.locations.partition_point(|&x| x <= t);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// `F(t⁻)`.
    pub fn eval_left(&self, t: f64) -> f64 {
        let k = self.locations.partition_point(|&x| x < t);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// Smallest location with `F ≥ u`.
    pub fn quantile(&self, u: f64) -> f64 {
        let k = self.cumulative.partition_point(|&c| c < u);
        self.locations[k.min(self.locations.len() - 1)]
    }

    /// `sup_t |F(t) − G(t)|` between two step CDFs, attained at a jump of
    /// one of them.
    pub fn sup_distance(&self, other: &StepCdf) -> f64 {
        let (mut i, mut j) = (0usize, 0usize);
        let (mut fa, mut fb) = (0.0f64, 0.0f64);
        let mut best = 0.0f64;
        while i < self.locations.len() || j < other.locations.len() {
            let xa = self.locations.get(i).copied().unwrap_or(f64::INFINITY);
            let xb = other.locations.get(j).copied().unwrap_or(f64::INFINITY);
            let t = xa.min(xb);
            if xa == t {
                fa = self.cumulative[i];
                i += 1;
            }
            if xb == t {
                fb = other.cumulative[j];
                j += 1;
            }
            best = best.max((fa - fb).abs());
        }
        best
    }
}

/// `sup_t |F_n(t) − F(t)|` for a continuous `F`, checked on both sides of
/// every jump of `F_n`.
pub fn ks_distance<F: Fn(f64) -> f64>(ecdf: &StepCdf, cdf: F) -> f64 {
    let mut prev = 0.0;
    let mut best = 0.0f64;
    for (&x, &c) in ecdf.locations.iter().zip(&ecdf.cumulative) {
        let f = cdf(x);
        best = best.max((c - f).abs()).max((prev - f).abs());
        prev = c;
    }
    best
}
