//! Binned densities on a bounded interval, integrated with the midpoint rule.

/// Largest tolerated deviation of `Σ p_k Δx` from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("interval [{a}, {b}] is empty or not finite")]
    InvalidInterval { a: f64, b: f64 },
    #[error("grid has no bins")]
    NoBins,
    #[error("density in bin {bin} is negative")]
    NegativeDensity { bin: usize },
    #[error("density in bin {bin} is not finite")]
    NonFiniteDensity { bin: usize },
    #[error("grid declares {declared} bins but lists {found} densities")]
    BinCount { declared: usize, found: usize },
    #[error("densities integrate to {value}, expected 1 within {NORMALIZATION_TOLERANCE:e}")]
    Normalization { value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridModel {
    a: f64,
    b: f64,
    densities: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridEstimate {
    pub estimate: f64,
    pub normalization: f64,
}

impl GridModel {
    pub fn new(a: f64, b: f64, densities: Vec<f64>) -> Result<GridModel, GridError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(GridError::InvalidInterval { a, b });
        }
        if densities.is_empty() {
            return Err(GridError::NoBins);
        }
        for (bin, d) in densities.iter().enumerate() {
            if !d.is_finite() {
                return Err(GridError::NonFiniteDensity { bin });
            }
            if *d < 0.0 {
                return Err(GridError::NegativeDensity { bin });
            }
        }
        Ok(GridModel { a, b, densities })
    }

    /// Samples `density` at the midpoint of each of `bins` equal bins.
    pub fn from_density(
        a: f64,
        b: f64,
        bins: usize,
        density: impl Fn(f64) -> f64,
    ) -> Result<GridModel, GridError> {
        let dx = (b - a) / bins as f64;
        let densities = (0..bins)
            .map(|k| density(a + (k as f64 + 0.5) * dx))
            .collect();
        GridModel::new(a, b, densities)
    }

    pub fn bins(&self) -> usize {
        self.densities.len()
    }

    pub fn width(&self) -> f64 {
        (self.b - self.a) / self.bins() as f64
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        self.a + (k as f64 + 0.5) * self.width()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn normalization(&self) -> f64 {
        self.densities.iter().sum::<f64>() * self.width()
    }

    /// Midpoint-rule integral of `f(x) p(x)`.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        let dx = self.width();
        self.densities
            .iter()
            .enumerate()
            .map(|(k, p)| f(self.midpoint(k)) * p * dx)
            .sum()
    }
}

/// Estimate of `x` under the grid density, with the normalization it was
/// computed against.
pub fn grid_eval(g: &GridModel) -> Result<GridEstimate, GridError> {
    let normalization = g.normalization();
    if (normalization - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(GridError::Normalization {
            value: normalization,
        });
    }
    Ok(GridEstimate {
        estimate: g.expect(|x| x),
        normalization,
    })
}
