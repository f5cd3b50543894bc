//! Iterated shrinking of the asymptotic error bounds.
//!
//! With `S_n = y1_n + y2_n`:
//! `xi_n = C S_n / k2^3`, `eta_n = C S_n / k2^2`, `y1_{n+1} = C xi_n`,
//! `y2_{n+1} = sqrt(C k2^2 xi_n y1_n)`. Then
//! `S_{n+1} <= C (1 + C / k2^{5/2}) / sqrt(k2) * S_n`.

#[derive(Debug, Clone, PartialEq)]
pub struct Bootstrap {
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    /// Guaranteed per-step factor `C' / sqrt(k2)`.
    pub factor: f64,
    /// Largest observed ratio `S_{n+1} / S_n`.
    pub max_ratio: f64,
}

impl Bootstrap {
    pub fn pair_sum(&self, n: usize) -> f64 {
        self.y1[n] + self.y2[n]
    }

    pub fn contractive(&self) -> bool {
        self.factor < 1.0
    }

    /// Every step obeys the guaranteed factor.
    pub fn bound_holds(&self) -> bool {
        self.max_ratio <= self.factor * (1.0 + 1e-12)
    }
}

/// `C' = C (1 + C / k2^{5/2})`.
pub fn induced_constant(c: f64, k2: f64) -> f64 {
    c * (1.0 + c / k2.powf(2.5))
}

pub fn bootstrap_recursion(c: f64, k2: f64, y10: f64, y20: f64, n_steps: usize) -> Bootstrap {
    let mut y1 = vec![y10];
    let mut y2 = vec![y20];
    let mut xi = Vec::with_capacity(n_steps + 1);
    let mut eta = Vec::with_capacity(n_steps + 1);
    let mut max_ratio = 0.0f64;
    for n in 0..=n_steps {
        let s = y1[n] + y2[n];
        xi.push(c * s / k2.powi(3));
        eta.push(c * s / (k2 * k2));
        if n == n_steps {
            break;
        }
        let a = c * xi[n];
        let b = (c * k2 * k2 * xi[n] * y1[n]).sqrt();
        if s > 0.0 {
            max_ratio = max_ratio.max((a + b) / s);
        }
        y1.push(a);
        y2.push(b);
    }
    Bootstrap {
        y1,
        y2,
        xi,
        eta,
        factor: induced_constant(c, k2) / k2.sqrt(),
        max_ratio,
    }
}
