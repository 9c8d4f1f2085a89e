/// Interpolant of a non-negative curve on a uniform grid: monotone cubic
/// (Fritsch–Carlson) on log-density between positive samples, linear in the
/// density wherever an endpoint is zero. Zero outside the grid.
#[derive(Debug, Clone)]
pub struct MonotoneCurve {
    x0: f64,
    dx: f64,
    y: Vec<f64>,
    log_y: Vec<f64>,
    slope: Vec<f64>,
}

impl MonotoneCurve {
    pub fn new(x0: f64, dx: f64, y: &[f64]) -> Self {
        let n = y.len();
        let log_y: Vec<f64> = y
            .iter()
            .map(|&v| if v > 0.0 { v.ln() } else { f64::NAN })
            .collect();
        let secant = |i: usize| -> Option<f64> {
            (i + 1 < n && y[i] > 0.0 && y[i + 1] > 0.0).then(|| (log_y[i + 1] - log_y[i]) / dx)
        };
        let slope = (0..n)
            .map(|i| {
                if !(y[i] > 0.0) {
                    return 0.0;
                }
                let left = if i > 0 { secant(i - 1) } else { None };
                let right = secant(i);
                match (left, right) {
                    (Some(a), Some(b)) => {
                        if a * b <= 0.0 {
                            0.0
                        } else {
                            2.0 / (1.0 / a + 1.0 / b)
                        }
                    }
                    (Some(a), None) => a,
                    (None, Some(b)) => b,
                    (None, None) => 0.0,
                }
            })
            .collect();
        MonotoneCurve {
            x0,
            dx,
            y: y.to_vec(),
            log_y,
            slope,
        }
    }

    pub fn lo(&self) -> f64 {
        self.x0
    }

    pub fn hi(&self) -> f64 {
        self.x0 + self.dx * (self.y.len() - 1) as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        let s = (x - self.x0) / self.dx;
        if !(s >= -1e-9 && s <= (n - 1) as f64 + 1e-9) {
            return 0.0;
        }
        let j = (s.floor().max(0.0) as usize).min(n - 2);
        let t = (s - j as f64).clamp(0.0, 1.0);
        let (a, b) = (self.y[j], self.y[j + 1]);
        if a > 0.0 && b > 0.0 {
            let (p0, p1) = (self.log_y[j], self.log_y[j + 1]);
            let (m0, m1) = (self.slope[j] * self.dx, self.slope[j + 1] * self.dx);
            let t2 = t * t;
            let t3 = t2 * t;
            let v = (2.0 * t3 - 3.0 * t2 + 1.0) * p0
                + (t3 - 2.0 * t2 + t) * m0
                + (-2.0 * t3 + 3.0 * t2) * p1
                + (t3 - t2) * m1;
            v.exp()
        } else {
            a + t * (b - a)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_exponentials() {
        let y: Vec<f64> = (0..20).map(|i| (-0.3 * i as f64).exp()).collect();
        let c = MonotoneCurve::new(0.0, 1.0, &y);
        for (i, v) in y.iter().enumerate() {
            assert!((c.eval(i as f64) - v).abs() < 1e-14);
        }
        // log-linear data is reproduced exactly between nodes
        assert!((c.eval(4.5) - (-1.35f64).exp()).abs() < 1e-12);
        assert_eq!(c.eval(-1.0), 0.0);
        assert_eq!(c.eval(25.0), 0.0);
    }

    #[test]
    fn linear_next_to_zeros() {
        let c = MonotoneCurve::new(0.0, 1.0, &[0.0, 2.0, 4.0, 0.0]);
        assert!((c.eval(0.5) - 1.0).abs() < 1e-14);
        assert!((c.eval(2.25) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn no_overshoot_on_monotone_data() {
        let y = [1.0, 1.0, 1.0, 5.0, 50.0, 51.0, 51.0];
        let c = MonotoneCurve::new(0.0, 1.0, &y);
        let mut prev = 0.0;
        for k in 0..=600 {
            let v = c.eval(k as f64 / 100.0);
            assert!(v + 1e-12 >= prev);
            assert!(v <= 51.0 + 1e-9);
            prev = v;
        }
    }
}
