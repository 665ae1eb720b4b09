//! Natural cubic spline interpolation through strictly increasing knots.

/// Natural cubic spline: second derivative zero at both ends. Evaluation
/// outside the knot range extrapolates linearly from the end slopes.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    y2: Vec<f64>,
}

impl CubicSpline {
    /// Fit a natural spline. Panics if fewer than two knots or knots are
    /// not strictly increasing in x.
    pub fn natural(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(xs.len() >= 2, "spline needs at least two knots");
        assert!(
            xs.windows(2).all(|w| w[0] < w[1]),
            "knots must be strictly increasing"
        );
        let n = xs.len();
        let mut y2 = vec![0.0; n];
        let mut u = vec![0.0; n];
        for i in 1..n - 1 {
            let sig = (xs[i] - xs[i - 1]) / (xs[i + 1] - xs[i - 1]);
            let p = sig * y2[i - 1] + 2.0;
            y2[i] = (sig - 1.0) / p;
            let d = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
                - (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
            u[i] = (6.0 * d / (xs[i + 1] - xs[i - 1]) - sig * u[i - 1]) / p;
        }
        for i in (0..n - 1).rev() {
            y2[i] = y2[i] * y2[i + 1] + u[i];
        }
        CubicSpline { xs, ys, y2 }
    }

    fn segment(&self, x: f64) -> usize {
        match self
            .xs
            .binary_search_by(|probe| probe.partial_cmp(&x).unwrap())
        {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.xs.len() - 2),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        if x < self.xs[0] {
            return self.ys[0] + self.derivative(self.xs[0]) * (x - self.xs[0]);
        }
        let last = self.xs.len() - 1;
        if x > self.xs[last] {
            return self.ys[last] + self.derivative(self.xs[last]) * (x - self.xs[last]);
        }
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.y2[i] + (b * b * b - b) * self.y2[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let last = self.xs.len() - 1;
        let xq = x.clamp(self.xs[0], self.xs[last]);
        let i = self.segment(xq);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - xq) / h;
        let b = (xq - self.xs[i]) / h;
        (self.ys[i + 1] - self.ys[i]) / h
            + ((3.0 * b * b - 1.0) * self.y2[i + 1] - (3.0 * a * a - 1.0) * self.y2[i]) * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interpolates_knots_exactly() {
        let xs: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x * 0.7).sin() + 3.0).collect();
        let s = CubicSpline::natural(xs.clone(), ys.clone());
        for (x, y) in xs.iter().zip(&ys) {
            assert_relative_eq!(s.value(*x), *y, epsilon = 1e-12);
        }
    }

    #[test]
    fn straight_data_stays_straight() {
        let xs = vec![0.0, 1.0, 2.0, 3.0];
        let ys = vec![3.0, 3.0, 3.0, 3.0];
        let s = CubicSpline::natural(xs, ys);
        for k in 0..=30 {
            let x = k as f64 * 0.1;
            assert_relative_eq!(s.value(x), 3.0, epsilon = 1e-12);
            assert_relative_eq!(s.derivative(x), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let xs: Vec<f64> = (0..=14).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x * 1.3).cos() * 2.0 + 4.0).collect();
        let s = CubicSpline::natural(xs, ys);
        let h = 1e-6;
        for k in 1..140 {
            let x = k as f64 * 0.1;
            let fd = (s.value(x + h) - s.value(x - h)) / (2.0 * h);
            assert_relative_eq!(s.derivative(x), fd, epsilon = 1e-5, max_relative = 1e-4);
        }
    }
}
