/// Square torus `[0, L)²` with wrap-around distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Torus {
    side: f64,
}

impl Torus {
    pub fn new(side: f64) -> Self {
        assert!(
            side > 0.0 && side.is_finite(),
            "torus side must be positive"
        );
        Self { side }
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    #[inline]
    pub fn wrap(&self, x: f64) -> f64 {
        let w = x.rem_euclid(self.side);
        if w >= self.side {
            0.0
        } else {
            w
        }
    }

    #[inline]
    pub fn wrap_point(&self, p: [f64; 2]) -> [f64; 2] {
        [self.wrap(p[0]), self.wrap(p[1])]
    }

    /// Shortest per-axis separation of two wrapped coordinates.
    #[inline]
    pub fn delta(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        d.min(self.side - d)
    }

    #[inline]
    pub fn dist_sq(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let dx = self.delta(a[0], b[0]);
        let dy = self.delta(a[1], b[1]);
        dx * dx + dy * dy
    }
}
