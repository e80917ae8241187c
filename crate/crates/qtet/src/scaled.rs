//! Log-scaled complex arithmetic for products and sums whose magnitudes
//! overflow f64 (quantum factorials, 6j k-sums, state-sum accumulation).

use num_complex::Complex64;
use std::f64::consts::PI;

/// Wrap an angle into (-pi, pi].
pub fn wrap_phase(p: f64) -> f64 {
    if p.is_finite() {
        let mut w = p.rem_euclid(2.0 * PI); // [0, 2pi)
        if w > PI {
            w -= 2.0 * PI;
        }
        // rem_euclid can return exactly 2*PI after rounding; fold again.
        if w > PI {
            w -= 2.0 * PI;
        }
        if w <= -PI {
            w += 2.0 * PI;
        }
        w
    } else {
        p
    }
}

/// A nonzero complex number stored as exp(log_mag) * exp(i*phase),
/// or exact zero (log_mag = -inf, phase = 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledComplex {
    pub log_mag: f64,
    pub phase: f64,
}

impl ScaledComplex {
    pub const ZERO: ScaledComplex = ScaledComplex {
        log_mag: f64::NEG_INFINITY,
        phase: 0.0,
    };
    pub const ONE: ScaledComplex = ScaledComplex {
        log_mag: 0.0,
        phase: 0.0,
    };

    pub fn new(log_mag: f64, phase: f64) -> Self {
        if log_mag == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        ScaledComplex {
            log_mag,
            phase: wrap_phase(phase),
        }
    }

    pub fn from_complex(v: Complex64) -> Self {
        if v.re == 0.0 && v.im == 0.0 {
            return Self::ZERO;
        }
        ScaledComplex {
            log_mag: v.norm().ln(),
            phase: v.arg(),
        }
    }

    pub fn from_real(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else if x > 0.0 {
            ScaledComplex {
                log_mag: x.ln(),
                phase: 0.0,
            }
        } else {
            ScaledComplex {
                log_mag: (-x).ln(),
                phase: PI,
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_mag == f64::NEG_INFINITY
    }

    /// Convert back to a plain complex number. Overflows to +-inf components
    /// when log_mag > ~709; underflows to zero below ~-745.
    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        let m = self.log_mag.exp();
        Complex64::new(m * self.phase.cos(), m * self.phase.sin())
    }

    pub fn conj(&self) -> Self {
        Self::new(self.log_mag, -self.phase)
    }

    pub fn recip(&self) -> Self {
        Self::new(-self.log_mag, -self.phase)
    }

    pub fn powi(&self, k: i32) -> Self {
        if self.is_zero() {
            return if k == 0 { Self::ONE } else { Self::ZERO };
        }
        Self::new(self.log_mag * f64::from(k), self.phase * f64::from(k))
    }

    /// Principal square root: half the log-magnitude, half the phase.
    pub fn sqrt(&self) -> Self {
        if self.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.log_mag * 0.5, self.phase * 0.5)
    }

    pub fn abs(&self) -> Self {
        Self::new(self.log_mag, 0.0)
    }
}

impl std::ops::Mul for ScaledComplex {
    type Output = ScaledComplex;
    fn mul(self, rhs: ScaledComplex) -> ScaledComplex {
        if self.is_zero() || rhs.is_zero() {
            return ScaledComplex::ZERO;
        }
        ScaledComplex::new(self.log_mag + rhs.log_mag, self.phase + rhs.phase)
    }
}

impl std::ops::Div for ScaledComplex {
    type Output = ScaledComplex;
    fn div(self, rhs: ScaledComplex) -> ScaledComplex {
        if self.is_zero() {
            return ScaledComplex::ZERO;
        }
        ScaledComplex::new(self.log_mag - rhs.log_mag, self.phase - rhs.phase)
    }
}

impl std::ops::Neg for ScaledComplex {
    type Output = ScaledComplex;
    fn neg(self) -> ScaledComplex {
        if self.is_zero() {
            return self;
        }
        ScaledComplex::new(self.log_mag, self.phase + PI)
    }
}

impl std::ops::Mul<Complex64> for ScaledComplex {
    type Output = ScaledComplex;
    fn mul(self, rhs: Complex64) -> ScaledComplex {
        self * ScaledComplex::from_complex(rhs)
    }
}

/// Streaming sum of ScaledComplex terms using a running max-log anchor:
/// the partial sum is kept as acc * exp(anchor), so terms of wildly different
/// magnitude cancel without overflow.
#[derive(Debug, Clone)]
pub struct ScaledAccumulator {
    anchor: f64,
    acc: Complex64,
}

impl ScaledAccumulator {
    pub fn new() -> Self {
        ScaledAccumulator {
            anchor: f64::NEG_INFINITY,
            acc: Complex64::new(0.0, 0.0),
        }
    }

    pub fn add(&mut self, t: ScaledComplex) {
        if t.is_zero() {
            return;
        }
        if self.anchor == f64::NEG_INFINITY {
            self.anchor = t.log_mag;
            self.acc = Complex64::from_polar(1.0, t.phase);
            return;
        }
        if t.log_mag > self.anchor {
            let shrink = (self.anchor - t.log_mag).exp();
            self.acc *= shrink;
            self.anchor = t.log_mag;
            self.acc += Complex64::from_polar(1.0, t.phase);
        } else {
            self.acc += Complex64::from_polar((t.log_mag - self.anchor).exp(), t.phase);
        }
    }

    /// Fold another accumulator in (for deterministic tree reductions the
    /// caller fixes the merge order).
    pub fn merge(&mut self, other: &ScaledAccumulator) {
        if other.anchor == f64::NEG_INFINITY || other.acc == Complex64::new(0.0, 0.0) {
            return;
        }
        let t = other.total();
        if t.is_zero() {
            return;
        }
        if self.anchor == f64::NEG_INFINITY {
            *self = other.clone();
            return;
        }
        if other.anchor > self.anchor {
            let shrink = (self.anchor - other.anchor).exp();
            self.acc = self.acc * shrink + other.acc;
            self.anchor = other.anchor;
        } else {
            self.acc += other.acc * (other.anchor - self.anchor).exp();
        }
    }

    pub fn total(&self) -> ScaledComplex {
        if self.anchor == f64::NEG_INFINITY || (self.acc.re == 0.0 && self.acc.im == 0.0) {
            return ScaledComplex::ZERO;
        }
        ScaledComplex::new(self.anchor + self.acc.norm().ln(), self.acc.arg())
    }
}

impl Default for ScaledAccumulator {
    fn default() -> Self {
        Self::new()
    }
}
