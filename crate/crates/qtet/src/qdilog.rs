//! Quantum dilogarithm via contour integration, its meromorphic extension,
//! the classical dilogarithm, and the Lobachevsky function.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::qkernel::QContext;

/// Contour discretization parameters for the quantum dilogarithm integral.
#[derive(Debug, Clone)]
pub struct ContourSpec {
    /// Radius of the semicircle around the origin, in (0, 1).
    pub epsilon: f64,
    /// Ray cutoff. `None` picks the smallest cutoff whose tail bound falls
    /// below `abs_tol / 10` for the requested argument.
    pub truncation: Option<f64>,
    /// Absolute error target for the returned value.
    pub abs_tol: f64,
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec {
            epsilon: 0.5,
            truncation: None,
            abs_tol: 1e-10,
        }
    }
}

// 15-point Gauss-Kronrod abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let fsum = f(c - dx) + f(c + dx);
        resk += fsum * WGK[i];
        if i % 2 == 1 {
            resg += fsum * WG[i / 2];
        }
    }
    (resk * h, ((resk - resg) * h).norm())
}

/// Adaptive bisection over [a, b] with a length-proportional error budget.
fn integrate_adaptive<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Result<Complex64> {
    let total_len = b - a;
    if total_len <= 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut stack = vec![(a, b)];
    let mut total = Complex64::new(0.0, 0.0);
    let mut pops = 0usize;
    while let Some((lo, hi)) = stack.pop() {
        pops += 1;
        if pops > 200_000 {
            return Err(Error::NonConvergence(format!(
                "quadrature failed to reach tolerance {abs_tol:.3e} on [{a:.3}, {b:.3}]"
            )));
        }
        let (val, err) = gk15(f, lo, hi);
        let mid = 0.5 * (lo + hi);
        if err <= abs_tol * (hi - lo) / total_len || mid <= lo || mid >= hi {
            total += val;
        } else {
            stack.push((lo, mid));
            stack.push((mid, hi));
        }
    }
    Ok(total)
}

/// The quantum dilogarithm
///
/// phi_r(z) = (4*pi*i/r) * Int_Omega e^{(2z-pi)x} / (4x sinh(pi x) sinh(2 pi x / r)) dx
///
/// on the strip -pi/r < Re z < pi + pi/r. Omega is the real line with a small
/// upper semicircle dodging the pole at 0. Accuracy: `spec.abs_tol` absolute.
pub fn phi_r(z: Complex64, ctx: &QContext, spec: &ContourSpec) -> Result<Complex64> {
    let rf = f64::from(ctx.r);
    if !(z.re > -PI / rf && z.re < PI + PI / rf) {
        return Err(Error::StripViolation { z });
    }
    if !(spec.epsilon > 0.0 && spec.epsilon < 1.0) {
        return Err(Error::InvalidInput(format!(
            "contour radius must lie in (0, 1), got {}",
            spec.epsilon
        )));
    }
    if !(spec.abs_tol > 0.0) {
        return Err(Error::InvalidInput("abs_tol must be positive".into()));
    }
    let eps = spec.epsilon;
    // exponential decay rates of the integrand along the two rays
    let lam_plus = 2.0 * PI + 2.0 * PI / rf - 2.0 * z.re;
    let lam_minus = 2.0 * z.re + 2.0 * PI / rf;
    let lam = lam_plus.min(lam_minus);
    let tail = |t: f64| (rf / (2.5 * PI)) * (-lam * t).exp() * (1.0 / t).min(1.0 / (lam * t * t));
    let budget = spec.abs_tol / 10.0;
    let trunc = match spec.truncation {
        Some(t) => {
            if !(t > eps) {
                return Err(Error::InvalidInput(format!(
                    "ray cutoff {t} must exceed the semicircle radius {eps}"
                )));
            }
            let bound = tail(t);
            if bound > budget {
                return Err(Error::NonConvergence(format!(
                    "ray cutoff {t:.3e} leaves estimated tail {bound:.3e} above budget {budget:.3e}"
                )));
            }
            t
        }
        None => {
            let mut t = 25.0;
            while tail(t) > budget {
                t *= 2.0;
                if t > 1e8 {
                    return Err(Error::NonConvergence(
                        "no ray cutoff below 1e8 meets the tail budget; \
                         argument too close to the strip boundary"
                            .into(),
                    ));
                }
            }
            t
        }
    };
    // the 4*pi/r prefactor scales the quadrature budget; three pieces plus tail
    let piece_tol = spec.abs_tol * rf / (4.0 * PI) / 4.0;
    let two_z_minus_pi = 2.0 * z - Complex64::new(PI, 0.0);
    let right = |x: f64| -> Complex64 {
        if x <= 20.0 {
            (two_z_minus_pi * x).exp()
                / (4.0 * x * (PI * x).sinh() * ((2.0 * PI / rf) * x).sinh())
        } else {
            // sinh factored into leading exponentials to dodge overflow
            ((two_z_minus_pi - Complex64::new(PI + 2.0 * PI / rf, 0.0)) * x).exp()
                / (x * (1.0 - (-2.0 * PI * x).exp()) * (1.0 - (-4.0 * PI * x / rf).exp()))
        }
    };
    let left = |t: f64| -> Complex64 {
        // integrand evaluated at x = -t; orientation already folded in
        if t <= 20.0 {
            -(two_z_minus_pi * (-t)).exp()
                / (4.0 * t * (PI * t).sinh() * ((2.0 * PI / rf) * t).sinh())
        } else {
            -((2.0 * z + Complex64::new(2.0 * PI / rf, 0.0)) * (-t)).exp()
                / (t * (1.0 - (-2.0 * PI * t).exp()) * (1.0 - (-4.0 * PI * t / rf).exp()))
        }
    };
    let semi = |phi: f64| -> Complex64 {
        let x = Complex64::from_polar(eps, phi);
        let f = (two_z_minus_pi * x).exp()
            / (4.0 * x * (PI * x).sinh() * ((2.0 * PI / rf) * x).sinh());
        // dx = i x dphi, and the arc runs from phi = pi down to 0
        -f * Complex64::new(0.0, 1.0) * x
    };
    let i_left = integrate_adaptive(&left, eps, trunc, piece_tol)?;
    let i_semi = integrate_adaptive(&semi, 0.0, PI, piece_tol)?;
    let i_right = integrate_adaptive(&right, eps, trunc, piece_tol)?;
    Ok(Complex64::new(0.0, 4.0 * PI / rf) * (i_left + i_semi + i_right))
}

fn check_pole(w: Complex64, z: Complex64) -> Result<()> {
    // the shifted factor 1 - e^{2iw} vanishes exactly at w in pi*Z
    let nearest = PI * (w.re / PI).round();
    if Complex64::new(w.re - nearest, w.im).norm() < 1e-8 {
        return Err(Error::PoleProximity { z });
    }
    Ok(())
}

/// Meromorphic extension of [`phi_r`] beyond the base strip, via the shift
/// relation
///
/// phi_r(z) = phi_r(z - 2n*pi/r) - (4*pi*i/r) * Sum_{k=1..n} Log(1 - e^{2i(z-(2k-1)pi/r)})
///
/// (and its mirror for Re z below the strip). The shift count recenters the
/// reduced argument near pi/2. Arguments within 1e-8 of a pole are rejected.
pub fn phi_r_extended(z: Complex64, ctx: &QContext, spec: &ContourSpec) -> Result<Complex64> {
    let rf = f64::from(ctx.r);
    if z.re > -PI / rf && z.re < PI + PI / rf {
        return phi_r(z, ctx, spec);
    }
    let step = 2.0 * PI / rf;
    let pref = Complex64::new(0.0, 4.0 * PI / rf);
    if z.re >= PI + PI / rf {
        let n = ((z.re - PI / 2.0) / step).round() as i64;
        let mut s = Complex64::new(0.0, 0.0);
        for k in 1..=n {
            let w = z - Complex64::new((2 * k - 1) as f64 * PI / rf, 0.0);
            check_pole(w, z)?;
            s += (Complex64::new(1.0, 0.0) - (Complex64::new(0.0, 2.0) * w).exp()).ln();
        }
        let base = phi_r(z - Complex64::new(step * n as f64, 0.0), ctx, spec)?;
        Ok(base - pref * s)
    } else {
        let m = ((PI / 2.0 - z.re) / step).round() as i64;
        let mut s = Complex64::new(0.0, 0.0);
        for k in 1..=m {
            let w = z + Complex64::new((2 * k - 1) as f64 * PI / rf, 0.0);
            check_pole(w, z)?;
            s += (Complex64::new(1.0, 0.0) - (Complex64::new(0.0, 2.0) * w).exp()).ln();
        }
        let base = phi_r(z + Complex64::new(step * m as f64, 0.0), ctx, spec)?;
        Ok(base + pref * s)
    }
}

/// First derivative of the extended quantum dilogarithm, by central
/// differences with step 1e-5. Accurate to roughly 1e-10, which is all the
/// O(1/r^2) convergence checks need.
pub fn phi_r_deriv(z: Complex64, ctx: &QContext, spec: &ContourSpec) -> Result<Complex64> {
    let h = 1e-5;
    let p = phi_r_extended(z + Complex64::new(h, 0.0), ctx, spec)?;
    let m = phi_r_extended(z - Complex64::new(h, 0.0), ctx, spec)?;
    Ok((p - m) / (2.0 * h))
}

// Bernoulli numbers B_2, B_4, ..., B_30.
const B2K: [f64; 15] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
];

/// Principal-branch dilogarithm, cut along [1, inf); on the cut the value is
/// the limit from below, so e^{2i theta} arguments vary continuously through 1.
pub fn li2(z: Complex64) -> Complex64 {
    if z.re == 0.0 && z.im == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if z.re == 1.0 && z.im == 0.0 {
        return Complex64::new(PI * PI / 6.0, 0.0);
    }
    if z.norm_sqr() > 1.0 {
        // Li2(z) = -Li2(1/z) - pi^2/6 - Log^2(-z)/2
        let mut mz = -z;
        if mz.im == 0.0 {
            // force arg(-z) = +pi on the cut: limit from below
            mz = Complex64::new(mz.re, 0.0);
        }
        let l = mz.ln();
        return -li2(z.inv()) - Complex64::new(PI * PI / 6.0, 0.0) - 0.5 * l * l;
    }
    if z.re > 0.5 {
        // Li2(z) + Li2(1-z) = pi^2/6 - Log(z) Log(1-z); 1-z stays in the disk
        let w = Complex64::new(1.0, 0.0) - z;
        return Complex64::new(PI * PI / 6.0, 0.0) - z.ln() * w.ln() - li2(w);
    }
    if z.norm_sqr() <= 0.0625 {
        // direct series
        let mut sum = Complex64::new(0.0, 0.0);
        let mut zp = z;
        for n in 1..=80u32 {
            let term = zp / f64::from(n * n);
            sum += term;
            if term.norm() < 1e-18 * (1.0 + sum.norm()) {
                break;
            }
            zp *= z;
        }
        return sum;
    }
    // Bernoulli series in u = -Log(1-z); |u| stays below 1.3 on this region
    let u = -(Complex64::new(1.0, 0.0) - z).ln();
    let u2 = u * u;
    let mut sum = u - u2 * 0.25;
    let mut upow = u;
    let mut fact = 1.0f64;
    for (k, &b) in B2K.iter().enumerate() {
        let two_k = 2.0 * (k + 1) as f64;
        upow *= u2;
        fact *= two_k * (two_k + 1.0);
        let term = upow * (b / fact);
        sum += term;
        if term.norm() < 1e-18 * (1.0 + sum.norm()) {
            break;
        }
    }
    sum
}

fn ln_sinc(s: f64) -> f64 {
    if s < 0.01 {
        let s2 = s * s;
        -s2 / 6.0 - s2 * s2 / 180.0 - s2 * s2 * s2 / 2835.0
    } else {
        (s.sin() / s).ln()
    }
}

/// Lobachevsky function Lambda(theta) = -Int_0^theta log|2 sin t| dt,
/// reduced by pi-periodicity and oddness, then integrated adaptively with the
/// log singularity split off in closed form.
pub fn lobachevsky(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(PI);
    let mut sign = 1.0;
    if t > PI / 2.0 {
        t = PI - t;
        sign = -1.0;
    }
    if t < 1e-300 {
        return 0.0;
    }
    let smooth = integrate_adaptive(&|s: f64| Complex64::new(ln_sinc(s), 0.0), 0.0, t, 1e-13)
        .expect("smooth bounded integrand")
        .re;
    sign * (-t * ((2.0 * t).ln() - 1.0) - smooth)
}
