//! Tracking colorings for target dihedral angles, the closed-form
//! large-order prediction for transformed 6j sums, stationary-phase
//! consistency checks, and an order sweep with convergence diagnostics.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dft::{n_parity, yhat_with_budget, ColoringSpec, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::geometry::{
    kappa_func, log1m_e2i, solve_geometry, u_dxi2, u_func, xi_of_alpha, AngleTuple, Partition,
    TetGeometry,
};
use crate::qkernel::QContext;
use crate::scaled::ScaledComplex;

fn check_targets(theta6: &[f64; 6], mu: &[i8; 6], r: u32) -> Result<()> {
    if r < 3 || r % 2 == 0 {
        return Err(Error::InvalidOrder { r: i64::from(r) });
    }
    for k in 0..6 {
        if !(theta6[k] > 0.0 && theta6[k] < PI) {
            return Err(Error::InvalidInput(format!(
                "target angle theta[{k}] = {} outside (0, pi)",
                theta6[k]
            )));
        }
        if mu[k] != 1 && mu[k] != -1 {
            return Err(Error::InvalidInput(format!(
                "mu[{k}] = {} is not a sign",
                mu[k]
            )));
        }
    }
    Ok(())
}

/// Parities (0 or 1) the unconstrained rounding would give the J-slot colors
/// at order r. Feeding these into [`coloring_for_angles`] leaves the rounding
/// effectively unconstrained at this order while pinning it at every other.
pub fn natural_parities(
    theta6: &[f64; 6],
    mu: &[i8; 6],
    partition: &Partition,
    r: u32,
) -> Result<Vec<i64>> {
    check_targets(theta6, mu, r)?;
    let rf = f64::from(r);
    Ok(partition
        .j_indices()
        .iter()
        .map(|&k| {
            let x = rf * (PI + f64::from(mu[k]) * theta6[k]) / (2.0 * PI);
            (x.round() as i64).rem_euclid(2)
        })
        .collect())
}

/// Integer colors at order r tracking the target angles: on I-edges the color
/// nearest to r(pi + mu theta)/(2 pi), on J-edges the nearest color of the
/// prescribed parity on the mu-side of r/2. For odd r the plain rounding on
/// I-edges lands on the mu-side automatically; realized angles stay within
/// 2 pi / r of the target there and within 4 pi / r on parity-constrained
/// J-edges (away from the r/2 wall).
pub fn coloring_for_angles(
    theta6: &[f64; 6],
    mu: &[i8; 6],
    partition: &Partition,
    ctx: &QContext,
    parity_j: &[i64],
) -> Result<ColoringSpec> {
    let r = ctx.r;
    check_targets(theta6, mu, r)?;
    let idx_j = partition.j_indices();
    if parity_j.len() != idx_j.len() {
        return Err(Error::InvalidInput(format!(
            "expected {} parities, got {}",
            idx_j.len(),
            parity_j.len()
        )));
    }
    for &p in parity_j {
        if p != 0 && p != 1 {
            return Err(Error::InvalidInput(format!("parity {p} is not 0 or 1")));
        }
    }
    let rf = f64::from(r);
    let ri = i64::from(r);
    let in_range = |c: i64| -> Result<i64> {
        if c < 0 || c > ri - 2 {
            Err(Error::ColorOutOfRange {
                value: c,
                max: ri - 2,
                r: ri,
            })
        } else {
            Ok(c)
        }
    };
    let side_of = |c: i64| -> i64 {
        if 2 * c > ri {
            1
        } else {
            -1
        }
    };
    let mut b_i = Vec::with_capacity(partition.size_i());
    for &k in &partition.i_indices() {
        let x = rf * (PI + f64::from(mu[k]) * theta6[k]) / (2.0 * PI);
        let b = in_range(x.round() as i64)?;
        debug_assert_eq!(side_of(b), i64::from(mu[k]));
        b_i.push(b);
    }
    let mut a_j = Vec::with_capacity(idx_j.len());
    for (slot, &k) in idx_j.iter().enumerate() {
        let x = rf * (PI + f64::from(mu[k]) * theta6[k]) / (2.0 * PI);
        let center = x.round() as i64;
        let side = i64::from(mu[k]);
        let mut best: Option<i64> = None;
        for c in (center - 3)..=(center + 3) {
            if c.rem_euclid(2) != parity_j[slot] || side_of(c) != side {
                continue;
            }
            let better = match best {
                None => true,
                Some(b0) => {
                    let (d0, dc) = ((b0 as f64 - x).abs(), (c as f64 - x).abs());
                    dc < d0 - 1e-12 || ((dc - d0).abs() <= 1e-12 && (c - b0) * side > 0)
                }
            };
            if better {
                best = Some(c);
            }
        }
        let c = best.ok_or_else(|| {
            Error::InvalidInput(format!(
                "no color of parity {} on the mu = {} side of {r}/2 near {x:.3}",
                parity_j[slot], mu[k]
            ))
        })?;
        a_j.push(in_range(c)?);
    }
    ColoringSpec::new(&b_i, &a_j, *mu, partition, ctx)
}

/// Splits a six-slot angle vector into the I-slot and J-slot value lists in
/// ascending edge order.
pub fn split_theta(th6: &[f64; 6], partition: &Partition) -> (Vec<f64>, Vec<f64>) {
    (
        partition.i_indices().iter().map(|&k| th6[k]).collect(),
        partition.j_indices().iter().map(|&k| th6[k]).collect(),
    )
}

/// Solves the tetrahedron at the angles the coloring realizes at this order
/// (never at the limiting targets; the metric must follow the integers).
pub fn solve_at_realized(
    spec: &ColoringSpec,
    partition: &Partition,
    ctx: &QContext,
    tol: f64,
) -> Result<TetGeometry> {
    let th6 = spec.theta(partition, ctx);
    let (ti, tj) = split_theta(&th6, partition);
    solve_geometry(&ti, &tj, partition, tol)
}

fn check_eps(eps: &[i8], ni: usize) -> Result<()> {
    if eps.len() != ni {
        return Err(Error::InvalidInput(format!(
            "expected {ni} branch signs, got {}",
            eps.len()
        )));
    }
    for &e in eps {
        if e != 1 && e != -1 {
            return Err(Error::InvalidInput(format!("branch sign {e} is not +-1")));
        }
    }
    Ok(())
}

/// Stationary angle tuple of the pair potential: alpha_i = pi + eps mu i l_i
/// on I-edges, the color angle 2 pi a_j / r on J-edges, and its critical xi.
fn critical_point(
    spec: &ColoringSpec,
    partition: &Partition,
    geom: &TetGeometry,
    ctx: &QContext,
    eps: &[i8],
) -> Result<(AngleTuple, Complex64)> {
    let rf = f64::from(ctx.r);
    let mut alpha = [Complex64::new(0.0, 0.0); 6];
    for (slot, &k) in partition.i_indices().iter().enumerate() {
        let s = f64::from(eps[slot]) * f64::from(spec.mu[k]);
        alpha[k] = Complex64::new(PI, s * geom.l[k]);
    }
    for (slot, &k) in partition.j_indices().iter().enumerate() {
        alpha[k] = Complex64::new(2.0 * PI * spec.a_j[slot] as f64 / rf, 0.0);
    }
    let tuple = AngleTuple::new(alpha);
    let xi = xi_of_alpha(&tuple)?;
    Ok((tuple, xi))
}

fn beta_values(spec: &ColoringSpec, ctx: &QContext) -> Vec<f64> {
    let rf = f64::from(ctx.r);
    spec.b_i
        .iter()
        .map(|&b| 2.0 * PI * b as f64 / rf)
        .collect()
}

/// The pair potential: a linear coupling of each deep-edge angle to its
/// conjugate angle beta, plus one copy of the xi-potential per summation
/// variable.
fn w_pair(
    alpha: &AngleTuple,
    xi1: Complex64,
    xi2: Complex64,
    idx_i: &[usize],
    beta_i: &[f64],
    eps: &[i8],
) -> Result<Complex64> {
    let mut w = u_func(alpha, xi1)? + u_func(alpha, xi2)?;
    for (slot, &k) in idx_i.iter().enumerate() {
        w -= 2.0 * f64::from(eps[slot]) * (alpha.alpha[k] - PI) * (beta_i[slot] - PI);
    }
    Ok(w)
}

/// Richardson-extrapolated finite-difference Hessian along real displacement
/// directions. The integrand is holomorphic near the base point, so real
/// steps determine the full complex second derivatives.
fn fd_hessian(
    f: &dyn Fn(&[f64]) -> Result<Complex64>,
    n: usize,
    h: f64,
) -> Result<DMatrix<Complex64>> {
    let mut hess = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    let f0 = f(&vec![0.0; n])?;
    let eval = |pairs: &[(usize, f64)]| -> Result<Complex64> {
        let mut v = vec![0.0; n];
        for &(i, x) in pairs {
            v[i] += x;
        }
        f(&v)
    };
    for i in 0..n {
        let second = |hh: f64| -> Result<Complex64> {
            Ok((eval(&[(i, hh)])? - 2.0 * f0 + eval(&[(i, -hh)])?) / (hh * hh))
        };
        let d1 = second(h)?;
        let d2 = second(0.5 * h)?;
        hess[(i, i)] = (4.0 * d2 - d1) / 3.0;
        for j in (i + 1)..n {
            let cross = |hh: f64| -> Result<Complex64> {
                Ok((eval(&[(i, hh), (j, hh)])? - eval(&[(i, hh), (j, -hh)])?
                    - eval(&[(i, -hh), (j, hh)])?
                    + eval(&[(i, -hh), (j, -hh)])?)
                    / (4.0 * hh * hh))
            };
            let c1 = cross(h)?;
            let c2 = cross(0.5 * h)?;
            let v = (4.0 * c2 - c1) / 3.0;
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}

/// Determinant of the pair-potential Hessian in factored form:
/// (-1)^{3|I|/2} det(2 dtheta/dl) (d2U/dxi^2)^2 with (-1)^x = e^{i pi x}.
/// The angle-length Jacobian doubles because the potential carries two
/// copies of the xi-potential; the geometry solver reports the single-copy
/// Jacobian.
fn factored_hessian_det(
    geom: &TetGeometry,
    base: &AngleTuple,
    xi_star: Complex64,
    ni: usize,
) -> Result<Complex64> {
    let uxx = u_dxi2(base, xi_star)?;
    let jac_det = if ni == 0 { 1.0 } else { geom.jac.determinant() };
    let phase = Complex64::new(0.0, -1.0).powi(ni as i32);
    Ok(phase * 2f64.powi(ni as i32) * jac_det * uxx * uxx)
}

/// Relative gap between the finite-difference Hessian determinant of the
/// pair potential at its stationary point and the factored form, for the
/// given branch signs eps (one per I-edge).
pub fn hess_check_with_eps(
    spec: &ColoringSpec,
    partition: &Partition,
    geom: &TetGeometry,
    ctx: &QContext,
    eps: &[i8],
) -> Result<f64> {
    let ni = partition.size_i();
    check_eps(eps, ni)?;
    let idx_i = partition.i_indices();
    let (base, xi_star) = critical_point(spec, partition, geom, ctx, eps)?;
    let beta_i = beta_values(spec, ctx);
    let f = |v: &[f64]| -> Result<Complex64> {
        let mut a = base.alpha;
        for (slot, &k) in idx_i.iter().enumerate() {
            a[k] += v[slot];
        }
        let tuple = AngleTuple::new(a);
        w_pair(
            &tuple,
            xi_star + v[ni],
            xi_star + v[ni + 1],
            &idx_i,
            &beta_i,
            eps,
        )
    };
    let hess = fd_hessian(&f, ni + 2, 1e-2)?;
    let fd_det = hess.determinant();
    let factored = factored_hessian_det(geom, &base, xi_star, ni)?;
    if factored.norm() < 1e-12 {
        return Err(Error::DegenerateGeometry(
            "vanishing factored Hessian determinant".into(),
        ));
    }
    Ok((fd_det - factored).norm() / factored.norm())
}

/// [`hess_check_with_eps`] at the all-plus branch.
pub fn hess_check(
    spec: &ColoringSpec,
    partition: &Partition,
    geom: &TetGeometry,
    ctx: &QContext,
) -> Result<f64> {
    hess_check_with_eps(spec, partition, geom, ctx, &vec![1; partition.size_i()])
}

/// Gap between the kappa prefactor evaluated directly at the stationary
/// point and its length/angle form
///   -(i/2) sum_I eps mu theta - (1/2) sum_J mu l
///   - (i/2) sum_k alpha_k + 2 i xi - (1/2) sum_t log(1 - e^{2i(xi - tau_t)}),
/// compared modulo i pi: shifts by i pi cancel in e^{2 kappa}, the only form
/// in which kappa is consumed.
pub fn kappa_bridge_residual(
    spec: &ColoringSpec,
    partition: &Partition,
    geom: &TetGeometry,
    ctx: &QContext,
    eps: &[i8],
) -> Result<f64> {
    let ni = partition.size_i();
    check_eps(eps, ni)?;
    let (base, xi_star) = critical_point(spec, partition, geom, ctx, eps)?;
    let direct = kappa_func(&base, xi_star)?;
    let i_c = Complex64::i();
    let mut formula = 2.0 * i_c * xi_star;
    for (slot, &k) in partition.i_indices().iter().enumerate() {
        let s = f64::from(eps[slot]) * f64::from(spec.mu[k]);
        formula -= 0.5 * i_c * s * geom.theta[k];
        formula -= 0.5 * i_c * base.alpha[k];
    }
    for &k in &partition.j_indices() {
        formula -= 0.5 * f64::from(spec.mu[k]) * geom.l[k];
        formula -= 0.5 * i_c * base.alpha[k];
    }
    for &t in &base.tau() {
        formula -= 0.5 * log1m_e2i(xi_star - t)?;
    }
    let diff = direct - formula;
    let im = diff.im - PI * (diff.im / PI).round();
    Ok(Complex64::new(diff.re, im).norm())
}

/// Closed-form prediction for the transformed sum at order r:
///   C e^{-sum_k mu_k l_k} / sqrt(-det(2 dtheta/dl) det G) r^{(3|I|-6)/2}
///   e^{(r/pi) Vol},
/// with the constant C = (-1)^{3/2 + (r/2)(|I|-2)} n(a_J)
/// / (2^{3|I|/2 - 1} pi^{|I|-2}) and (-1)^x = e^{i pi x}. The angle-length
/// Jacobian is doubled relative to the geometry solver's because the
/// stationary phase runs over two summation variables, each carrying a copy
/// of the xi-potential. Returns zero when the parity count n(a_J) vanishes.
pub fn cdft_rhs(
    spec: &ColoringSpec,
    partition: &Partition,
    geom: &TetGeometry,
    ctx: &QContext,
) -> Result<ScaledComplex> {
    let ni = partition.size_i();
    let n = n_parity(&spec.a_j, partition)?;
    if n == 0 {
        return Ok(ScaledComplex::ZERO);
    }
    let jac_det = if ni == 0 { 1.0 } else { geom.jac.determinant() };
    let radicand = -(2f64.powi(ni as i32) * jac_det) * geom.gram_det;
    if radicand <= 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "nonpositive radicand {radicand} under the prefactor square root"
        )));
    }
    let mut sum_mu_l = 0.0;
    for k in 0..6 {
        sum_mu_l += f64::from(spec.mu[k]) * geom.l[k];
    }
    let nif = ni as f64;
    let rf = f64::from(ctx.r);
    let log_mag = f64::from(n).ln() - (1.5 * nif - 1.0) * std::f64::consts::LN_2
        - (nif - 2.0) * PI.ln()
        - sum_mu_l
        - 0.5 * radicand.ln()
        + 0.5 * (3.0 * nif - 6.0) * rf.ln()
        + rf / PI * geom.vol;
    // phase pi (3/2 + (r/2)(|I|-2)) reduced exactly via r (|I|-2) mod 4
    let k2 = i64::from(ctx.r) * (ni as i64 - 2);
    let phase = 1.5 * PI + 0.5 * PI * (k2.rem_euclid(4) as f64);
    Ok(ScaledComplex::new(log_mag, phase))
}

/// The per-branch stationary-phase terms C^eps / sqrt(-det Hess(W / 4 pi i))
/// with the Hessians taken by finite differences, in branch-mask order
/// (bit s of the mask flips the sign of I-slot s). Their sum approximates
/// [`cdft_rhs`] / e^{(r/pi) Vol} up to the O(1/r^2) discretization of the
/// first quantum integer.
pub fn prefactor_branch_terms(
    spec: &ColoringSpec,
    partition: &Partition,
    geom: &TetGeometry,
    ctx: &QContext,
) -> Result<Vec<Complex64>> {
    let ni = partition.size_i();
    let idx_i = partition.i_indices();
    let nq = n_parity(&spec.a_j, partition)?;
    let rf = f64::from(ctx.r);
    let nif = ni as f64;
    let w1 = ctx.q - ctx.q.inv();
    let beta_i = beta_values(spec, ctx);
    // |C| without the exponential: n r^{(|I|-2)/2} / (2^{(3|I|+2)/2} pi^{(|I|+2)/2})
    let amp = f64::from(nq) * rf.powf(0.5 * (nif - 2.0))
        / (2f64.powf(0.5 * (3.0 * nif + 2.0)) * PI.powf(0.5 * (nif + 2.0)));
    // phase of (-1)^{|I| + (r/2)(|I|-2)} via the exact integer 2|I| + r(|I|-2)
    let k2 = 2 * ni as i64 + i64::from(ctx.r) * (ni as i64 - 2);
    let phase = Complex64::from_polar(1.0, 0.5 * PI * (k2.rem_euclid(4) as f64));
    let scale = phase * amp / w1.powi(ni as i32 - 2);
    let mut terms = Vec::with_capacity(1 << ni);
    for bits in 0..(1u32 << ni) {
        let eps: Vec<i8> = (0..ni)
            .map(|s| if bits >> s & 1 == 0 { 1 } else { -1 })
            .collect();
        let (base, xi_star) = critical_point(spec, partition, geom, ctx, &eps)?;
        let mut expo = 2.0 * kappa_func(&base, xi_star)?;
        for (slot, &k) in idx_i.iter().enumerate() {
            expo += f64::from(eps[slot]) * Complex64::i() * (base.alpha[k] + beta_i[slot]);
        }
        let c_eps = scale * expo.exp();
        let f = |v: &[f64]| -> Result<Complex64> {
            let mut a = base.alpha;
            for (slot, &k) in idx_i.iter().enumerate() {
                a[k] += v[slot];
            }
            let tuple = AngleTuple::new(a);
            w_pair(
                &tuple,
                xi_star + v[ni],
                xi_star + v[ni + 1],
                &idx_i,
                &beta_i,
                &eps,
            )
        };
        let hess = fd_hessian(&f, ni + 2, 1e-2)?;
        let det_scaled =
            hess.determinant() * Complex64::new(0.0, 4.0 * PI).powi(-(ni as i32 + 2));
        let denom = (-det_scaled).sqrt();
        if denom.norm() < 1e-300 {
            return Err(Error::DegenerateGeometry(
                "vanishing Hessian determinant in the prefactor".into(),
            ));
        }
        terms.push(c_eps / denom);
    }
    Ok(terms)
}

/// Sum of [`prefactor_branch_terms`].
pub fn prefactor_hessian_sum(
    spec: &ColoringSpec,
    partition: &Partition,
    geom: &TetGeometry,
    ctx: &QContext,
) -> Result<Complex64> {
    Ok(prefactor_branch_terms(spec, partition, geom, ctx)?
        .into_iter()
        .sum())
}

/// Sweep controls. `max_angle` guards the small-angle regime of the
/// prediction (override deliberately for exploration), `budget` caps the
/// enumeration per order, `tol` is the geometry solver tolerance, and
/// `parity_j` freezes the J-color parities across the sweep; `None` freezes
/// whatever the first order rounds to naturally.
#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub max_angle: f64,
    pub budget: u64,
    pub tol: f64,
    pub parity_j: Option<Vec<i64>>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            max_angle: 0.5,
            budget: DEFAULT_BUDGET,
            tol: 1e-10,
            parity_j: None,
        }
    }
}

/// One order of the sweep: the transform, its prediction, their ratio, and
/// the growth error |(pi/r) log|Yhat| - Vol| at the realized metric.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub r: u32,
    pub yhat: ScaledComplex,
    pub rhs: ScaledComplex,
    pub ratio: Complex64,
    pub abs_ratio: f64,
    pub arg_ratio: f64,
    pub growth_err: f64,
}

/// Least-squares summary of |ratio| - 1 = c1/r + c2/r^2 over the sweep.
#[derive(Debug, Clone, Copy)]
pub struct FitSummary {
    pub c1: f64,
    pub c2: f64,
    pub r2: f64,
}

/// Full sweep outcome: parameters, per-order rows sorted by r, skipped
/// orders with reasons, and the convergence fit (absent below two rows).
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub theta: [f64; 6],
    pub mu: [i8; 6],
    pub partition: Partition,
    pub r_list: Vec<u32>,
    pub parity_j: Vec<i64>,
    pub options: SweepOptions,
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<(u32, String)>,
    pub fit: Option<FitSummary>,
}

fn sweep_one(
    theta6: &[f64; 6],
    mu: &[i8; 6],
    partition: &Partition,
    r: u32,
    parity_j: &[i64],
    opts: &SweepOptions,
) -> Result<SweepRow> {
    let ctx = QContext::new(i64::from(r))?;
    let spec = coloring_for_angles(theta6, mu, partition, &ctx, parity_j)?;
    let geom = solve_at_realized(&spec, partition, &ctx, opts.tol)?;
    let yhat = yhat_with_budget(&spec, partition, &ctx, opts.budget)?;
    let rhs = cdft_rhs(&spec, partition, &geom, &ctx)?;
    if rhs.is_zero() {
        return Err(Error::InvalidInput(
            "parity pattern admits no extension; the prediction vanishes".into(),
        ));
    }
    if yhat.is_zero() {
        return Err(Error::DegenerateGeometry(
            "transform vanished identically".into(),
        ));
    }
    let ratio = (yhat / rhs).to_complex();
    let growth_err = (PI / f64::from(r) * yhat.log_mag - geom.vol).abs();
    Ok(SweepRow {
        r,
        yhat,
        rhs,
        ratio,
        abs_ratio: ratio.norm(),
        arg_ratio: ratio.arg(),
        growth_err,
    })
}

fn fit_ratio(rows: &[SweepRow]) -> Option<FitSummary> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|row| row.abs_ratio.is_finite())
        .map(|row| (1.0 / f64::from(row.r), row.abs_ratio - 1.0))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (mut s2, mut s3, mut s4, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y) in &pts {
        let x2 = x * x;
        s2 += x2;
        s3 += x2 * x;
        s4 += x2 * x2;
        b1 += x * y;
        b2 += x2 * y;
    }
    let det = s2 * s4 - s3 * s3;
    if det.abs() < 1e-300 {
        return None;
    }
    let c1 = (b1 * s4 - b2 * s3) / det;
    let c2 = (s2 * b2 - s3 * b1) / det;
    let mean = pts.iter().map(|&(_, y)| y).sum::<f64>() / pts.len() as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for &(x, y) in &pts {
        let d = y - (c1 * x + c2 * x * x);
        ss_res += d * d;
        let m = y - mean;
        ss_tot += m * m;
    }
    let r2 = if ss_tot > 1e-30 {
        1.0 - ss_res / ss_tot
    } else if ss_res < 1e-30 {
        1.0
    } else {
        0.0
    };
    Some(FitSummary { c1, c2, r2 })
}

/// Sweeps the orders in `r_list`: per order builds the tracking coloring
/// (J-parities frozen across the sweep so the parity count stays constant),
/// solves the geometry at the realized angles, evaluates the transform and
/// its prediction, and fits |ratio| - 1 against 1/r. Orders are evaluated in
/// parallel; one whose geometry or enumeration fails is recorded as skipped,
/// not fatal.
pub fn run_sweep(
    theta6: &[f64; 6],
    mu: &[i8; 6],
    partition: &Partition,
    r_list: &[u32],
    opts: &SweepOptions,
) -> Result<SweepReport> {
    if r_list.is_empty() {
        return Err(Error::InvalidInput("empty order list".into()));
    }
    for &r in r_list {
        if r < 3 || r % 2 == 0 {
            return Err(Error::InvalidOrder { r: i64::from(r) });
        }
    }
    for w in r_list.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidInput(format!(
                "order list must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    check_targets(theta6, mu, r_list[0])?;
    for (k, &t) in theta6.iter().enumerate() {
        if t > opts.max_angle {
            return Err(Error::InvalidInput(format!(
                "target angle theta[{k}] = {t} exceeds the max_angle guard {}",
                opts.max_angle
            )));
        }
    }
    let parity_j = match &opts.parity_j {
        Some(p) => {
            if p.len() != partition.j_indices().len() {
                return Err(Error::InvalidInput(format!(
                    "expected {} frozen parities, got {}",
                    partition.j_indices().len(),
                    p.len()
                )));
            }
            p.clone()
        }
        None => natural_parities(theta6, mu, partition, r_list[0])?,
    };
    let outcomes: Vec<(u32, std::result::Result<SweepRow, String>)> = r_list
        .par_iter()
        .map(|&r| {
            (
                r,
                sweep_one(theta6, mu, partition, r, &parity_j, opts).map_err(|e| e.to_string()),
            )
        })
        .collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (r, outcome) in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(reason) => skipped.push((r, reason)),
        }
    }
    let fit = fit_ratio(&rows);
    Ok(SweepReport {
        theta: *theta6,
        mu: *mu,
        partition: *partition,
        r_list: r_list.to_vec(),
        parity_j,
        options: opts.clone(),
        rows,
        skipped,
        fit,
    })
}

fn jf(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    format!("{x}")
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

fn join<T, F: Fn(&T) -> String>(items: &[T], f: F) -> String {
    items.iter().map(|x| f(x)).collect::<Vec<_>>().join(", ")
}

impl SweepReport {
    /// JSON document {schema, params, rows, skipped, fit}. Scaled values
    /// serialize as {log_mag, phase}, which stays finite where plain re/im
    /// would overflow; non-finite numbers serialize as null.
    pub fn to_json(&self) -> String {
        let mut s = String::from("{\"schema\": 1, \"params\": {");
        s.push_str(&format!("\"theta\": [{}], ", join(&self.theta, |x| jf(*x))));
        s.push_str(&format!(
            "\"mu\": [{}], ",
            join(&self.mu, |m| m.to_string())
        ));
        s.push_str(&format!(
            "\"partition_i\": [{}], ",
            join(&self.partition.i_indices(), |k| k.to_string())
        ));
        s.push_str(&format!(
            "\"r_list\": [{}], ",
            join(&self.r_list, |r| r.to_string())
        ));
        s.push_str(&format!(
            "\"parity_j\": [{}], ",
            join(&self.parity_j, |p| p.to_string())
        ));
        s.push_str(&format!(
            "\"max_angle\": {}, \"tol\": {}, \"budget\": {}}}, ",
            jf(self.options.max_angle),
            jf(self.options.tol),
            self.options.budget
        ));
        s.push_str("\"rows\": [");
        s.push_str(&join(&self.rows, |row| {
            format!(
                "{{\"r\": {}, \"yhat\": {{\"log_mag\": {}, \"phase\": {}}}, \
                 \"rhs\": {{\"log_mag\": {}, \"phase\": {}}}, \
                 \"ratio\": {{\"re\": {}, \"im\": {}}}, \
                 \"abs_ratio\": {}, \"arg_ratio\": {}, \"growth_err\": {}}}",
                row.r,
                jf(row.yhat.log_mag),
                jf(row.yhat.phase),
                jf(row.rhs.log_mag),
                jf(row.rhs.phase),
                jf(row.ratio.re),
                jf(row.ratio.im),
                jf(row.abs_ratio),
                jf(row.arg_ratio),
                jf(row.growth_err)
            )
        }));
        s.push_str("], \"skipped\": [");
        s.push_str(&join(&self.skipped, |(r, reason)| {
            format!("{{\"r\": {}, \"reason\": \"{}\"}}", r, json_escape(reason))
        }));
        s.push_str("], \"fit\": ");
        match &self.fit {
            Some(f) => s.push_str(&format!(
                "{{\"c1\": {}, \"c2\": {}, \"r2\": {}}}",
                jf(f.c1),
                jf(f.c2),
                jf(f.r2)
            )),
            None => s.push_str("null"),
        }
        s.push('}');
        s
    }

    /// CSV rows with re/im reconstructed from the scaled values; these
    /// render as inf when the magnitude exceeds the f64 range.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,yhat_re,yhat_im,rhs_re,rhs_im,abs_ratio,arg_ratio,growth_err\n");
        for row in &self.rows {
            let y = row.yhat.to_complex();
            let p = row.rhs.to_complex();
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                row.r, y.re, y.im, p.re, p.im, row.abs_ratio, row.arg_ratio, row.growth_err
            ));
        }
        s
    }
}
