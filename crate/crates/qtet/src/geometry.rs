//! Gram matrices, the critical-point potential U with its derivatives, the
//! co-volume of deeply truncated tetrahedra, and the angle-to-length solver.

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::qdilog::li2;
use crate::qkernel::{QUADS, TRIPLES};

/// Slack applied to closed-region membership tests, absorbing roundoff on
/// boundary configurations (ideal vertices sit exactly on the boundary).
const SLACK: f64 = 1e-9;

/// Edge partition of a tetrahedron: I = deeply truncated edges (carrying
/// lengths), J = the complement (carrying dihedral angles).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Partition {
    mask: [bool; 6],
}

impl Partition {
    /// Builds a partition from the 0-based I-edge indices.
    pub fn from_i_indices(idx: &[usize]) -> Result<Self> {
        let mut mask = [false; 6];
        for &k in idx {
            if k >= 6 {
                return Err(Error::InvalidInput(format!(
                    "edge index {k} out of range 0..6"
                )));
            }
            if mask[k] {
                return Err(Error::InvalidInput(format!("edge index {k} repeated")));
            }
            mask[k] = true;
        }
        Ok(Partition { mask })
    }

    pub fn empty() -> Self {
        Partition { mask: [false; 6] }
    }

    pub fn full() -> Self {
        Partition { mask: [true; 6] }
    }

    pub fn contains_i(&self, k: usize) -> bool {
        self.mask[k]
    }

    pub fn i_indices(&self) -> Vec<usize> {
        (0..6).filter(|&k| self.mask[k]).collect()
    }

    pub fn j_indices(&self) -> Vec<usize> {
        (0..6).filter(|&k| !self.mask[k]).collect()
    }

    pub fn size_i(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }
}

/// Six (possibly complex) dihedral-angle variables; the half-sums over the
/// face triples and the edge quads are always recomputed from `alpha`.
#[derive(Debug, Clone, Copy)]
pub struct AngleTuple {
    pub alpha: [Complex64; 6],
}

impl AngleTuple {
    pub fn new(alpha: [Complex64; 6]) -> Self {
        AngleTuple { alpha }
    }

    pub fn from_re(re: [f64; 6]) -> Self {
        AngleTuple {
            alpha: re.map(|x| Complex64::new(x, 0.0)),
        }
    }

    /// tau_i = half the angle sum over the i-th face triple.
    pub fn tau(&self) -> [Complex64; 4] {
        TRIPLES.map(|t| (self.alpha[t[0]] + self.alpha[t[1]] + self.alpha[t[2]]) * 0.5)
    }

    /// eta_j = half the angle sum over the j-th opposite-edge quad.
    pub fn eta(&self) -> [Complex64; 3] {
        QUADS.map(|q| {
            (self.alpha[q[0]] + self.alpha[q[1]] + self.alpha[q[2]] + self.alpha[q[3]]) * 0.5
        })
    }
}

/// Solved deeply truncated tetrahedron: lengths and angles on all six edges,
/// volume, Gram determinant, and the angle-length Jacobian on the I-block.
#[derive(Debug, Clone)]
pub struct TetGeometry {
    pub partition: Partition,
    pub l: [f64; 6],
    pub theta: [f64; 6],
    pub vol: f64,
    pub gram_det: f64,
    pub jac: DMatrix<f64>,
}

/// The Gram matrix function: symmetric, unit diagonal, -cosh z_k in the slot
/// of edge k (opposite edges share no face, hence the index layout).
pub fn gram(z: &[Complex64; 6]) -> Matrix4<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let m = |k: usize| -z[k].cosh();
    Matrix4::new(
        one,
        m(0),
        m(1),
        m(5),
        m(0),
        one,
        m(2),
        m(4),
        m(1),
        m(2),
        one,
        m(3),
        m(5),
        m(4),
        m(3),
        one,
    )
}

/// Gram matrix with +cos alpha_k entries, obtained from [`gram`] at
/// z_k = i (pi - alpha_k). At alpha = pi + i l (or pi + theta) this recovers
/// the -cosh l (-cos theta) entries of the geometric Gram matrix.
pub fn cos_gram(alpha: &[Complex64; 6]) -> Matrix4<Complex64> {
    let z = alpha.map(|a| Complex64::i() * (Complex64::new(PI, 0.0) - a));
    gram(&z)
}

/// Gram determinant of a solved configuration: -cosh l_i on I-edges,
/// -cos theta_j on J-edges. Real for real data; negative when nondegenerate.
pub fn gram_det_geometric(l: &[f64; 6], theta: &[f64; 6], partition: &Partition) -> f64 {
    let mut z = [Complex64::new(0.0, 0.0); 6];
    for k in 0..6 {
        z[k] = if partition.contains_i(k) {
            Complex64::new(l[k], 0.0)
        } else {
            Complex64::new(0.0, theta[k])
        };
    }
    gram(&z).determinant().re
}

/// Coefficients of the quadratic A z^2 + B z + C = 0 in z = e^{-2 i xi}
/// whose roots are the critical points of the xi-potential.
pub fn quad_coeffs(alpha: &AngleTuple) -> (Complex64, Complex64, Complex64) {
    let u: [Complex64; 6] = alpha.alpha.map(|a| (Complex64::i() * a).exp());
    let v: [Complex64; 6] = u.map(|x| x.inv());
    let sym = |w: &[Complex64; 6]| {
        w[0] * w[3] + w[1] * w[4] + w[2] * w[5]
            - w[0] * w[1] * w[5]
            - w[0] * w[2] * w[4]
            - w[1] * w[2] * w[3]
            - w[3] * w[4] * w[5]
            + w[0] * w[1] * w[2] * w[3] * w[4] * w[5]
    };
    let a = sym(&u);
    let c = sym(&v);
    let mut b = Complex64::new(0.0, 0.0);
    for k in 0..3 {
        b -= (u[k] - v[k]) * (u[k + 3] - v[k + 3]);
    }
    (a, b, c)
}

/// Real-angle hyperideal region (closed): every component in [0, 2 pi], each
/// face triple with pairwise sums dominating the third term and total angle
/// between 2 pi and 4 pi.
pub fn is_hyperideal_angles(alpha_re: &[f64; 6]) -> bool {
    for &a in alpha_re {
        if !(-SLACK..=2.0 * PI + SLACK).contains(&a) {
            return false;
        }
    }
    for t in &TRIPLES {
        let (x, y, z) = (alpha_re[t[0]], alpha_re[t[1]], alpha_re[t[2]]);
        let s = x + y + z;
        if s < 2.0 * PI - SLACK || s > 4.0 * PI + SLACK {
            return false;
        }
        for (p, q, w) in [(x, y, z), (y, z, x), (z, x, y)] {
            let d = p + q - w;
            if d < -SLACK || d > 2.0 * PI + SLACK {
                return false;
            }
        }
    }
    true
}

fn check_domain(alpha: &AngleTuple, xi: Complex64) -> Result<()> {
    let re = alpha.alpha.map(|a| a.re);
    if !is_hyperideal_angles(&re) {
        return Err(Error::DomainViolation(format!(
            "angle real parts {re:?} are not of hyperideal type"
        )));
    }
    let tmax = alpha
        .tau()
        .iter()
        .map(|t| t.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let emin = alpha
        .eta()
        .iter()
        .map(|e| e.re)
        .fold(f64::INFINITY, f64::min)
        .min(2.0 * PI);
    if xi.re < tmax - SLACK || xi.re > emin + SLACK {
        return Err(Error::DomainViolation(format!(
            "Re xi = {} outside [{tmax}, {emin}]",
            xi.re
        )));
    }
    Ok(())
}

fn e2i(w: Complex64) -> Complex64 {
    (Complex64::new(0.0, 2.0) * w).exp()
}

/// Log(1 - e^{2iw}), erroring on a vanishing argument.
pub(crate) fn log1m_e2i(w: Complex64) -> Result<Complex64> {
    let f = Complex64::new(1.0, 0.0) - e2i(w);
    if f.norm() < 1e-14 {
        return Err(Error::DegenerateGeometry(format!(
            "1 - e^{{2iw}} vanishes at w = {w}"
        )));
    }
    Ok(f.ln())
}

fn u_raw(alpha: &AngleTuple, xi: Complex64) -> Complex64 {
    let tau = alpha.tau();
    let eta = alpha.eta();
    let pi_c = Complex64::new(PI, 0.0);
    // pi^2 - 2 Li2(1)
    let mut u = Complex64::new(PI * PI - PI * PI / 3.0, 0.0);
    for &t in &tau {
        for &e in &eta {
            let d = e - t;
            u += 0.5 * d * d - 0.5 * li2(e2i(d));
        }
        let dtp = t - pi_c;
        u -= 0.5 * dtp * dtp;
        u += 0.5 * li2(e2i(dtp));
        let dxt = xi - t;
        u -= dxt * dxt;
        u += li2(e2i(dxt));
    }
    let dxp = xi - pi_c;
    u += dxp * dxp;
    u -= li2(e2i(dxp));
    for &e in &eta {
        let dex = e - xi;
        u -= dex * dex;
        u += li2(e2i(dex));
    }
    u
}

/// The potential U(alpha, xi): quadratic form plus dilogarithms of the
/// exponentiated half-sums. Requires hyperideal real parts and
/// max Re tau_i <= Re xi <= min(Re eta_j, 2 pi).
pub fn u_func(alpha: &AngleTuple, xi: Complex64) -> Result<Complex64> {
    check_domain(alpha, xi)?;
    Ok(u_raw(alpha, xi))
}

/// dU/dxi in closed form. Built from principal logarithms, so it equals the
/// derivative of [`u_func`] away from branch cuts and can differ by a
/// multiple of 4 pi when a cut intervenes; fold with [`fold_real`].
pub fn u_dxi(alpha: &AngleTuple, xi: Complex64) -> Result<Complex64> {
    check_domain(alpha, xi)?;
    let tau = alpha.tau();
    let eta = alpha.eta();
    let pi_c = Complex64::new(PI, 0.0);
    let two_i = Complex64::new(0.0, 2.0);
    let mut d = 2.0 * (xi - pi_c) + two_i * log1m_e2i(xi - pi_c)?;
    for &t in &tau {
        d -= 2.0 * (xi - t);
        d -= two_i * log1m_e2i(xi - t)?;
    }
    for &e in &eta {
        d += 2.0 * (e - xi);
        d += two_i * log1m_e2i(e - xi)?;
    }
    Ok(d)
}

/// d^2 U / d xi^2 in closed form, via the cotangent-like kernel
/// 1 / (e^{-2ic} - 1).
pub fn u_dxi2(alpha: &AngleTuple, xi: Complex64) -> Result<Complex64> {
    check_domain(alpha, xi)?;
    let a = |c: Complex64| {
        let d = (Complex64::new(0.0, -2.0) * c).exp() - Complex64::new(1.0, 0.0);
        d.inv()
    };
    let pi_c = Complex64::new(PI, 0.0);
    let mut out = Complex64::new(-12.0, 0.0) + 4.0 * a(xi - pi_c);
    for &t in &alpha.tau() {
        out -= 4.0 * a(xi - t);
    }
    for &e in &alpha.eta() {
        out -= 4.0 * a(e - xi);
    }
    Ok(out)
}

/// dU/d alpha_k (k 0-based), assembled from the tau- and eta-partials through
/// the half-sum chain rule. Principal-log form; ambiguity is mod pi.
pub fn u_dalpha(alpha: &AngleTuple, xi: Complex64, k: usize) -> Result<Complex64> {
    if k >= 6 {
        return Err(Error::InvalidInput(format!("edge index {k} out of range")));
    }
    check_domain(alpha, xi)?;
    let tau = alpha.tau();
    let eta = alpha.eta();
    let pi_c = Complex64::new(PI, 0.0);
    let i_c = Complex64::i();
    let mut total = Complex64::new(0.0, 0.0);
    for (i, tri) in TRIPLES.iter().enumerate() {
        if !tri.contains(&k) {
            continue;
        }
        let t = tau[i];
        let mut d = -(t - pi_c) + 2.0 * (xi - t);
        d -= i_c * log1m_e2i(t - pi_c)?;
        d += 2.0 * i_c * log1m_e2i(xi - t)?;
        for &e in &eta {
            d -= e - t;
            d -= i_c * log1m_e2i(e - t)?;
        }
        total += 0.5 * d;
    }
    for (j, quad) in QUADS.iter().enumerate() {
        if !quad.contains(&k) {
            continue;
        }
        let e = eta[j];
        let mut d = -2.0 * (e - xi);
        d -= 2.0 * i_c * log1m_e2i(e - xi)?;
        for &t in &tau {
            d += e - t;
            d += i_c * log1m_e2i(e - t)?;
        }
        total += 0.5 * d;
    }
    Ok(total)
}

/// Subtracts the nearest multiple of `period` from the real part; the
/// imaginary part carries no branch ambiguity.
pub fn fold_real(w: Complex64, period: f64) -> Complex64 {
    Complex64::new(w.re - period * (w.re / period).round(), w.im)
}

/// The kappa prefactor: linear terms plus a weighted sum of logarithms of
/// the same 1 - e^{2iw} factors that feed U.
pub fn kappa_func(alpha: &AngleTuple, xi: Complex64) -> Result<Complex64> {
    check_domain(alpha, xi)?;
    let tau = alpha.tau();
    let eta = alpha.eta();
    let pi_c = Complex64::new(PI, 0.0);
    let i_c = Complex64::i();
    let mut kap = -i_c * xi - 1.5 * i_c * pi_c;
    for &t in &tau {
        kap += 0.5 * i_c * t;
        kap -= 0.75 * log1m_e2i(t - pi_c)?;
        kap -= 0.5 * log1m_e2i(xi - t)?;
        for &e in &eta {
            kap += 0.25 * log1m_e2i(e - t)?;
        }
    }
    kap += 1.5 * log1m_e2i(xi - pi_c)?;
    for &e in &eta {
        kap -= 0.5 * log1m_e2i(e - xi)?;
    }
    Ok(kap)
}

/// Critical point xi(alpha): the root/branch combination of the quadratic
/// that maximizes Im U among the candidates with Re xi in [pi, 2 pi]. This
/// selects positive volume on the geometric region and continues it
/// analytically elsewhere.
pub fn xi_of_alpha(alpha: &AngleTuple) -> Result<Complex64> {
    let (a, b, c) = quad_coeffs(alpha);
    let scale = a.norm().max(b.norm()).max(c.norm()).max(1.0);
    if a.norm() <= 1e-12 * scale {
        return Err(Error::DegenerateQuadratic(
            "leading coefficient vanishes".into(),
        ));
    }
    let disc = b * b - 4.0 * a * c;
    if disc.norm() <= 1e-12 * scale * scale {
        return Err(Error::DegenerateQuadratic("double root".into()));
    }
    let sq = disc.sqrt();
    let mut cands: Vec<Complex64> = Vec::with_capacity(4);
    for root in [(-b + sq) / (2.0 * a), (-b - sq) / (2.0 * a)] {
        if root.norm() < 1e-280 {
            continue;
        }
        // z = e^{-2 i xi}  =>  xi = (i/2) Log z - pi m; lifts with Re in [pi, 2 pi].
        // Near arg z = 0 both lifts are boundary-legitimate, so keep both.
        let base = Complex64::i() * root.ln() * 0.5;
        if root.arg() <= 1e-9 {
            cands.push(base + PI);
        }
        if root.arg() >= -1e-9 {
            cands.push(base + 2.0 * PI);
        }
    }
    if cands.is_empty() {
        return Err(Error::DegenerateQuadratic("both roots vanish".into()));
    }
    // restrict to candidates inside the xi-domain when any are, then take the
    // one maximizing Im U (ties break toward smaller Re xi)
    let in_dom: Vec<Complex64> = cands
        .iter()
        .copied()
        .filter(|&x| check_domain(alpha, x).is_ok())
        .collect();
    let pool = if in_dom.is_empty() { &cands } else { &in_dom };
    let mut best = pool[0];
    let mut best_im = u_raw(alpha, best).im;
    for &xi in &pool[1..] {
        let im = u_raw(alpha, xi).im;
        if im > best_im + 1e-12 || ((im - best_im).abs() <= 1e-12 && xi.re < best.re) {
            best = xi;
            best_im = im;
        }
    }
    check_domain(alpha, best)?;
    #[cfg(debug_assertions)]
    {
        // boundary configurations put a log argument at 0, where the closed
        // form is unavailable; skip the residual check there
        if let Ok(d) = u_dxi(alpha, best) {
            debug_assert!(
                fold_real(d, 4.0 * PI).norm() < 1e-6,
                "critical residual too large: {d}"
            );
        }
    }
    Ok(best)
}

/// W(alpha) = U(alpha, xi(alpha)).
pub fn w_func(alpha: &AngleTuple) -> Result<Complex64> {
    let xi = xi_of_alpha(alpha)?;
    u_func(alpha, xi)
}

/// Embeds lengths on I and angles on J into the angle variables:
/// alpha_i = pi + i l_i, alpha_j = pi - theta_j (ascending edge order).
/// The covolume is insensitive to either sign choice, but pi - theta keeps
/// the xi-window open all the way to the ideal boundary, where pi + theta
/// pinches it to a point.
pub fn embed_angles(l_i: &[f64], theta_j: &[f64], partition: &Partition) -> Result<AngleTuple> {
    let idx_i = partition.i_indices();
    let idx_j = partition.j_indices();
    if l_i.len() != idx_i.len() || theta_j.len() != idx_j.len() {
        return Err(Error::InvalidInput(format!(
            "expected {} lengths and {} angles, got {} and {}",
            idx_i.len(),
            idx_j.len(),
            l_i.len(),
            theta_j.len()
        )));
    }
    let mut alpha = [Complex64::new(0.0, 0.0); 6];
    for (slot, &k) in idx_i.iter().enumerate() {
        alpha[k] = Complex64::new(PI, l_i[slot]);
    }
    for (slot, &k) in idx_j.iter().enumerate() {
        alpha[k] = Complex64::new(PI - theta_j[slot], 0.0);
    }
    Ok(AngleTuple::new(alpha))
}

/// Co-volume Cov(l_I, theta_J) = (W - 2 pi^2) / (2i), which must come out
/// real; a residual real part of W - 2 pi^2 beyond 2e-8 is an error.
pub fn covolume(l_i: &[f64], theta_j: &[f64], partition: &Partition) -> Result<f64> {
    let alpha = embed_angles(l_i, theta_j, partition)?;
    let w = w_func(&alpha)?;
    let spurious = -(w.re - 2.0 * PI * PI) / 2.0;
    if spurious.abs() > 1e-8 {
        return Err(Error::NonRealResult { imag: spurious });
    }
    Ok(w.im / 2.0)
}

/// Richardson-extrapolated central difference of f along coordinate k.
fn partial_fd(f: &dyn Fn(&[f64]) -> Result<f64>, x: &[f64], k: usize) -> Result<f64> {
    let h = 1e-5 * x[k].abs().max(1.0);
    let diff = |hh: f64| -> Result<f64> {
        let mut xp = x.to_vec();
        xp[k] += hh;
        let mut xm = x.to_vec();
        xm[k] -= hh;
        Ok((f(&xp)? - f(&xm)?) / (2.0 * hh))
    };
    let d1 = diff(h)?;
    let d2 = diff(0.5 * h)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Richardson-extrapolated FD Jacobian of the angle map. The angle values
/// themselves carry FD noise, so the outer step is kept wide (1e-2) and
/// extrapolated once; plain central differences leave ~1e-6 asymmetry.
fn jacobian_fd(
    theta_map: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    l: &[f64],
    ni: usize,
) -> Result<DMatrix<f64>> {
    let mut jac = DMatrix::<f64>::zeros(ni, ni);
    for col in 0..ni {
        let h = 1e-2 * l[col].abs().max(1.0);
        let diff = |hh: f64| -> Result<Vec<f64>> {
            let mut lp = l.to_vec();
            lp[col] += hh;
            let mut lm = l.to_vec();
            lm[col] -= hh;
            let tp = theta_map(&lp)?;
            let tm = theta_map(&lm)?;
            Ok((0..ni)
                .map(|row| (tp[row] - tm[row]) / (2.0 * hh))
                .collect())
        };
        let d1 = diff(h)?;
        let d2 = diff(0.5 * h)?;
        for row in 0..ni {
            jac[(row, col)] = (4.0 * d2[row] - d1[row]) / 3.0;
        }
    }
    Ok(jac)
}

/// Solves for the I-edge lengths realizing the target dihedral angles
/// theta_I, with theta_J held fixed, by Newton iteration on
/// theta_i(l) = 2 dCov/dl_i. Fills in J-edge lengths, volume, Gram
/// determinant, and the length-to-angle Jacobian.
pub fn solve_geometry(
    theta_i: &[f64],
    theta_j: &[f64],
    partition: &Partition,
    tol: f64,
) -> Result<TetGeometry> {
    let idx_i = partition.i_indices();
    let idx_j = partition.j_indices();
    if theta_i.len() != idx_i.len() || theta_j.len() != idx_j.len() {
        return Err(Error::InvalidInput(format!(
            "expected {} I-angles and {} J-angles, got {} and {}",
            idx_i.len(),
            idx_j.len(),
            theta_i.len(),
            theta_j.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let ni = idx_i.len();
    let cov_l = |l: &[f64]| covolume(l, theta_j, partition);
    let theta_map = |l: &[f64]| -> Result<Vec<f64>> {
        (0..ni).map(|k| Ok(2.0 * partial_fd(&cov_l, l, k)?)).collect()
    };
    let residual_norm = |th: &[f64], l: &[f64]| -> f64 {
        th.iter()
            .zip(l)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };

    let mut l = vec![0.5; ni];
    if ni > 0 {
        let mut th = theta_map(&l)?;
        let mut res = residual_norm(&th, theta_i);
        let mut converged = res < tol;
        for _ in 0..100 {
            if converged {
                break;
            }
            let jac = jacobian_fd(&theta_map, &l, ni)?;
            let rhs = nalgebra::DVector::from_iterator(
                ni,
                th.iter().zip(theta_i).map(|(a, b)| b - a),
            );
            let step = jac
                .clone()
                .lu()
                .solve(&rhs)
                .ok_or(Error::SingularJacobian)?;
            // damped update: halve until the residual improves
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..20 {
                let trial: Vec<f64> = l
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| v + lambda * step[k])
                    .collect();
                match theta_map(&trial) {
                    Ok(tt) => {
                        let r = residual_norm(&tt, theta_i);
                        if r < res {
                            l = trial;
                            th = tt;
                            res = r;
                            accepted = true;
                            break;
                        }
                    }
                    Err(_) => {}
                }
                lambda *= 0.5;
            }
            if !accepted {
                return Err(Error::SolverStalled {
                    iters: 100,
                    residual: res,
                });
            }
            converged = res < tol;
        }
        if !converged {
            return Err(Error::SolverStalled {
                iters: 100,
                residual: res,
            });
        }
    }

    // realized angles on I, lengths on J, and scalars of the solution
    let th_real = theta_map(&l)?;
    let cov = cov_l(&l)?;
    let cov_th = |tj: &[f64]| covolume(&l, tj, partition);
    let mut l6 = [0.0; 6];
    let mut th6 = [0.0; 6];
    for (slot, &k) in idx_i.iter().enumerate() {
        l6[k] = l[slot];
        th6[k] = th_real[slot];
    }
    for (slot, &k) in idx_j.iter().enumerate() {
        th6[k] = theta_j[slot];
        l6[k] = -2.0 * partial_fd(&cov_th, theta_j, slot)?;
    }
    let vol = cov
        - 0.5
            * idx_i
                .iter()
                .enumerate()
                .map(|(slot, &k)| th6[k] * l[slot])
                .sum::<f64>();
    if !(vol > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "nonpositive volume {vol}"
        )));
    }
    let jac = jacobian_fd(&theta_map, &l, ni)?;
    let gram_det = gram_det_geometric(&l6, &th6, partition);
    if gram_det >= 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "nonnegative Gram determinant {gram_det}"
        )));
    }
    Ok(TetGeometry {
        partition: *partition,
        l: l6,
        theta: th6,
        vol,
        gram_det,
        jac,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qdilog::lobachevsky;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gram_zero_vector() {
        let g = gram(&[c(0.0, 0.0); 6]);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { -1.0 };
                assert_abs_diff_eq!(g[(i, j)].re, want, epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(g.determinant().re, -16.0, epsilon = 1e-12);
    }

    #[test]
    fn gram_is_symmetric() {
        let z = [
            c(0.3, 0.1),
            c(-0.2, 0.4),
            c(1.1, -0.3),
            c(0.0, 0.9),
            c(0.7, 0.0),
            c(-0.5, -0.6),
        ];
        let g = gram(&z);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(g[(i, j)], g[(j, i)]);
            }
        }
    }

    #[test]
    fn quad_coeffs_all_pi() {
        let alpha = AngleTuple::from_re([PI; 6]);
        let (a, b, cc) = quad_coeffs(&alpha);
        assert_abs_diff_eq!(a.re, 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cc.re, 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cc.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn quad_discriminant_matches_cos_gram() {
        let samples = [
            [2.9, 3.3, 3.1, 3.0, 3.2, 2.8],
            [2.0944, 2.0944, 2.0944, 2.0944, 2.0944, 2.0944],
            [3.4, 2.7, 3.0, 3.3, 2.9, 3.1],
            [1.9, 2.4, 2.2, 2.6, 2.1, 2.3],
        ];
        for re in samples {
            let alpha = AngleTuple::from_re(re);
            let (a, b, cc) = quad_coeffs(&alpha);
            let disc = b * b - 4.0 * a * cc;
            let det = cos_gram(&alpha.alpha).determinant();
            let scale = 1.0f64.max(b.norm_sqr());
            assert!(
                (disc - 16.0 * det).norm() < 1e-10 * scale,
                "discriminant mismatch at {re:?}: {disc} vs {det}"
            );
        }
        // complex angles too
        let alpha = AngleTuple::new([
            c(3.0, 0.3),
            c(3.1, -0.2),
            c(2.9, 0.1),
            c(3.2, 0.4),
            c(2.8, -0.1),
            c(3.05, 0.2),
        ]);
        let (a, b, cc) = quad_coeffs(&alpha);
        let disc = b * b - 4.0 * a * cc;
        let det = cos_gram(&alpha.alpha).determinant();
        assert!((disc - 16.0 * det).norm() < 1e-10 * 1.0f64.max(b.norm_sqr()));
    }

    #[test]
    fn quad_coeffs_pair_symmetries() {
        let base = [3.0, 2.8, 3.2, 3.1, 2.9, 3.3];
        let (a0, b0, c0) = quad_coeffs(&AngleTuple::from_re(base));
        // flip two opposite-edge pairs: 1<->4 and 2<->5
        let flip2 = [base[3], base[4], base[2], base[0], base[1], base[5]];
        let (a1, b1, c1) = quad_coeffs(&AngleTuple::from_re(flip2));
        assert_abs_diff_eq!((a1 - a0).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((b1 - b0).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((c1 - c0).norm(), 0.0, epsilon = 1e-12);
        // permute the column pairing: (1,4) <-> (2,5)
        let perm = [base[1], base[0], base[2], base[4], base[3], base[5]];
        let (a2, b2, c2) = quad_coeffs(&AngleTuple::from_re(perm));
        assert_abs_diff_eq!((a2 - a0).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((b2 - b0).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((c2 - c0).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn xi_all_pi_picks_volume_branch() {
        let alpha = AngleTuple::from_re([PI; 6]);
        let xi = xi_of_alpha(&alpha).unwrap();
        assert_abs_diff_eq!(xi.re, 7.0 * PI / 4.0, epsilon = 1e-10);
        assert_abs_diff_eq!(xi.im, 0.0, epsilon = 1e-10);
        let resid = fold_real(u_dxi(&alpha, xi).unwrap(), 4.0 * PI);
        assert!(resid.norm() < 1e-9, "residual {resid}");
    }

    #[test]
    fn w_regular_ideal_volume() {
        // all alpha = 2 pi / 3: ideal regular tetrahedron, angles pi/3
        let alpha = AngleTuple::from_re([2.0 * PI / 3.0; 6]);
        let w = w_func(&alpha).unwrap();
        assert_abs_diff_eq!(w.re, 2.0 * PI * PI, epsilon = 1e-8);
        assert_relative_eq!(
            w.im / 2.0,
            3.0 * lobachevsky(PI / 3.0),
            max_relative = 1e-9
        );
        // the mirror embedding pi + pi/3 gives the same volume
        let alpha2 = AngleTuple::from_re([4.0 * PI / 3.0; 6]);
        let w2 = w_func(&alpha2).unwrap();
        assert_relative_eq!(w2.im, w.im, max_relative = 1e-9);
    }

    #[test]
    fn w_all_pi_is_maximal_truncation() {
        let alpha = AngleTuple::from_re([PI; 6]);
        let w = w_func(&alpha).unwrap();
        assert_abs_diff_eq!(w.re, 2.0 * PI * PI, epsilon = 1e-8);
        assert_relative_eq!(
            w.im / 2.0,
            8.0 * lobachevsky(PI / 4.0),
            max_relative = 1e-9
        );
    }

    #[test]
    fn u_dxi_matches_finite_differences() {
        let alpha = AngleTuple::from_re([3.3, 3.0, 3.2, 3.1, 2.9, 3.35]);
        let xi = c(5.5, 0.1);
        let d = u_dxi(&alpha, xi).unwrap();
        let h = 1e-6;
        let fd = (u_func(&alpha, xi + c(h, 0.0)).unwrap()
            - u_func(&alpha, xi - c(h, 0.0)).unwrap())
            / (2.0 * h);
        let gap = fold_real(d - fd, 4.0 * PI);
        assert!(gap.norm() < 1e-6, "dxi gap {gap}");
        // holomorphy: imaginary-direction difference gives i * derivative
        let fdi = (u_func(&alpha, xi + c(0.0, h)).unwrap()
            - u_func(&alpha, xi - c(0.0, h)).unwrap())
            / (2.0 * h);
        assert!((fdi - Complex64::i() * fd).norm() < 1e-5);
    }

    #[test]
    fn u_dxi2_matches_finite_differences() {
        let alpha = AngleTuple::from_re([3.3, 3.0, 3.2, 3.1, 2.9, 3.35]);
        let xi = c(5.5, 0.1);
        let d2 = u_dxi2(&alpha, xi).unwrap();
        let h = 1e-5;
        let fd = (u_dxi(&alpha, xi + c(h, 0.0)).unwrap()
            - u_dxi(&alpha, xi - c(h, 0.0)).unwrap())
            / (2.0 * h);
        assert!((d2 - fd).norm() < 1e-5, "dxi2 gap {}", (d2 - fd).norm());
    }

    #[test]
    fn u_dalpha_matches_finite_differences() {
        let base = [3.3, 3.0, 3.2, 3.1, 2.9, 3.35];
        let xi = c(5.5, 0.1);
        for k in 0..6 {
            let alpha = AngleTuple::from_re(base);
            let d = u_dalpha(&alpha, xi, k).unwrap();
            let h = 1e-6;
            let mut rp = base;
            rp[k] += h;
            let mut rm = base;
            rm[k] -= h;
            let fd = (u_func(&AngleTuple::from_re(rp), xi).unwrap()
                - u_func(&AngleTuple::from_re(rm), xi).unwrap())
                / (2.0 * h);
            let gap = fold_real(d - fd, PI);
            assert!(gap.norm() < 1e-6, "dalpha_{k} gap {gap}");
        }
    }

    #[test]
    fn u_func_rejects_outside_domain() {
        let alpha = AngleTuple::from_re([3.3, 3.0, 3.2, 3.1, 2.9, 3.35]);
        // Re xi below every tau
        assert!(matches!(
            u_func(&alpha, c(1.0, 0.0)),
            Err(Error::DomainViolation(_))
        ));
        // non-hyperideal angles
        let bad = AngleTuple::from_re([0.1, 0.1, 0.1, 0.1, 0.1, 0.1]);
        assert!(matches!(
            u_func(&bad, c(5.0, 0.0)),
            Err(Error::DomainViolation(_))
        ));
    }

    #[test]
    fn kappa_finite_on_interior_grid() {
        let alpha = AngleTuple::from_re([3.3, 3.0, 3.2, 3.1, 2.9, 3.35]);
        let tmax = alpha.tau().iter().map(|t| t.re).fold(f64::MIN, f64::max);
        let emin = alpha
            .eta()
            .iter()
            .map(|e| e.re)
            .fold(f64::MAX, f64::min)
            .min(2.0 * PI);
        for k in 1..8 {
            let xi = c(
                tmax + (emin - tmax) * f64::from(k) / 8.0,
                0.05 * f64::from(k % 3),
            );
            let v = kappa_func(&alpha, xi).unwrap();
            assert!(v.re.is_finite() && v.im.is_finite());
        }
    }

    #[test]
    fn covolume_ideal_is_plain_volume() {
        let p = Partition::empty();
        let cov = covolume(&[], &[PI / 3.0; 6], &p).unwrap();
        assert_relative_eq!(cov, 3.0 * lobachevsky(PI / 3.0), max_relative = 1e-9);
        let cov0 = covolume(&[], &[0.0; 6], &p).unwrap();
        assert_relative_eq!(cov0, 8.0 * lobachevsky(PI / 4.0), max_relative = 1e-9);
    }

    #[test]
    fn solve_geometry_no_truncation() {
        let p = Partition::empty();
        let g = solve_geometry(&[], &[PI / 6.0; 6], &p, 1e-9).unwrap();
        assert!(g.vol > 0.0);
        assert!(g.gram_det < 0.0);
        assert_eq!(g.jac.nrows(), 0);
        // all six J-lengths present and symmetric
        for k in 1..6 {
            assert_relative_eq!(g.l[k], g.l[0], max_relative = 1e-6);
        }
        assert!(g.l[0] > 0.0);
    }

    #[test]
    fn solve_geometry_full_truncation_symmetric() {
        let p = Partition::full();
        let g = solve_geometry(&[0.1; 6], &[], &p, 1e-9).unwrap();
        for k in 1..6 {
            assert_relative_eq!(g.l[k], g.l[0], max_relative = 1e-8);
        }
        for k in 0..6 {
            assert_abs_diff_eq!(g.theta[k], 0.1, epsilon = 1e-9);
        }
        assert!(g.vol > 0.0);
        assert!(g.gram_det < 0.0);
        // jac symmetric within FD noise
        for i in 0..6 {
            for j in 0..6 {
                assert_abs_diff_eq!(g.jac[(i, j)], g.jac[(j, i)], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn solve_geometry_mixed_partition() {
        let p = Partition::from_i_indices(&[0, 3]).unwrap();
        let g = solve_geometry(&[0.15, 0.2], &[0.1, 0.12, 0.14, 0.16], &p, 1e-9).unwrap();
        assert!(g.vol > 0.0);
        assert!(g.gram_det < 0.0);
        assert_abs_diff_eq!(g.theta[0], 0.15, epsilon = 1e-9);
        assert_abs_diff_eq!(g.theta[3], 0.2, epsilon = 1e-9);
        assert!(g.l[0] > 0.0 && g.l[3] > 0.0);
        assert_abs_diff_eq!(g.jac[(0, 1)], g.jac[(1, 0)], epsilon = 1e-6);
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::from_i_indices(&[0, 6]).is_err());
        assert!(Partition::from_i_indices(&[2, 2]).is_err());
        let p = Partition::from_i_indices(&[1, 4]).unwrap();
        assert_eq!(p.i_indices(), vec![1, 4]);
        assert_eq!(p.j_indices(), vec![0, 2, 3, 5]);
        assert_eq!(p.size_i(), 2);
    }
}
