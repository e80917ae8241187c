//! Brute-force invariant sums: the color Fourier kernel H, the discrete
//! Fourier transform of the Yokota-type invariant of the tetrahedral graph,
//! parity counts of {0,1}-colorings, and the relative Turaev-Viro state sum
//! on explicit triangulations.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Partition;
use crate::qkernel::{
    is_admissible_six, sixj_scaled, ColorTuple6, QContext, TRIPLES,
};
use crate::scaled::{ScaledAccumulator, ScaledComplex};

/// Default cap on 6j evaluations per enumeration call.
pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

/// Colors fixed by one transform: Fourier-conjugate colors b on the I-edges,
/// plain colors a on the J-edges, and flags mu recording the side of r/2 each
/// color sits on (+1 above, -1 below; r odd rules out a tie).
#[derive(Debug, Clone)]
pub struct ColoringSpec {
    pub b_i: Vec<i64>,
    pub a_j: Vec<i64>,
    pub mu: [i8; 6],
}

impl ColoringSpec {
    pub fn new(
        b_i: &[i64],
        a_j: &[i64],
        mu: [i8; 6],
        partition: &Partition,
        ctx: &QContext,
    ) -> Result<Self> {
        let spec = ColoringSpec {
            b_i: b_i.to_vec(),
            a_j: a_j.to_vec(),
            mu,
        };
        spec.validate(partition, ctx)?;
        Ok(spec)
    }

    /// Builds the spec with mu derived from the colors themselves.
    pub fn from_colors(
        b_i: &[i64],
        a_j: &[i64],
        partition: &Partition,
        ctx: &QContext,
    ) -> Result<Self> {
        let mut spec = ColoringSpec {
            b_i: b_i.to_vec(),
            a_j: a_j.to_vec(),
            mu: [1; 6],
        };
        spec.check_lengths(partition)?;
        let colors = spec.colors6(partition);
        let r = i64::from(ctx.r);
        for k in 0..6 {
            spec.mu[k] = if 2 * colors[k] > r { 1 } else { -1 };
        }
        spec.validate(partition, ctx)?;
        Ok(spec)
    }

    fn check_lengths(&self, partition: &Partition) -> Result<()> {
        let (ni, nj) = (partition.size_i(), 6 - partition.size_i());
        if self.b_i.len() != ni || self.a_j.len() != nj {
            return Err(Error::InvalidInput(format!(
                "expected {} b-colors and {} a-colors, got {} and {}",
                ni,
                nj,
                self.b_i.len(),
                self.a_j.len()
            )));
        }
        Ok(())
    }

    fn validate(&self, partition: &Partition, ctx: &QContext) -> Result<()> {
        self.check_lengths(partition)?;
        let r = i64::from(ctx.r);
        let colors = self.colors6(partition);
        for &c in &colors {
            if c < 0 || c > r - 2 {
                return Err(Error::ColorOutOfRange {
                    value: c,
                    max: r - 2,
                    r,
                });
            }
        }
        for k in 0..6 {
            if self.mu[k] != 1 && self.mu[k] != -1 {
                return Err(Error::InvalidInput(format!(
                    "mu[{k}] = {} is not a sign",
                    self.mu[k]
                )));
            }
            let side = if 2 * colors[k] > r { 1 } else { -1 };
            if self.mu[k] != side {
                return Err(Error::InvalidInput(format!(
                    "mu[{k}] = {} inconsistent with color {} relative to r/2",
                    self.mu[k], colors[k]
                )));
            }
        }
        Ok(())
    }

    /// Assembles the full 6-slot color vector (b on I, a on J).
    pub fn colors6(&self, partition: &Partition) -> [i64; 6] {
        let mut colors = [0i64; 6];
        for (slot, &k) in partition.i_indices().iter().enumerate() {
            colors[k] = self.b_i[slot];
        }
        for (slot, &k) in partition.j_indices().iter().enumerate() {
            colors[k] = self.a_j[slot];
        }
        colors
    }

    /// Angles theta_k = |2 pi c_k / r - pi| attached to the colors.
    pub fn theta(&self, partition: &Partition, ctx: &QContext) -> [f64; 6] {
        let colors = self.colors6(partition);
        let rf = f64::from(ctx.r);
        std::array::from_fn(|k| (2.0 * PI * colors[k] as f64 / rf - PI).abs())
    }
}

/// Fourier kernel
/// H(a, b) = (-1)^{a+b} (q^{(a+1)(b+1)} - q^{-(a+1)(b+1)}) / (q - q^{-1}),
/// which is the real number (-1)^{a+b} [(a+1)(b+1)].
pub fn h_kernel(a: i64, b: i64, ctx: &QContext) -> Complex64 {
    let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
    Complex64::new(sign * ctx.quantum_integer_f((a + 1) * (b + 1)), 0.0)
}

/// Triples of slot indices that become fully colored at each assignment
/// depth: slots in `fixed` are colored from the start, free slots are
/// assigned in order. checks[d] lists the TRIPLES indices whose last free
/// slot is free[d].
fn triple_check_schedule(free: &[usize]) -> Vec<Vec<usize>> {
    let mut depth_of = [usize::MAX; 6];
    for (d, &k) in free.iter().enumerate() {
        depth_of[k] = d;
    }
    let mut checks: Vec<Vec<usize>> = vec![Vec::new(); free.len()];
    for (t_idx, t) in TRIPLES.iter().enumerate() {
        let last = t
            .iter()
            .filter_map(|&s| (depth_of[s] != usize::MAX).then_some(depth_of[s]))
            .max();
        if let Some(d) = last {
            checks[d].push(t_idx);
        }
    }
    checks
}

fn triple_admissible(colors: &[i64; 6], t_idx: usize, r: i64) -> bool {
    let t = TRIPLES[t_idx];
    let (a, b, c) = (colors[t[0]], colors[t[1]], colors[t[2]]);
    a + b >= c
        && b + c >= a
        && c + a >= b
        && a + b + c <= 2 * (r - 2)
        && (a + b + c) % 2 == 0
}

fn yhat_impl(
    spec: &ColoringSpec,
    partition: &Partition,
    ctx: &QContext,
    budget: u64,
    h: &dyn Fn(i64, i64, &QContext) -> Complex64,
) -> Result<ScaledComplex> {
    spec.validate(partition, ctx)?;
    let idx_i = partition.i_indices();
    let mut colors = [0i64; 6];
    for (slot, &k) in partition.j_indices().iter().enumerate() {
        colors[k] = spec.a_j[slot];
    }
    if idx_i.is_empty() {
        let t = ColorTuple6(colors);
        if !is_admissible_six(&t, ctx) {
            return Ok(ScaledComplex::ZERO);
        }
        let s = sixj_scaled(&t, ctx)?;
        return Ok(s * s);
    }
    // triples entirely on J-edges admit no freedom: an inadmissible one
    // empties the sum
    let r = i64::from(ctx.r);
    for (t_idx, t) in TRIPLES.iter().enumerate() {
        if t.iter().all(|&s| !partition.contains_i(s))
            && !triple_admissible(&colors, t_idx, r)
        {
            return Ok(ScaledComplex::ZERO);
        }
    }
    let checks = triple_check_schedule(&idx_i);
    let mut acc = ScaledAccumulator::new();
    let mut evals: u64 = 0;
    // lexicographic odometer over a_I with per-depth admissibility pruning
    let mut depth = 0usize;
    let mut stack_h = vec![Complex64::new(1.0, 0.0); idx_i.len() + 1];
    let mut cursor = vec![0i64; idx_i.len()];
    'outer: loop {
        while cursor[depth] <= r - 2 {
            let c = cursor[depth];
            let k = idx_i[depth];
            colors[k] = c;
            if checks[depth]
                .iter()
                .all(|&t| triple_admissible(&colors, t, r))
            {
                let hval = h(c, spec.b_i[depth], ctx);
                if depth + 1 == idx_i.len() {
                    evals += 1;
                    if evals > budget {
                        return Err(Error::BudgetExceeded { budget });
                    }
                    let s = sixj_scaled(&ColorTuple6(colors), ctx)?;
                    acc.add(s * s * ScaledComplex::from_complex(stack_h[depth] * hval));
                } else {
                    stack_h[depth + 1] = stack_h[depth] * hval;
                    cursor[depth] += 1;
                    depth += 1;
                    cursor[depth] = 0;
                    continue;
                }
            }
            cursor[depth] += 1;
        }
        loop {
            if depth == 0 {
                break 'outer;
            }
            depth -= 1;
            if cursor[depth] <= r - 2 {
                break;
            }
        }
    }
    Ok(acc.total())
}

/// Discrete Fourier transform of the Yokota-type invariant: the sum over all
/// admissible colors on the I-edges of prod_i H(a_i, b_i) times the squared
/// (not modulus-squared) 6j symbol, in scaled arithmetic.
pub fn yhat(
    spec: &ColoringSpec,
    partition: &Partition,
    ctx: &QContext,
) -> Result<ScaledComplex> {
    yhat_impl(spec, partition, ctx, DEFAULT_BUDGET, &h_kernel)
}

/// yhat with an explicit cap on the number of 6j evaluations.
pub fn yhat_with_budget(
    spec: &ColoringSpec,
    partition: &Partition,
    ctx: &QContext,
    budget: u64,
) -> Result<ScaledComplex> {
    yhat_impl(spec, partition, ctx, budget, &h_kernel)
}

/// Number of 3-admissible c in {0,1}^6 matching the parities of a_J on the
/// J-edges. A {0,1} triple is 3-admissible exactly when it has zero or two
/// ones.
pub fn n_parity(a_j: &[i64], partition: &Partition) -> Result<u32> {
    let idx_j = partition.j_indices();
    if a_j.len() != idx_j.len() {
        return Err(Error::InvalidInput(format!(
            "expected {} parities, got {}",
            idx_j.len(),
            a_j.len()
        )));
    }
    let tri3 = |a: i64, b: i64, c: i64| {
        a + b >= c && b + c >= a && c + a >= b && a + b + c <= 2 && (a + b + c) % 2 == 0
    };
    let mut count = 0;
    for bits in 0..64u32 {
        let c: [i64; 6] = std::array::from_fn(|k| i64::from((bits >> k) & 1));
        let parity_ok = idx_j
            .iter()
            .enumerate()
            .all(|(slot, &k)| c[k] % 2 == a_j[slot].rem_euclid(2));
        if parity_ok
            && TRIPLES
                .iter()
                .all(|t| tri3(c[t[0]], c[t[1]], c[t[2]]))
        {
            count += 1;
        }
    }
    Ok(count)
}

/// A triangulation presented by its edge count and the 6-tuple of edge
/// indices of each tetrahedron, in the slot convention of the 6j layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triangulation {
    pub num_edges: usize,
    pub tets: Vec<[usize; 6]>,
}

impl Triangulation {
    pub fn new(num_edges: usize, tets: Vec<[usize; 6]>) -> Result<Self> {
        let mut seen = vec![false; num_edges];
        for (s, tet) in tets.iter().enumerate() {
            for &e in tet {
                if e >= num_edges {
                    return Err(Error::BadTriangulation(format!(
                        "tet {s} references edge {e} but only {num_edges} edges exist"
                    )));
                }
                seen[e] = true;
            }
        }
        if let Some(e) = seen.iter().position(|&s| !s) {
            return Err(Error::BadTriangulation(format!(
                "edge {e} is not referenced by any tetrahedron"
            )));
        }
        Ok(Triangulation { num_edges, tets })
    }

    /// Parses the text form: a line "edges N" followed by one line
    /// "tet e1 e2 e3 e4 e5 e6" per tetrahedron (0-based edge indices).
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::BadTriangulation("empty input".into()))?;
        let num_edges = match header.split_whitespace().collect::<Vec<_>>()[..] {
            ["edges", n] => n.parse::<usize>().map_err(|_| {
                Error::BadTriangulation(format!("bad edge count {n:?}"))
            })?,
            _ => {
                return Err(Error::BadTriangulation(format!(
                    "expected \"edges N\", got {header:?}"
                )))
            }
        };
        let mut tets = Vec::new();
        for line in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 7 || toks[0] != "tet" {
                return Err(Error::BadTriangulation(format!(
                    "expected \"tet e1 e2 e3 e4 e5 e6\", got {line:?}"
                )));
            }
            let mut tet = [0usize; 6];
            for (slot, tok) in toks[1..].iter().enumerate() {
                tet[slot] = tok.parse::<usize>().map_err(|_| {
                    Error::BadTriangulation(format!("bad edge index {tok:?}"))
                })?;
            }
            tets.push(tet);
        }
        Triangulation::new(num_edges, tets)
    }
}

/// Relative Turaev-Viro state sum: over all edge colorings a with every
/// tetrahedron admissible, prod_edges H(a_e, b_e) * prod_tets 6j(tet).
/// With b = 0 this is the unnormalized Turaev-Viro state sum.
pub fn tv_r(tri: &Triangulation, b: &[i64], ctx: &QContext) -> Result<ScaledComplex> {
    tv_r_with_budget(tri, b, ctx, DEFAULT_BUDGET)
}

pub fn tv_r_with_budget(
    tri: &Triangulation,
    b: &[i64],
    ctx: &QContext,
    budget: u64,
) -> Result<ScaledComplex> {
    let r = i64::from(ctx.r);
    if b.len() != tri.num_edges {
        return Err(Error::InvalidInput(format!(
            "expected {} edge colors, got {}",
            tri.num_edges,
            b.len()
        )));
    }
    for &c in b {
        if c < 0 || c > r - 2 {
            return Err(Error::ColorOutOfRange {
                value: c,
                max: r - 2,
                r,
            });
        }
    }
    if tri.num_edges == 0 {
        return Ok(ScaledComplex::ONE);
    }
    // schedule: (tet, triple) pairs checked as soon as their last edge is
    // assigned (edges assigned in index order)
    let mut checks: Vec<Vec<(usize, usize)>> = vec![Vec::new(); tri.num_edges];
    for (s, tet) in tri.tets.iter().enumerate() {
        for (t_idx, t) in TRIPLES.iter().enumerate() {
            let last = t.iter().map(|&slot| tet[slot]).max().unwrap();
            checks[last].push((s, t_idx));
        }
    }
    let mut memo: HashMap<ColorTuple6, ScaledComplex> = HashMap::new();
    let mut acc = ScaledAccumulator::new();
    let mut evals: u64 = 0;
    let ne = tri.num_edges;
    // a holds assigned colors, cur the per-depth iteration state
    let mut a = vec![0i64; ne];
    let mut cur = vec![0i64; ne];
    let mut stack_h = vec![Complex64::new(1.0, 0.0); ne + 1];
    let mut depth = 0usize;
    let admissible_at = |a: &[i64], depth: usize| {
        checks[depth].iter().all(|&(s, t_idx)| {
            let tet = &tri.tets[s];
            let t = TRIPLES[t_idx];
            let (x, y, z) = (a[tet[t[0]]], a[tet[t[1]]], a[tet[t[2]]]);
            x + y >= z
                && y + z >= x
                && z + x >= y
                && x + y + z <= 2 * (r - 2)
                && (x + y + z) % 2 == 0
        })
    };
    'outer: loop {
        while cur[depth] <= r - 2 {
            a[depth] = cur[depth];
            if admissible_at(&a, depth) {
                let hval = h_kernel(a[depth], b[depth], ctx);
                if depth + 1 == ne {
                    evals += tri.tets.len() as u64;
                    if evals > budget {
                        return Err(Error::BudgetExceeded { budget });
                    }
                    let mut term =
                        ScaledComplex::from_complex(stack_h[depth] * hval);
                    for tet in &tri.tets {
                        let tuple = ColorTuple6(std::array::from_fn(|slot| a[tet[slot]]));
                        let s6 = match memo.get(&tuple) {
                            Some(&v) => v,
                            None => {
                                let v = sixj_scaled(&tuple, ctx)?;
                                memo.insert(tuple, v);
                                v
                            }
                        };
                        term = term * s6;
                    }
                    acc.add(term);
                } else {
                    stack_h[depth + 1] = stack_h[depth] * hval;
                    cur[depth] += 1;
                    depth += 1;
                    cur[depth] = 0;
                    continue;
                }
            }
            cur[depth] += 1;
        }
        loop {
            if depth == 0 {
                break 'outer;
            }
            depth -= 1;
            if cur[depth] <= r - 2 {
                break;
            }
        }
    }
    Ok(acc.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qkernel::sixj;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn ctx(r: u32) -> QContext {
        QContext::new(r).unwrap()
    }

    #[test]
    fn h_kernel_basics() {
        let c = ctx(9);
        assert_abs_diff_eq!(h_kernel(0, 0, &c).re, 1.0, epsilon = 1e-14);
        for b in 0..=7i64 {
            let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
            assert_abs_diff_eq!(
                h_kernel(0, b, &c).re,
                sign * c.quantum_integer_f(b + 1),
                epsilon = 1e-12
            );
        }
        for a in 0..=7i64 {
            for b in 0..=7i64 {
                let hab = h_kernel(a, b, &c);
                assert_eq!(hab, h_kernel(b, a, &c));
                assert_eq!(hab.im, 0.0);
            }
        }
    }

    #[test]
    fn h_kernel_matches_root_of_unity_ratio() {
        // literal (q^m - q^-m)/(q - q^-1) with q = e^{2 pi i / r}
        let c = ctx(11);
        for a in 0..=9i64 {
            for b in 0..=9i64 {
                let m = (a + 1) * (b + 1);
                let rf = f64::from(c.r);
                let qm = Complex64::from_polar(1.0, 2.0 * PI * m as f64 / rf);
                let q1 = Complex64::from_polar(1.0, 2.0 * PI / rf);
                let lit = (qm - qm.conj()) / (q1 - q1.conj());
                let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
                let h = h_kernel(a, b, &c);
                assert_abs_diff_eq!(h.re, sign * lit.re, epsilon = 1e-10);
                assert_abs_diff_eq!(h.im, 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn coloring_spec_validation() {
        let c = ctx(7);
        let p = Partition::from_i_indices(&[0]).unwrap();
        assert!(ColoringSpec::from_colors(&[2], &[2, 2, 2, 2, 2], &p, &c).is_ok());
        // wrong lengths
        assert!(matches!(
            ColoringSpec::from_colors(&[2, 2], &[2, 2, 2, 2], &p, &c),
            Err(Error::InvalidInput(_))
        ));
        // out of range
        assert!(matches!(
            ColoringSpec::from_colors(&[6], &[2, 2, 2, 2, 2], &p, &c),
            Err(Error::ColorOutOfRange { .. })
        ));
        // mu inconsistent with the side of r/2: color 2 < 7/2 needs mu = -1
        assert!(matches!(
            ColoringSpec::new(&[2], &[2, 2, 2, 2, 2], [1; 6], &p, &c),
            Err(Error::InvalidInput(_))
        ));
        let spec = ColoringSpec::from_colors(&[5], &[2, 2, 2, 2, 2], &p, &c).unwrap();
        assert_eq!(spec.mu, [1, -1, -1, -1, -1, -1]);
        let th = spec.theta(&p, &c);
        assert_abs_diff_eq!(th[0], (2.0 * PI * 5.0 / 7.0 - PI).abs(), epsilon = 1e-15);
        assert_abs_diff_eq!(th[1], PI - 4.0 * PI / 7.0, epsilon = 1e-15);
    }

    #[test]
    fn yhat_empty_i_is_sixj_squared_exactly() {
        let c = ctx(7);
        let p = Partition::empty();
        let spec = ColoringSpec::from_colors(&[], &[2, 2, 2, 2, 2, 2], &p, &c).unwrap();
        let y = yhat(&spec, &p, &c).unwrap();
        let s = sixj_scaled(&ColorTuple6([2; 6]), &c).unwrap();
        assert_eq!(y, s * s);
        // inadmissible fixed colors empty the sum
        let spec0 = ColoringSpec::from_colors(&[], &[1, 0, 0, 0, 0, 0], &p, &c).unwrap();
        assert!(yhat(&spec0, &p, &c).unwrap().is_zero());
    }

    // direct unpruned summation in plain complex arithmetic
    fn yhat_direct(
        spec: &ColoringSpec,
        partition: &Partition,
        c: &QContext,
    ) -> Complex64 {
        let idx_i = partition.i_indices();
        let r = i64::from(c.r);
        let mut colors = [0i64; 6];
        for (slot, &k) in partition.j_indices().iter().enumerate() {
            colors[k] = spec.a_j[slot];
        }
        let ni = idx_i.len();
        let mut total = Complex64::new(0.0, 0.0);
        let count = (r - 1).pow(ni as u32);
        for code in 0..count {
            let mut x = code;
            for (slot, &k) in idx_i.iter().enumerate() {
                colors[k] = x % (r - 1);
                x /= r - 1;
                let _ = slot;
            }
            let t = ColorTuple6(colors);
            if !is_admissible_six(&t, c) {
                continue;
            }
            let s = sixj(&t, c).unwrap();
            let mut term = s * s;
            for (slot, &k) in idx_i.iter().enumerate() {
                term *= h_kernel(colors[k], spec.b_i[slot], c);
            }
            total += term;
        }
        total
    }

    #[test]
    fn yhat_matches_direct_summation() {
        let c = ctx(7);
        for (i_set, b_i, a_j) in [
            (vec![0usize], vec![3i64], vec![2i64, 2, 2, 2, 2]),
            (vec![1, 4], vec![2, 4], vec![1, 3, 3, 2]),
            (vec![0, 1, 2], vec![0, 2, 4], vec![2, 2, 2]),
        ] {
            let p = Partition::from_i_indices(&i_set).unwrap();
            let spec = ColoringSpec::from_colors(&b_i, &a_j, &p, &c).unwrap();
            let y = yhat(&spec, &p, &c).unwrap().to_complex();
            let direct = yhat_direct(&spec, &p, &c);
            assert_relative_eq!(y.re, direct.re, max_relative = 1e-10, epsilon = 1e-12);
            assert_relative_eq!(y.im, direct.im, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn yhat_invariant_under_tetrahedral_relabeling() {
        // slot permutations preserving the triple structure: a column swap
        // and an upper-lower swap of the standard symmetry group
        let perms: [[usize; 6]; 2] = [[1, 0, 2, 4, 3, 5], [3, 4, 2, 0, 1, 5]];
        let c = ctx(9);
        let i_set = [0usize, 3];
        let p = Partition::from_i_indices(&i_set).unwrap();
        let spec = ColoringSpec::from_colors(&[4, 6], &[3, 3, 5, 3], &p, &c).unwrap();
        let base = yhat(&spec, &p, &c).unwrap().to_complex();
        let colors = spec.colors6(&p);
        for perm in perms {
            // slot k of the permuted tuple holds what slot perm[k] held
            let mut new_colors = [0i64; 6];
            let mut new_i = Vec::new();
            for (k, &src) in perm.iter().enumerate() {
                new_colors[k] = colors[src];
                if p.contains_i(src) {
                    new_i.push(k);
                }
            }
            new_i.sort_unstable();
            let p2 = Partition::from_i_indices(&new_i).unwrap();
            let b2: Vec<i64> = p2.i_indices().iter().map(|&k| new_colors[k]).collect();
            let a2: Vec<i64> = p2.j_indices().iter().map(|&k| new_colors[k]).collect();
            let spec2 = ColoringSpec::from_colors(&b2, &a2, &p2, &c).unwrap();
            let y2 = yhat(&spec2, &p2, &c).unwrap().to_complex();
            assert_relative_eq!(y2.re, base.re, max_relative = 1e-10, epsilon = 1e-12);
            assert_relative_eq!(y2.im, base.im, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn yhat_scaled_arithmetic_is_linear_in_kernel() {
        let c = ctx(7);
        let p = Partition::from_i_indices(&[2]).unwrap();
        let spec = ColoringSpec::from_colors(&[4], &[2, 2, 2, 2, 2], &p, &c).unwrap();
        let single = yhat_impl(&spec, &p, &c, DEFAULT_BUDGET, &h_kernel).unwrap();
        let doubled = yhat_impl(&spec, &p, &c, DEFAULT_BUDGET, &|a, b, cc| {
            h_kernel(a, b, cc) + h_kernel(a, b, cc)
        })
        .unwrap();
        assert_abs_diff_eq!(
            doubled.log_mag - single.log_mag,
            2f64.ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(doubled.phase, single.phase, epsilon = 1e-12);
    }

    #[test]
    fn yhat_budget_guard() {
        let c = ctx(7);
        let p = Partition::full();
        let spec = ColoringSpec::from_colors(&[2; 6], &[], &p, &c).unwrap();
        assert!(matches!(
            yhat_with_budget(&spec, &p, &c, 10),
            Err(Error::BudgetExceeded { budget: 10 })
        ));
    }

    #[test]
    fn n_parity_counts() {
        // J empty: the 3-admissible patterns are the empty set, the three
        // complements of opposite-edge pairs, and the four vertex stars
        assert_eq!(n_parity(&[], &Partition::full()).unwrap(), 8);
        let p = Partition::empty();
        assert_eq!(n_parity(&[0, 0, 0, 0, 0, 0], &p).unwrap(), 1);
        assert_eq!(n_parity(&[2, 4, 2, 0, 2, 4], &p).unwrap(), 1);
        // an odd face parity kills every candidate
        assert_eq!(n_parity(&[1, 0, 0, 0, 0, 0], &p).unwrap(), 0);
        // J = {0} odd: two pair complements and two stars contain edge 0
        let p2 = Partition::from_i_indices(&[1, 2, 3, 4, 5]).unwrap();
        assert_eq!(n_parity(&[1], &p2).unwrap(), 4);
    }

    #[test]
    fn triangulation_parsing_and_validation() {
        let t = Triangulation::from_text("edges 6\ntet 0 1 2 3 4 5\n").unwrap();
        assert_eq!(t.num_edges, 6);
        assert_eq!(t.tets, vec![[0, 1, 2, 3, 4, 5]]);
        assert!(matches!(
            Triangulation::from_text("edges 6\ntet 0 1 2 3 4 9\n"),
            Err(Error::BadTriangulation(_))
        ));
        assert!(matches!(
            Triangulation::from_text("edges 7\ntet 0 1 2 3 4 5\n"),
            Err(Error::BadTriangulation(_))
        ));
        assert!(matches!(
            Triangulation::from_text("edges 6\ntet 0 1 2 3 4\n"),
            Err(Error::BadTriangulation(_))
        ));
        assert!(matches!(
            Triangulation::from_text(""),
            Err(Error::BadTriangulation(_))
        ));
    }

    // independent enumeration: reversed edge order, no pruning, unscaled
    fn tv_direct(tri: &Triangulation, b: &[i64], c: &QContext) -> Complex64 {
        let r = i64::from(c.r);
        let ne = tri.num_edges;
        let mut total = Complex64::new(0.0, 0.0);
        let count = (r - 1).pow(ne as u32);
        'colorings: for code in 0..count {
            let mut a = vec![0i64; ne];
            let mut x = code;
            for e in (0..ne).rev() {
                a[e] = x % (r - 1);
                x /= r - 1;
            }
            let mut term = Complex64::new(1.0, 0.0);
            for tet in &tri.tets {
                let tuple = ColorTuple6(std::array::from_fn(|slot| a[tet[slot]]));
                if !is_admissible_six(&tuple, c) {
                    continue 'colorings;
                }
                term *= sixj(&tuple, c).unwrap();
            }
            for e in 0..ne {
                term *= h_kernel(a[e], b[e], c);
            }
            total += term;
        }
        total
    }

    #[test]
    fn tv_single_tetrahedron_matches_direct() {
        let tri = Triangulation::from_text("edges 6\ntet 0 1 2 3 4 5\n").unwrap();
        for r in [5u32, 7] {
            let c = ctx(r);
            for b in [vec![0i64; 6], vec![1, 0, 2, 0, 1, 0]] {
                let fast = tv_r(&tri, &b, &c).unwrap().to_complex();
                let direct = tv_direct(&tri, &b, &c);
                assert_relative_eq!(fast.re, direct.re, max_relative = 1e-10, epsilon = 1e-12);
                assert_relative_eq!(fast.im, direct.im, max_relative = 1e-10, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn tv_two_tetrahedra_glued_along_a_face() {
        // second tetrahedron shares the (0,1,2) face triple
        let tri = Triangulation::from_text("edges 9\ntet 0 1 2 3 4 5\ntet 0 1 2 6 7 8\n")
            .unwrap();
        let c = ctx(5);
        let b = vec![0i64; 9];
        let fast = tv_r(&tri, &b, &c).unwrap().to_complex();
        let direct = tv_direct(&tri, &b, &c);
        assert_relative_eq!(fast.re, direct.re, max_relative = 1e-10, epsilon = 1e-12);
        assert_relative_eq!(fast.im, direct.im, max_relative = 1e-10, epsilon = 1e-12);
    }

    #[test]
    fn tv_growth_between_orders_recorded() {
        let tri = Triangulation::from_text("edges 6\ntet 0 1 2 3 4 5\n").unwrap();
        let b = vec![0i64; 6];
        let t5 = tv_r(&tri, &b, &ctx(5)).unwrap();
        let t7 = tv_r(&tri, &b, &ctx(7)).unwrap();
        assert!(!t5.is_zero());
        assert!(!t7.is_zero());
        assert!(t7.log_mag > t5.log_mag);
    }

    #[test]
    fn tv_budget_guard() {
        let tri = Triangulation::from_text("edges 6\ntet 0 1 2 3 4 5\n").unwrap();
        assert!(matches!(
            tv_r_with_budget(&tri, &[0; 6], &ctx(7), 3),
            Err(Error::BudgetExceeded { budget: 3 })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn yhat_pruned_equals_unpruned(mask in 1u8..64, seed in 0u64..1000) {
            let c = ctx(5);
            let i_set: Vec<usize> = (0..6).filter(|k| mask & (1 << k) != 0).collect();
            let p = Partition::from_i_indices(&i_set).unwrap();
            // colors derived from the seed, all in 0..=3
            let mut state = seed;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) % 4) as i64
            };
            let b_i: Vec<i64> = (0..p.size_i()).map(|_| next()).collect();
            let a_j: Vec<i64> = (0..6 - p.size_i()).map(|_| next()).collect();
            let spec = ColoringSpec::from_colors(&b_i, &a_j, &p, &c).unwrap();
            let fast = yhat(&spec, &p, &c).unwrap().to_complex();
            let direct = yhat_direct(&spec, &p, &c);
            prop_assert!((fast - direct).norm() <= 1e-10 * direct.norm().max(1.0));
        }
    }
}
