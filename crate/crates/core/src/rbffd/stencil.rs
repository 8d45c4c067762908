use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nodeset::Point;

/// Smallest acceptable ratio of extreme pivots in the factorized saddle system.
pub const RCOND_MIN: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StencilConfig {
    /// Kernel is `r^(2 k_phs + 1)`.
    pub k_phs: u32,
    /// Degree of the polynomial augmentation.
    pub m_poly: u32,
    pub n_stencil: usize,
}

impl StencilConfig {
    pub fn new(k_phs: u32, m_poly: u32, n_stencil: usize) -> Result<Self> {
        let c = StencilConfig {
            k_phs,
            m_poly,
            n_stencil,
        };
        c.validate()?;
        Ok(c)
    }

    /// `r^3` with `2 * poly_terms` neighbours.
    pub fn for_laplacian(m_poly: u32) -> Self {
        let l = poly_terms(m_poly);
        StencilConfig {
            k_phs: 1,
            m_poly,
            n_stencil: 2 * l,
        }
    }

    /// Linear kernel with constant augmentation over five nodes.
    pub fn interpolation() -> Self {
        StencilConfig {
            k_phs: 0,
            m_poly: 0,
            n_stencil: 5,
        }
    }

    pub fn poly_terms(&self) -> usize {
        poly_terms(self.m_poly)
    }

    /// A stencil may have fewer nodes than monomials only when the stencil geometry
    /// makes the surplus monomials redundant (the classical 5-point cross with
    /// quadratics); that is checked per stencil.
    pub fn validate(&self) -> Result<()> {
        if self.n_stencil == 0 {
            return Err(Error::Validation("stencil size must be positive".into()));
        }
        Ok(())
    }
}

/// Number of bivariate monomials of degree at most `m`.
pub fn poly_terms(m: u32) -> usize {
    let m = m as usize;
    (m + 1) * (m + 2) / 2
}

/// Exponent pairs `(a, b)` of `x^a y^b`, graded by total degree.
pub fn monomial_exponents(m: u32) -> Vec<(u32, u32)> {
    let mut e = Vec::with_capacity(poly_terms(m));
    for d in 0..=m {
        for a in (0..=d).rev() {
            e.push((a, d - a));
        }
    }
    e
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Laplacian,
    Identity,
}

/// `r^q`.
#[inline]
pub fn phs(r: f64, q: u32) -> f64 {
    r.powi(q as i32)
}

/// 2-D Laplacian of the radial function `r^q`, namely `q^2 r^(q-2)`.
#[inline]
pub fn phs_laplacian(r: f64, q: u32) -> f64 {
    let q = q as i32;
    (q * q) as f64 * r.powi(q - 2)
}

#[inline]
fn monomial(p: Point, a: u32, b: u32) -> f64 {
    p[0].powi(a as i32) * p[1].powi(b as i32)
}

/// `op` applied to `x^a y^b` at the origin.
fn monomial_rhs(op: Operator, a: u32, b: u32) -> f64 {
    match (op, a, b) {
        (Operator::Identity, 0, 0) => 1.0,
        (Operator::Laplacian, 2, 0) | (Operator::Laplacian, 0, 2) => 2.0,
        _ => 0.0,
    }
}

/// Splits the monomials into a maximal subset that is linearly independent on the
/// stencil (greedy, in graded order) and the rest.
fn independent_monomials(local: &[Point], exps: &[(u32, u32)]) -> (Vec<(u32, u32)>, Vec<(u32, u32)>) {
    const REL_TOL: f64 = 1e-10;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::with_capacity(exps.len());
    let mut dropped = Vec::new();
    for &(a, b) in exps {
        let col: Vec<f64> = local.iter().map(|p| monomial(*p, a, b)).collect();
        let norm0 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = col;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &basis {
                let d: f64 = v.iter().zip(q).map(|(x, y)| x * y).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= d * y;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm0 > 0.0 && norm > REL_TOL * norm0 && kept.len() < local.len() {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
            kept.push((a, b));
        } else {
            dropped.push((a, b));
        }
    }
    (kept, dropped)
}

fn rcond_from_r(r: &DMatrix<f64>) -> f64 {
    let d: Vec<f64> = r.diagonal().iter().map(|v| v.abs()).collect();
    let hi = d.iter().cloned().fold(0.0, f64::max);
    let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi > 0.0 && hi.is_finite() {
        lo / hi
    } else {
        0.0
    }
}

/// RBF-FD weights of `op` at `center` over `stencil`.
///
/// Coordinates are shifted to `center` and divided by the stencil radius before the
/// saddle system is formed; the Laplacian weights are rescaled afterwards.
pub fn stencil_weights(center: Point, stencil: &[Point], config: &StencilConfig, op: Operator) -> Result<Vec<f64>> {
    let n = stencil.len();
    if n == 0 {
        return Err(Error::EmptyInput("stencil without nodes"));
    }
    let q = 2 * config.k_phs + 1;
    if op == Operator::Laplacian && q < 3 {
        return Err(Error::Validation(
            "the Laplacian of the linear kernel is singular at the nodes".into(),
        ));
    }
    let scale = stencil
        .iter()
        .map(|p| crate::nodeset::distance(*p, center))
        .fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let local: Vec<Point> = stencil
        .iter()
        .map(|p| [(p[0] - center[0]) / scale, (p[1] - center[1]) / scale])
        .collect();
    let all_exps = monomial_exponents(config.m_poly);
    let (exps, dropped) = independent_monomials(&local, &all_exps);
    let l = exps.len();

    let size = n + l;
    let mut m = DMatrix::<f64>::zeros(size, size);
    let mut rhs = DVector::<f64>::zeros(size);
    for i in 0..n {
        for j in 0..i {
            let v = phs(crate::nodeset::distance(local[i], local[j]), q);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        for (t, &(a, b)) in exps.iter().enumerate() {
            let v = monomial(local[i], a, b);
            m[(i, n + t)] = v;
            m[(n + t, i)] = v;
        }
        let r = (local[i][0] * local[i][0] + local[i][1] * local[i][1]).sqrt();
        rhs[i] = match op {
            Operator::Identity => phs(r, q),
            Operator::Laplacian => phs_laplacian(r, q),
        };
    }
    for (t, &(a, b)) in exps.iter().enumerate() {
        rhs[n + t] = monomial_rhs(op, a, b);
    }

    let qr = m.col_piv_qr();
    let rcond = rcond_from_r(&qr.r());
    let ill = || Error::Conditioning {
        point: center,
        row: None,
        rcond,
    };
    if !(rcond >= RCOND_MIN) {
        return Err(ill());
    }
    let sol = qr.solve(&rhs).ok_or_else(ill)?;
    for &(a, b) in &dropped {
        // the stencil cannot see this monomial, so its moment condition must hold
        // automatically for the weights to be exact
        let got: f64 = sol.iter().zip(&local).map(|(w, p)| w * monomial(*p, a, b)).sum();
        let want = monomial_rhs(op, a, b);
        let size: f64 = sol
            .iter()
            .zip(&local)
            .map(|(w, p)| (w * monomial(*p, a, b)).abs())
            .sum();
        if (got - want).abs() > 1e-8 * (size + want.abs() + 1.0) {
            return Err(Error::Conditioning {
                point: center,
                row: None,
                rcond: 0.0,
            });
        }
    }
    let factor = match op {
        Operator::Identity => 1.0,
        Operator::Laplacian => 1.0 / (scale * scale),
    };
    let w: Vec<f64> = sol.iter().take(n).map(|v| v * factor).collect();
    if w.iter().any(|v| !v.is_finite()) {
        return Err(ill());
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lap_monomial(p: Point, a: u32, b: u32) -> f64 {
        let (a, b) = (a as i32, b as i32);
        let mut v = 0.0;
        if a >= 2 {
            v += (a * (a - 1)) as f64 * p[0].powi(a - 2) * p[1].powi(b);
        }
        if b >= 2 {
            v += (b * (b - 1)) as f64 * p[0].powi(a) * p[1].powi(b - 2);
        }
        v
    }

    // Gaussian elimination with partial pivoting on the unshifted saddle system.
    fn dense_oracle(center: Point, st: &[Point], cfg: &StencilConfig, op: Operator) -> Vec<f64> {
        dense_oracle_with(center, st, cfg.k_phs, &monomial_exponents(cfg.m_poly), op)
    }

    fn dense_oracle_with(center: Point, st: &[Point], k_phs: u32, exps: &[(u32, u32)], op: Operator) -> Vec<f64> {
        let n = st.len();
        let l = exps.len();
        let q = (2 * k_phs + 1) as i32;
        let size = n + l;
        let mut a = vec![vec![0.0; size + 1]; size];
        let dist = |p: Point, r: Point| ((p[0] - r[0]).powi(2) + (p[1] - r[1]).powi(2)).sqrt();
        for i in 0..n {
            for j in 0..n {
                a[i][j] = dist(st[i], st[j]).powi(q);
            }
            for (t, &(ea, eb)) in exps.iter().enumerate() {
                let v = st[i][0].powi(ea as i32) * st[i][1].powi(eb as i32);
                a[i][n + t] = v;
                a[n + t][i] = v;
            }
            let r = dist(st[i], center);
            a[i][size] = match op {
                Operator::Identity => r.powi(q),
                Operator::Laplacian => (q * q) as f64 * r.powi(q - 2),
            };
        }
        for (t, &(ea, eb)) in exps.iter().enumerate() {
            a[n + t][size] = match op {
                Operator::Identity => center[0].powi(ea as i32) * center[1].powi(eb as i32),
                Operator::Laplacian => lap_monomial(center, ea, eb),
            };
        }
        for col in 0..size {
            let piv = (col..size)
                .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                .unwrap();
            a.swap(col, piv);
            for row in col + 1..size {
                let f = a[row][col] / a[col][col];
                for c in col..=size {
                    a[row][c] -= f * a[col][c];
                }
            }
        }
        let mut x = vec![0.0; size];
        for row in (0..size).rev() {
            let s: f64 = (row + 1..size).map(|c| a[row][c] * x[c]).sum();
            x[row] = (a[row][size] - s) / a[row][row];
        }
        x.truncate(n);
        x
    }

    #[test]
    fn laplacian_closed_form_matches_finite_differences() {
        let h = 1e-4;
        for q in [3u32, 5, 7] {
            for &(x, y) in &[(0.3, 0.4), (-0.7, 0.2), (1.1, -0.9)] {
                let f = |x: f64, y: f64| phs((x * x + y * y).sqrt(), q);
                let fd = (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4.0 * f(x, y)) / (h * h);
                let r = (x * x + y * y).sqrt();
                let exact = phs_laplacian(r, q);
                assert!(
                    (fd - exact).abs() < 1e-5 * exact.abs().max(1.0),
                    "q={q} fd={fd} exact={exact}"
                );
            }
        }
    }

    #[test]
    fn five_point_cross() {
        let h = 0.1;
        let st = [[0.0, 0.0], [h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h]];
        let cfg = StencilConfig::new(1, 2, 5).unwrap();
        let w = stencil_weights([0.0, 0.0], &st, &cfg, Operator::Laplacian).unwrap();
        let expect = [-4.0, 1.0, 1.0, 1.0, 1.0].map(|v| v / (h * h));
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() <= 1e-9 * b.abs(), "{w:?}");
        }
        // xy vanishes on the cross, so the oracle uses the remaining quadratics
        let exps = [(0, 0), (1, 0), (0, 1), (2, 0), (0, 2)];
        let o = dense_oracle_with([0.0, 0.0], &st, 1, &exps, Operator::Laplacian);
        for (a, b) in o.iter().zip(expect) {
            assert!((a - b).abs() <= 1e-9 * b.abs());
        }
    }

    #[test]
    fn identity_at_a_node_is_cardinal() {
        let st = [[0.0, 0.0], [1.0, 0.1], [-0.2, 0.9], [0.5, -0.7], [-0.8, -0.3]];
        let w = stencil_weights(st[2], &st, &StencilConfig::interpolation(), Operator::Identity).unwrap();
        for (i, v) in w.iter().enumerate() {
            let e = if i == 2 { 1.0 } else { 0.0 };
            assert!((v - e).abs() < 1e-12, "{w:?}");
        }
    }

    #[test]
    fn symmetric_pentagon_interpolation() {
        let st: Vec<Point> = (0..5)
            .map(|i| {
                let t = 0.3 + 2.0 * std::f64::consts::PI * i as f64 / 5.0;
                [t.cos(), t.sin()]
            })
            .collect();
        let cfg = StencilConfig::interpolation();
        let w = stencil_weights([0.0, 0.0], &st, &cfg, Operator::Identity).unwrap();
        let o = dense_oracle([0.0, 0.0], &st, &cfg, Operator::Identity);
        for (a, b) in w.iter().zip(&o) {
            assert!((a - 0.2).abs() < 1e-12, "{w:?}");
            assert!((a - b).abs() < 1e-10);
        }
        let w = stencil_weights([0.1, -0.3], &st, &cfg, Operator::Identity).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_stencil_is_ill_conditioned() {
        let st: Vec<Point> = (0..8).map(|i| [i as f64, 0.0]).collect();
        let r = stencil_weights(
            [3.0, 0.0],
            &st,
            &StencilConfig::new(1, 2, 8).unwrap(),
            Operator::Laplacian,
        );
        assert!(matches!(r, Err(Error::Conditioning { .. })));
    }

    #[test]
    fn too_few_nodes() {
        let st = [[0.0, 0.0], [1.0, 0.0]];
        let r = stencil_weights([0.0, 0.0], &st, &StencilConfig::for_laplacian(2), Operator::Laplacian);
        assert!(matches!(r, Err(Error::Conditioning { .. })));
    }

    fn random_stencil(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point> {
        (0..n)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn agrees_with_dense_oracle(seed in any::<u64>(), m in 0u32..=3, extra in 0usize..8, lap in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = (poly_terms(m) + extra).min(30).max(poly_terms(m));
            let st = random_stencil(&mut rng, n);
            let center = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
            let op = if lap { Operator::Laplacian } else { Operator::Identity };
            let cfg = StencilConfig::new(1, m, n).unwrap();
            let w = stencil_weights(center, &st, &cfg, op).unwrap();
            let o = dense_oracle(center, &st, &cfg, op);
            let scale = o.iter().map(|v| v.abs()).fold(1.0, f64::max);
            for (a, b) in w.iter().zip(&o) {
                prop_assert!((a - b).abs() <= 1e-10 * scale, "w={} oracle={}", a, b);
            }
        }

        #[test]
        fn reproduces_polynomials(seed in any::<u64>(), m in 1u32..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cfg = StencilConfig::for_laplacian(m);
            let st: Vec<Point> = random_stencil(&mut rng, cfg.n_stencil).iter().map(|p| [0.05 * p[0], 0.05 * p[1]]).collect();
            let center = st[0];
            let w = stencil_weights(center, &st, &cfg, Operator::Laplacian).unwrap();
            let s = st.iter().map(|p| crate::nodeset::distance(*p, center)).fold(0.0, f64::max);
            prop_assert!(w.iter().sum::<f64>().abs() <= 1e-8 / (s * s));
            for (a, b) in monomial_exponents(m) {
                let mono = |p: Point| (p[0] - center[0]).powi(a as i32) * (p[1] - center[1]).powi(b as i32);
                let got: f64 = w.iter().zip(&st).map(|(wi, p)| wi * mono(*p)).sum();
                let want = if (a, b) == (2, 0) || (a, b) == (0, 2) { 2.0 } else { 0.0 };
                let norm = s.powi((a + b) as i32 - 2);
                prop_assert!((got - want).abs() <= 1e-8 * norm.max(1.0), "({},{}) got {} want {}", a, b, got, want);
            }
        }
    }
}
