//! Disk test problems, the radial spacing profile and a variable-density node
//! generator for the unit-diameter disk.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nodeset::{distance, KdTree, NodeSet, Point};

pub const DISK_RADIUS: f64 = 0.5;

/// Radial node spacing: `rho1` inside `d_lim`, blending linearly to `rho2` over
/// `d_bl`, `rho2` beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub rho1: f64,
    pub rho2: f64,
    pub d_lim: f64,
    pub d_bl: f64,
}

impl DensityProfile {
    pub fn new(rho1: f64, rho2: f64, d_lim: f64, d_bl: f64) -> Result<Self> {
        let p = DensityProfile {
            rho1,
            rho2,
            d_lim,
            d_bl,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn uniform(h: f64) -> Result<Self> {
        Self::new(h, h, 0.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.rho1 > 0.0
            && self.rho2 > 0.0
            && self.d_bl > 0.0
            && self.d_lim >= 0.0
            && [self.rho1, self.rho2, self.d_lim, self.d_bl]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "density profile needs rho1, rho2, d_bl > 0 and d_lim >= 0, got {self:?}"
            )))
        }
    }

    /// Same shape with both spacings multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        DensityProfile {
            rho1: self.rho1 * s,
            rho2: self.rho2 * s,
            ..*self
        }
    }

    /// Default profile for the Poisson problem: fine near the origin where the
    /// solution decays on a 0.01 length scale.
    pub fn poisson_default() -> Self {
        DensityProfile {
            rho1: 0.0025,
            rho2: 0.0125,
            d_lim: 0.03,
            d_bl: 0.25,
        }
    }

    /// Default profile for the Laplace problem: fine towards the rim where
    /// `r^10` varies fastest.
    pub fn laplace_default() -> Self {
        DensityProfile {
            rho1: 0.015,
            rho2: 0.005,
            d_lim: 0.15,
            d_bl: 0.25,
        }
    }

    pub fn min_spacing(&self) -> f64 {
        self.rho1.min(self.rho2)
    }

    pub fn max_spacing(&self) -> f64 {
        self.rho1.max(self.rho2)
    }

    /// Expected node count in the disk for a hexagonal packing at the local spacing.
    pub fn estimated_count(&self) -> usize {
        let steps = 2000;
        let dr = DISK_RADIUS / steps as f64;
        let mut area_per = 0.0;
        for i in 0..steps {
            let r = (i as f64 + 0.5) * dr;
            let h = density(r, self);
            area_per += TAU * r * dr / (0.5 * 3f64.sqrt() * h * h);
        }
        area_per.round() as usize
    }
}

pub fn density(d: f64, profile: &DensityProfile) -> f64 {
    let DensityProfile {
        rho1,
        rho2,
        d_lim,
        d_bl,
    } = *profile;
    if d < d_lim {
        rho1
    } else if d <= d_lim + d_bl {
        rho1 + (rho2 - rho1) * (d - d_lim) / d_bl
    } else {
        rho2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Poisson,
    Laplace,
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poisson" => Ok(ProblemKind::Poisson),
            "laplace" => Ok(ProblemKind::Laplace),
            other => Err(Error::Validation(format!("unknown problem {other:?}"))),
        }
    }
}

/// `lap u = f` in the disk, `u = g` on its rim, with a known exact solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestProblem {
    pub kind: ProblemKind,
}

impl TestProblem {
    pub fn poisson() -> Self {
        TestProblem {
            kind: ProblemKind::Poisson,
        }
    }

    pub fn laplace() -> Self {
        TestProblem {
            kind: ProblemKind::Laplace,
        }
    }

    /// `2 exp(-r / 0.01)` or `1024 cos(10 theta) r^10`.
    pub fn exact(&self, p: Point) -> f64 {
        match self.kind {
            ProblemKind::Poisson => {
                let r = p[0].hypot(p[1]);
                2.0 * (-100.0 * r).exp()
            }
            // 1024 r^10 cos(10 theta) = 1024 Re((x + iy)^10)
            ProblemKind::Laplace => 1024.0 * re_pow10(p[0], p[1]),
        }
    }

    /// Source term; the Poisson forcing is singular at the origin.
    pub fn forcing(&self, p: Point) -> Result<f64> {
        match self.kind {
            ProblemKind::Poisson => {
                let r = p[0].hypot(p[1]);
                if r == 0.0 {
                    return Err(Error::Singular {
                        point: p,
                        reason: "Poisson forcing is unbounded at the origin",
                    });
                }
                Ok(200.0 * (-100.0 * r).exp() * (100.0 * r - 1.0) / r)
            }
            ProblemKind::Laplace => Ok(0.0),
        }
    }

    /// Dirichlet data, taken as the exact solution so the discrete problem is
    /// consistent (on the rim the Poisson solution is 2e-50, the Laplace one cos(10 theta)).
    pub fn dirichlet(&self, p: Point) -> f64 {
        self.exact(p)
    }
}

fn re_pow10(x: f64, y: f64) -> f64 {
    // (x + iy)^10 by repeated squaring: z^2, z^4, z^8, z^8 * z^2
    let mul = |a: (f64, f64), b: (f64, f64)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
    let z = (x, y);
    let z2 = mul(z, z);
    let z4 = mul(z2, z2);
    let z8 = mul(z4, z4);
    mul(z8, z2).0
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSamples {
    pub u_exact: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

/// Exact solution, forcing and Dirichlet data at every node.
pub fn evaluate_problem(problem: &TestProblem, nodes: &NodeSet) -> Result<ProblemSamples> {
    let mut s = ProblemSamples {
        u_exact: Vec::with_capacity(nodes.len()),
        f: Vec::with_capacity(nodes.len()),
        g: Vec::with_capacity(nodes.len()),
    };
    for &p in nodes.coords() {
        s.u_exact.push(problem.exact(p));
        s.f.push(problem.forcing(p)?);
        s.g.push(problem.dirichlet(p));
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub seed: u64,
    pub max_nodes: usize,
    /// Candidate directions tried around each front node.
    pub candidates: usize,
    /// Minimum separation as a fraction of the local spacing.
    pub min_separation: f64,
    pub repel_sweeps: usize,
}

impl GeneratorParams {
    pub fn new(seed: u64) -> Self {
        GeneratorParams {
            seed,
            max_nodes: 2_000_000,
            candidates: 18,
            min_separation: 0.8,
            repel_sweeps: 5,
        }
    }
}

/// Uniform bucket grid for incremental neighbour checks during generation.
struct Buckets {
    cell: f64,
    dims: usize,
    cells: Vec<Vec<u32>>,
}

impl Buckets {
    fn new(cell: f64) -> Self {
        let dims = (2.0 * DISK_RADIUS / cell).ceil() as usize + 3;
        Buckets {
            cell,
            dims,
            cells: vec![Vec::new(); dims * dims],
        }
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let f =
            |v: f64| (((v + DISK_RADIUS) / self.cell).floor() as isize + 1).clamp(0, self.dims as isize - 1) as usize;
        (f(p[0]), f(p[1]))
    }

    fn insert(&mut self, p: Point, id: usize) {
        let (cx, cy) = self.cell_of(p);
        self.cells[cy * self.dims + cx].push(id as u32);
    }

    fn any_within(&self, pts: &[Point], spacing: &[f64], p: Point, h: f64, sep: f64, reach: f64) -> bool {
        let (cx, cy) = self.cell_of(p);
        let span = (reach / self.cell).ceil() as usize;
        for gy in cy.saturating_sub(span)..=(cy + span).min(self.dims - 1) {
            for gx in cx.saturating_sub(span)..=(cx + span).min(self.dims - 1) {
                for &q in &self.cells[gy * self.dims + gx] {
                    let q = q as usize;
                    if distance(p, pts[q]) < sep * 0.5 * (h + spacing[q]) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Generates (interior, boundary) nodes for the disk `x^2 + y^2 <= 0.25`.
///
/// Boundary nodes sit on the rim at equal angles with spacing close to
/// `density(0.5)`, in counter-clockwise order. Interior nodes are placed by an
/// advancing front moving inward from the rim: each front node proposes candidates
/// at the local spacing and a candidate is kept when no existing node is closer
/// than `min_separation` times the (averaged) local spacing. A few repulsion sweeps
/// then even out the layer next to the rim.
pub fn generate_disk_nodes(profile: &DensityProfile, params: &GeneratorParams) -> Result<(NodeSet, NodeSet)> {
    profile.validate()?;
    let estimate = profile.estimated_count();
    if estimate > params.max_nodes {
        return Err(Error::Capacity {
            requested: estimate,
            limit: params.max_nodes,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let h_rim = density(DISK_RADIUS, profile);
    let nb = ((TAU * DISK_RADIUS / h_rim).round() as usize).max(8);
    let theta0 = rng.gen_range(0.0..TAU / nb as f64);
    let boundary: Vec<Point> = (0..nb)
        .map(|i| {
            let t = theta0 + TAU * i as f64 / nb as f64;
            [DISK_RADIUS * t.cos(), DISK_RADIUS * t.sin()]
        })
        .collect();

    let h_of = |p: Point| density(p[0].hypot(p[1]), profile);
    let origin_guard = 1e-9 * profile.rho1;
    let sep = params.min_separation;
    let reach = sep * profile.max_spacing();

    let mut pts: Vec<Point> = boundary.clone();
    let mut spacing: Vec<f64> = vec![h_rim; nb];
    let mut buckets = Buckets::new(profile.min_spacing());
    for (i, &p) in pts.iter().enumerate() {
        buckets.insert(p, i);
    }
    let mut front: VecDeque<usize> = (0..nb).collect();
    let tries = params.candidates.max(3);
    while let Some(a) = front.pop_front() {
        let pa = pts[a];
        let ha = spacing[a];
        let phase = rng.gen_range(0.0..TAU);
        for t in 0..tries {
            let ang = phase + TAU * t as f64 / tries as f64;
            let cand = [pa[0] + ha * ang.cos(), pa[1] + ha * ang.sin()];
            let r = cand[0].hypot(cand[1]);
            let hc = h_of(cand);
            if r > DISK_RADIUS - 0.5 * hc || r < origin_guard {
                continue;
            }
            if buckets.any_within(&pts, &spacing, cand, hc, sep, reach) {
                continue;
            }
            if pts.len() - nb >= params.max_nodes {
                return Err(Error::Capacity {
                    requested: pts.len() + 1,
                    limit: params.max_nodes,
                });
            }
            let id = pts.len();
            pts.push(cand);
            spacing.push(hc);
            buckets.insert(cand, id);
            front.push_back(id);
        }
    }
    let mut interior: Vec<Point> = pts[nb..].to_vec();
    repel_near_rim(&mut interior, &boundary, profile, params.repel_sweeps);

    Ok((NodeSet::interior(interior)?, NodeSet::boundary(boundary)?))
}

/// Jacobi-style repulsion of interior nodes within three local spacings of the rim.
/// Rim nodes stay fixed and act as sources.
fn repel_near_rim(interior: &mut [Point], boundary: &[Point], profile: &DensityProfile, sweeps: usize) {
    const NEIGHBORS: usize = 7;
    const STEP: f64 = 0.1;
    for _ in 0..sweeps {
        let mut all: Vec<Point> = boundary.to_vec();
        all.extend_from_slice(interior);
        let tree = KdTree::new(&all);
        let moves: Vec<(usize, Point)> = interior
            .iter()
            .enumerate()
            .filter_map(|(i, &p)| {
                let r = p[0].hypot(p[1]);
                let h = density(r, profile);
                if r < DISK_RADIUS - 3.0 * h {
                    return None;
                }
                let mut f = [0.0, 0.0];
                for nbh in tree.nearest(p, NEIGHBORS + 1).iter().skip(1) {
                    let q = all[nbh.index];
                    let d = nbh.distance;
                    let s = (h / d).powi(3) / d;
                    f[0] += (p[0] - q[0]) * s;
                    f[1] += (p[1] - q[1]) * s;
                }
                let mut dx = [STEP * h * f[0] / NEIGHBORS as f64, STEP * h * f[1] / NEIGHBORS as f64];
                let len = dx[0].hypot(dx[1]);
                if len > 0.25 * h {
                    dx = [dx[0] * 0.25 * h / len, dx[1] * 0.25 * h / len];
                }
                let mut q = [p[0] + dx[0], p[1] + dx[1]];
                let rq = q[0].hypot(q[1]);
                let limit = DISK_RADIUS - 0.5 * h;
                if rq > limit {
                    q = [q[0] * limit / rq, q[1] * limit / rq];
                }
                Some((i, q))
            })
            .collect();
        for (i, q) in moves {
            interior[i] = q;
        }
    }
}

/// Mean node spacing proxy `1 / sqrt(N)`.
pub fn rho_mean(n: usize) -> f64 {
    1.0 / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn density_branches() {
        let p = DensityProfile::new(0.01, 0.04, 0.1, 0.2).unwrap();
        assert_eq!(density(0.0, &p), 0.01);
        assert!((density(0.3, &p) - 0.04).abs() < 1e-15);
        assert!((density(0.2, &p) - 0.025).abs() < 1e-15);
        assert_eq!(density(0.45, &p), 0.04);
    }

    #[test]
    fn profile_validation() {
        assert!(DensityProfile::new(0.0, 0.1, 0.1, 0.1).is_err());
        assert!(DensityProfile::new(0.1, 0.1, -0.1, 0.1).is_err());
        assert!(DensityProfile::new(0.1, 0.1, 0.1, 0.0).is_err());
    }

    #[test]
    fn exact_values() {
        let p = TestProblem::poisson();
        assert!((p.exact([0.01, 0.0]) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        let l = TestProblem::laplace();
        assert!((l.exact([0.5, 0.0]) - 1.0).abs() < 1e-13);
        assert_eq!(l.exact([0.0, 0.0]), 0.0);
        // theta = pi/20: cos(10 theta) = 0
        let t = PI / 20.0;
        assert!(l.exact([0.5 * t.cos(), 0.5 * t.sin()]).abs() < 1e-13);
        assert!(matches!(p.forcing([0.0, 0.0]), Err(Error::Singular { .. })));
        assert_eq!(l.forcing([0.0, 0.0]).unwrap(), 0.0);
    }

    fn fd_laplacian(f: impl Fn(Point) -> f64, p: Point, h: f64) -> f64 {
        (f([p[0] + h, p[1]]) + f([p[0] - h, p[1]]) + f([p[0], p[1] + h]) + f([p[0], p[1] - h]) - 4.0 * f(p)) / (h * h)
    }

    #[test]
    fn forcing_is_consistent_with_exact_solutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-5;
        for prob in [TestProblem::poisson(), TestProblem::laplace()] {
            let mut checked = 0;
            while checked < 1000 {
                let p: Point = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
                let r = p[0].hypot(p[1]);
                if r > 0.5 || r < 0.05 {
                    continue;
                }
                checked += 1;
                let lap = fd_laplacian(|q| prob.exact(q), p, h);
                let f = prob.forcing(p).unwrap();
                match prob.kind {
                    ProblemKind::Poisson => assert!((lap - f).abs() < 1e-4 * f.abs(), "{p:?}: {lap} vs {f}"),
                    // harmonic: compare against the size of the second derivatives, ~ 9e4 r^8
                    ProblemKind::Laplace => {
                        let scale = 1024.0 * 90.0 * r.powi(8);
                        assert!(lap.abs() < 1e-4 * scale.max(1.0), "{p:?}: {lap}")
                    }
                }
            }
        }
    }

    #[test]
    fn generator_uniform_spacing_audit() {
        let h = 0.02;
        let (d, b) = generate_disk_nodes(&DensityProfile::uniform(h).unwrap(), &GeneratorParams::new(1)).unwrap();
        let all = d.concat(&b).unwrap();
        let t = crate::nodeset::knn(&all, 1).unwrap();
        let good = (0..all.len())
            .filter(|&i| {
                let nn = t.nearest_distance(i);
                (0.7 * h..=1.5 * h).contains(&nn)
            })
            .count();
        assert!(good as f64 >= 0.99 * all.len() as f64, "{good} of {}", all.len());
        for p in d.coords() {
            assert!(p[0].hypot(p[1]) < DISK_RADIUS);
        }
    }

    #[test]
    fn generator_boundary_spacing() {
        let p = DensityProfile::new(0.01, 0.04, 0.1, 0.2).unwrap();
        let (_, b) = generate_disk_nodes(&p, &GeneratorParams::new(3)).unwrap();
        let n = b.len();
        for i in 0..n {
            let gap = distance(b.point(i), b.point((i + 1) % n));
            assert!((gap - 0.04).abs() <= 0.1 * 0.04, "gap {gap}");
            assert!((b.point(i)[0].hypot(b.point(i)[1]) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn generator_outer_spacing_tracks_rho2() {
        let p = DensityProfile::new(0.005, 0.02, 0.05, 0.15).unwrap();
        let (d, b) = generate_disk_nodes(&p, &GeneratorParams::new(8)).unwrap();
        let all = d.concat(&b).unwrap();
        let t = crate::nodeset::knn(&all, 1).unwrap();
        let outer: Vec<f64> = (0..all.len())
            .filter(|&i| {
                let q = all.point(i);
                q[0].hypot(q[1]) > p.d_lim + p.d_bl
            })
            .map(|i| t.nearest_distance(i))
            .collect();
        let mean = outer.iter().sum::<f64>() / outer.len() as f64;
        assert!((mean - p.rho2).abs() <= 0.25 * p.rho2, "mean outer spacing {mean}");
    }

    #[test]
    fn generator_is_seed_deterministic() {
        let p = DensityProfile::new(0.01, 0.04, 0.1, 0.2).unwrap();
        let a = generate_disk_nodes(&p, &GeneratorParams::new(7)).unwrap();
        let b = generate_disk_nodes(&p, &GeneratorParams::new(7)).unwrap();
        let c = generate_disk_nodes(&p, &GeneratorParams::new(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn capacity_error() {
        let p = DensityProfile::uniform(0.001).unwrap();
        let mut g = GeneratorParams::new(1);
        g.max_nodes = 1000;
        assert!(matches!(generate_disk_nodes(&p, &g), Err(Error::Capacity { .. })));
    }
}
