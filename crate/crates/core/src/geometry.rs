//! Pointsets, evaluation sets and their generators.
//!
//! Nodes are stored interior first. Every boundary node carries an outward
//! unit normal and a boundary-condition tag; PDE-tagged boundary nodes are
//! paired with extra centres placed just outside the domain.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// A point in up to three dimensions; unused coordinates are zero.
pub type Point = [f64; 3];

/// Boundary condition attached to a boundary node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BcTag {
    Dirichlet,
    Neumann,
    /// Dirichlet row plus a PDE row.
    DirichletPde,
    /// Neumann row plus a PDE row.
    NeumannPde,
}

impl BcTag {
    pub fn is_pde(self) -> bool {
        matches!(self, BcTag::DirichletPde | BcTag::NeumannPde)
    }

    pub fn is_dirichlet(self) -> bool {
        matches!(self, BcTag::Dirichlet | BcTag::DirichletPde)
    }

    pub fn code(self) -> &'static str {
        match self {
            BcTag::Dirichlet => "D",
            BcTag::Neumann => "N",
            BcTag::DirichletPde => "DP",
            BcTag::NeumannPde => "NP",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        Some(match s {
            "D" => BcTag::Dirichlet,
            "N" => BcTag::Neumann,
            "DP" => BcTag::DirichletPde,
            "NP" => BcTag::NeumannPde,
            _ => return None,
        })
    }
}

/// Collocation nodes, boundary data and extra centres.
#[derive(Debug, Clone, PartialEq)]
pub struct Pointset {
    pub dim: usize,
    /// Interior nodes first, then boundary nodes.
    pub nodes: Vec<Point>,
    pub n_interior: usize,
    /// Outward unit normal per boundary node.
    pub normals: Vec<Point>,
    /// Tag per boundary node.
    pub tags: Vec<BcTag>,
    /// Off-boundary centres, one per PDE-tagged boundary node.
    pub extra_centres: Vec<Point>,
}

impl Pointset {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.nodes.len() - self.n_interior
    }

    pub fn interior(&self) -> &[Point] {
        &self.nodes[..self.n_interior]
    }

    pub fn boundary(&self) -> &[Point] {
        &self.nodes[self.n_interior..]
    }

    /// Nodes followed by the extra centres.
    pub fn centres(&self) -> Vec<Point> {
        let mut c = self.nodes.clone();
        c.extend_from_slice(&self.extra_centres);
        c
    }

    pub fn n_pde_boundary(&self) -> usize {
        self.tags.iter().filter(|t| t.is_pde()).count()
    }

    /// Checks counts, normals, distinctness and squareness.
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::Validation(format!("dimension {}", self.dim)));
        }
        if self.n_interior > self.nodes.len() {
            return Err(Error::Validation("more interior nodes than nodes".into()));
        }
        let nb = self.n_boundary();
        if self.normals.len() != nb || self.tags.len() != nb {
            return Err(Error::Validation(format!(
                "{nb} boundary nodes but {} normals and {} tags",
                self.normals.len(),
                self.tags.len()
            )));
        }
        for (i, n) in self.normals.iter().enumerate() {
            let len = n[..self.dim].iter().map(|v| v * v).sum::<f64>().sqrt();
            if (len - 1.0).abs() > 1e-8 {
                return Err(Error::Validation(format!(
                    "normal of boundary node {i} has length {len}"
                )));
            }
        }
        for p in self.nodes.iter().chain(&self.extra_centres) {
            if p.iter().any(|v| !v.is_finite()) || p[self.dim..].iter().any(|&v| v != 0.0) {
                return Err(Error::Validation(format!("bad coordinates {p:?}")));
            }
        }
        if self.extra_centres.len() != self.n_pde_boundary() {
            return Err(Error::Validation(format!(
                "{} extra centres for {} PDE-tagged boundary nodes; the system would not be square",
                self.extra_centres.len(),
                self.n_pde_boundary()
            )));
        }
        if let Some((a, b)) = first_duplicate(&self.centres()) {
            return Err(Error::Validation(format!("duplicate centres {a} and {b}")));
        }
        Ok(())
    }

    /// Smallest distance between two distinct centres.
    pub fn min_separation(&self) -> f64 {
        let c = self.centres();
        let mut best = f64::INFINITY;
        for i in 0..c.len() {
            for j in i + 1..c.len() {
                best = best.min(dist(&c[i], &c[j]));
            }
        }
        best
    }

    /// Writes the text format documented in the README.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} {} {} {}",
            self.dim,
            self.n_interior,
            self.nodes.len(),
            self.extra_centres.len()
        );
        let coords = |s: &mut String, p: &Point| {
            for v in &p[..self.dim] {
                let _ = write!(s, "{v:?} ");
            }
        };
        for (i, p) in self.nodes.iter().enumerate() {
            coords(&mut s, p);
            if i < self.n_interior {
                s.push('I');
            } else {
                let b = i - self.n_interior;
                s.push_str(self.tags[b].code());
                for v in &self.normals[b][..self.dim] {
                    let _ = write!(s, " {v:?}");
                }
            }
            s.push('\n');
        }
        for p in &self.extra_centres {
            coords(&mut s, p);
            s.push_str("X\n");
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Parses the text format and validates the result.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty file".into(),
        })?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: hl,
                msg: format!("header: {e}"),
            })?;
        if h.len() != 4 {
            return Err(Error::Parse {
                line: hl,
                msg: "header must be `d M N n_extra`".into(),
            });
        }
        let (dim, m, n, n_extra) = (h[0], h[1], h[2], h[3]);
        if !(1..=3).contains(&dim) || m > n {
            return Err(Error::Parse {
                line: hl,
                msg: format!("inconsistent header d={dim} M={m} N={n}"),
            });
        }
        let num = |line: usize, t: &str| -> Result<f64> {
            t.parse::<f64>().map_err(|e| Error::Parse {
                line,
                msg: format!("`{t}`: {e}"),
            })
        };
        let mut ps = Pointset {
            dim,
            nodes: Vec::with_capacity(n),
            n_interior: m,
            normals: Vec::new(),
            tags: Vec::new(),
            extra_centres: Vec::with_capacity(n_extra),
        };
        for k in 0..n + n_extra {
            let (ln, line) = lines.next().ok_or(Error::Parse {
                line: hl,
                msg: format!("expected {} point lines, found {k}", n + n_extra),
            })?;
            let tok: Vec<&str> = line.split_whitespace().collect();
            if tok.len() < dim + 1 {
                return Err(Error::Parse {
                    line: ln,
                    msg: "too few fields".into(),
                });
            }
            let mut p = [0.0; 3];
            for a in 0..dim {
                p[a] = num(ln, tok[a])?;
            }
            let tag = tok[dim];
            let expect = if k < m {
                "I"
            } else if k < n {
                "boundary"
            } else {
                "X"
            };
            match (expect, tag) {
                ("I", "I") | ("X", "X") => {
                    if tok.len() != dim + 1 {
                        return Err(Error::Parse {
                            line: ln,
                            msg: "unexpected trailing fields".into(),
                        });
                    }
                }
                ("boundary", t) if BcTag::from_code(t).is_some() => {
                    if tok.len() != 2 * dim + 1 {
                        return Err(Error::Parse {
                            line: ln,
                            msg: format!("boundary node needs {dim} normal components"),
                        });
                    }
                    let mut nv = [0.0; 3];
                    for a in 0..dim {
                        nv[a] = num(ln, tok[dim + 1 + a])?;
                    }
                    ps.tags.push(BcTag::from_code(t).expect("checked"));
                    ps.normals.push(nv);
                }
                _ => {
                    return Err(Error::Parse {
                        line: ln,
                        msg: format!("tag `{tag}` where {expect} was expected"),
                    })
                }
            }
            if k < n {
                ps.nodes.push(p);
            } else {
                ps.extra_centres.push(p);
            }
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::Parse {
                line: ln,
                msg: "trailing content after the declared points".into(),
            });
        }
        ps.validate()?;
        Ok(ps)
    }
}

/// Reads and validates a pointset file.
pub fn load_pointset(path: &Path) -> Result<Pointset> {
    let text = std::fs::read_to_string(path)?;
    Pointset::from_text(&text)
}

pub(crate) fn dist(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Indices of the first pair of coincident points, via a sort on x.
fn first_duplicate(pts: &[Point]) -> Option<(usize, usize)> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| pts[a].partial_cmp(&pts[b]).expect("finite"));
    idx.windows(2)
        .find(|w| pts[w[0]] == pts[w[1]])
        .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
}

/// Domain shapes used for evaluation sets and scattered fills.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    /// Axis-aligned box `[lo, hi]` in `dim` dimensions.
    Box { lo: Point, hi: Point, dim: usize },
    /// Disc centred at the origin.
    Disc { radius: f64 },
}

impl Domain {
    pub fn unit_square() -> Self {
        Domain::Box {
            lo: [0.0; 3],
            hi: [1.0, 1.0, 0.0],
            dim: 2,
        }
    }

    pub fn unit_cube() -> Self {
        Domain::Box {
            lo: [0.0; 3],
            hi: [1.0; 3],
            dim: 3,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { dim, .. } => *dim,
            Domain::Disc { .. } => 2,
        }
    }

    /// Closed-domain membership.
    pub fn contains(&self, p: &Point) -> bool {
        match self {
            Domain::Box { lo, hi, dim } => (0..*dim).all(|a| p[a] >= lo[a] && p[a] <= hi[a]),
            Domain::Disc { radius } => p[0] * p[0] + p[1] * p[1] <= radius * radius,
        }
    }

    fn bounds(&self) -> (Point, Point) {
        match self {
            Domain::Box { lo, hi, .. } => (*lo, *hi),
            Domain::Disc { radius } => ([-radius, -radius, 0.0], [*radius, *radius, 0.0]),
        }
    }

    /// Distance from `p` (assumed inside) to the boundary.
    pub fn depth(&self, p: &Point) -> f64 {
        match self {
            Domain::Box { lo, hi, dim } => (0..*dim)
                .map(|a| (p[a] - lo[a]).min(hi[a] - p[a]))
                .fold(f64::INFINITY, f64::min),
            Domain::Disc { radius } => radius - (p[0] * p[0] + p[1] * p[1]).sqrt(),
        }
    }

    /// `n` shifted-Halton points with depth at least `margin`.
    pub fn halton_fill(&self, n: usize, margin: f64, seed: u64) -> Vec<Point> {
        let dim = self.dim();
        let (lo, hi) = self.bounds();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: Point = [rng.random(), rng.random(), rng.random()];
        let mut out = Vec::with_capacity(n);
        let mut k = 1u64;
        while out.len() < n {
            let mut p = [0.0; 3];
            for a in 0..dim {
                let u = (radical_inverse(k, HALTON_BASES[a]) + shift[a]).fract();
                p[a] = lo[a] + u * (hi[a] - lo[a]);
            }
            k += 1;
            if self.contains(&p) && self.depth(&p) >= margin {
                out.push(p);
            }
            assert!(k < 1_000_000_000, "Halton rejection is not terminating");
        }
        out
    }
}

const HALTON_BASES: [u64; 3] = [2, 3, 5];

/// Van der Corput radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// Points where errors and residuals are measured.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSet {
    pub points: Vec<Point>,
}

impl EvaluationSet {
    /// Halton points inside `domain`, skipping any that coincide with `avoid`.
    pub fn sample(domain: &Domain, n: usize, seed: u64, avoid: &[Point]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("evaluation set needs at least one point".into()));
        }
        let mut points = Vec::with_capacity(n);
        let mut batch = n;
        let mut offset_seed = seed;
        while points.len() < n {
            for p in domain.halton_fill(batch, 0.0, offset_seed) {
                if points.len() < n && avoid.iter().all(|q| dist(&p, q) > 1e-10) {
                    points.push(p);
                }
            }
            offset_seed = offset_seed.wrapping_add(0x9E37_79B9);
            batch = n - points.len();
        }
        Ok(EvaluationSet { points })
    }
}

/// Largest distance from a probe point to its nearest node.
pub fn fill_distance(ps: &Pointset, probe: &EvaluationSet) -> f64 {
    let near = par::map_indexed(Execution::best(), probe.points.len(), |i| {
        ps.nodes
            .iter()
            .map(|n| dist(n, &probe.points[i]))
            .fold(f64::INFINITY, f64::min)
    });
    near.into_iter().fold(0.0, f64::max)
}

/// Tensor-grid domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridDomain {
    UnitSquare,
    UnitCube,
}

/// Uniform grid with `n` nodes per side; every boundary node is Dirichlet.
pub fn generate_grid(domain: GridDomain, n: usize) -> Result<Pointset> {
    if n < 3 {
        return Err(Error::Config(format!("grid needs n >= 3 per side, got {n}")));
    }
    let dim = match domain {
        GridDomain::UnitSquare => 2,
        GridDomain::UnitCube => 3,
    };
    let h = 1.0 / (n - 1) as f64;
    let total = n.pow(dim as u32);
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    let mut normals = Vec::new();
    for idx in 0..total {
        let mut p = [0.0; 3];
        let mut nrm = [0.0; 3];
        let mut rem = idx;
        for a in 0..dim {
            let k = rem % n;
            rem /= n;
            p[a] = k as f64 * h;
            if k == 0 {
                nrm[a] = -1.0;
            } else if k == n - 1 {
                nrm[a] = 1.0;
            }
        }
        let len = nrm.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len == 0.0 {
            interior.push(p);
        } else {
            boundary.push(p);
            normals.push(nrm.map(|v| v / len));
        }
    }
    let n_interior = interior.len();
    let nb = boundary.len();
    interior.extend(boundary);
    let ps = Pointset {
        dim,
        nodes: interior,
        n_interior,
        normals,
        tags: vec![BcTag::Dirichlet; nb],
        extra_centres: Vec::new(),
    };
    ps.validate()?;
    Ok(ps)
}

/// Halton interior fill of a disc plus an equispaced boundary ring.
pub fn generate_disc(radius: f64, n_interior: usize, n_boundary: usize, seed: u64) -> Result<Pointset> {
    if !(radius > 0.0) || n_boundary == 0 {
        return Err(Error::Config("disc needs radius > 0 and boundary nodes".into()));
    }
    let hb = 2.0 * std::f64::consts::PI * radius / n_boundary as f64;
    // Interior nodes keep a quarter boundary spacing off the circle. Accuracy
    // near steep boundary data is sensitive to this gap.
    let margin = 0.25 * hb;
    let mut nodes = Domain::Disc { radius }.halton_fill(n_interior, margin, seed);
    let mut normals = Vec::with_capacity(n_boundary);
    for k in 0..n_boundary {
        let th = 2.0 * std::f64::consts::PI * k as f64 / n_boundary as f64;
        let p = [radius * th.cos(), radius * th.sin(), 0.0];
        let len = (p[0] * p[0] + p[1] * p[1]).sqrt();
        nodes.push(p);
        normals.push([p[0] / len, p[1] / len, 0.0]);
    }
    let ps = Pointset {
        dim: 2,
        nodes,
        n_interior,
        normals,
        tags: vec![BcTag::Dirichlet; n_boundary],
        extra_centres: Vec::new(),
    };
    ps.validate()?;
    Ok(ps)
}

/// Rectangular mold floor plan with an injection slit on the left edge.
///
/// The slit `x = 0, y in [inlet_lo, inlet_hi]` is Dirichlet (`u = 1`), the
/// right edge is the frozen front (`u = 0`), the remaining edges are walls
/// with a homogeneous Neumann condition. The two slit endpoints are the
/// singular nodes: they carry a Dirichlet row only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoldSpec {
    pub length: f64,
    pub width: f64,
    pub inlet_lo: f64,
    pub inlet_hi: f64,
    /// Target spacing between boundary nodes.
    pub boundary_spacing: f64,
    pub n_interior: usize,
    /// Enforce the PDE on every non-singular boundary node.
    pub pdebc: bool,
    pub seed: u64,
}

impl Default for MoldSpec {
    fn default() -> Self {
        MoldSpec {
            length: 6.0,
            width: 3.0,
            inlet_lo: 1.0,
            inlet_hi: 2.0,
            boundary_spacing: 18.0 / 166.0,
            n_interior: 986,
            pdebc: true,
            seed: 7,
        }
    }
}

impl MoldSpec {
    pub fn domain(&self) -> Domain {
        Domain::Box {
            lo: [0.0; 3],
            hi: [self.length, self.width, 0.0],
            dim: 2,
        }
    }

    /// True if `p` lies on the injection slit.
    pub fn on_inlet(&self, p: &Point) -> bool {
        let tol = 1e-9 * self.width;
        p[0].abs() <= tol && p[1] >= self.inlet_lo - tol && p[1] <= self.inlet_hi + tol
    }

    /// True if `p` lies on the front.
    pub fn on_front(&self, p: &Point) -> bool {
        (p[0] - self.length).abs() <= 1e-9 * self.length
    }

    /// The two slit endpoints (bottom, top).
    pub fn singular_points(&self) -> [Point; 2] {
        [[0.0, self.inlet_lo, 0.0], [0.0, self.inlet_hi, 0.0]]
    }
}

struct Segment {
    a: [f64; 2],
    b: [f64; 2],
    normal: [f64; 2],
    kind: SegmentKind,
}

#[derive(Clone, Copy, PartialEq)]
enum SegmentKind {
    Wall,
    Front,
    Inlet,
}

pub fn generate_mold(spec: &MoldSpec) -> Result<Pointset> {
    let (l, w) = (spec.length, spec.width);
    if !(l > 0.0 && w > 0.0 && spec.boundary_spacing > 0.0)
        || !(0.0 < spec.inlet_lo && spec.inlet_lo < spec.inlet_hi && spec.inlet_hi < w)
    {
        return Err(Error::Config("invalid mold geometry".into()));
    }
    let segs = [
        Segment { a: [0.0, 0.0], b: [l, 0.0], normal: [0.0, -1.0], kind: SegmentKind::Wall },
        Segment { a: [l, 0.0], b: [l, w], normal: [1.0, 0.0], kind: SegmentKind::Front },
        Segment { a: [l, w], b: [0.0, w], normal: [0.0, 1.0], kind: SegmentKind::Wall },
        Segment { a: [0.0, w], b: [0.0, spec.inlet_hi], normal: [-1.0, 0.0], kind: SegmentKind::Wall },
        Segment {
            a: [0.0, spec.inlet_hi],
            b: [0.0, spec.inlet_lo],
            normal: [-1.0, 0.0],
            kind: SegmentKind::Inlet,
        },
        Segment { a: [0.0, spec.inlet_lo], b: [0.0, 0.0], normal: [-1.0, 0.0], kind: SegmentKind::Wall },
    ];
    let mut boundary = Vec::new();
    let mut normals = Vec::new();
    let mut tags = Vec::new();
    let mut extras = Vec::new();
    for s in &segs {
        let len = ((s.b[0] - s.a[0]).powi(2) + (s.b[1] - s.a[1]).powi(2)).sqrt();
        let n = ((len / spec.boundary_spacing).round() as usize).max(1);
        let h = len / n as f64;
        let params: Vec<f64> = if s.kind == SegmentKind::Inlet {
            (0..=n).map(|k| k as f64 / n as f64).collect()
        } else {
            (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect()
        };
        let last = params.len() - 1;
        for (k, &t) in params.iter().enumerate() {
            let p = [s.a[0] + t * (s.b[0] - s.a[0]), s.a[1] + t * (s.b[1] - s.a[1]), 0.0];
            let singular = s.kind == SegmentKind::Inlet && (k == 0 || k == last);
            let tag = match (s.kind, singular, spec.pdebc) {
                (SegmentKind::Inlet, true, _) => BcTag::Dirichlet,
                (SegmentKind::Wall, _, false) => BcTag::Neumann,
                (SegmentKind::Wall, _, true) => BcTag::NeumannPde,
                (_, _, false) => BcTag::Dirichlet,
                (_, _, true) => BcTag::DirichletPde,
            };
            if tag.is_pde() {
                extras.push([p[0] + h * s.normal[0], p[1] + h * s.normal[1], 0.0]);
            }
            boundary.push(p);
            normals.push([s.normal[0], s.normal[1], 0.0]);
            tags.push(tag);
        }
    }
    let margin = 0.5 * spec.boundary_spacing;
    let mut nodes = spec.domain().halton_fill(spec.n_interior, margin, spec.seed);
    nodes.extend(boundary);
    let ps = Pointset {
        dim: 2,
        nodes,
        n_interior: spec.n_interior,
        normals,
        tags,
        extra_centres: extras,
    };
    ps.validate()?;
    Ok(ps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        let g = generate_grid(GridDomain::UnitSquare, 23).unwrap();
        assert_eq!((g.n_nodes(), g.n_interior), (529, 441));
        let g = generate_grid(GridDomain::UnitSquare, 3).unwrap();
        assert_eq!((g.n_nodes(), g.n_interior), (9, 1));
        let c = generate_grid(GridDomain::UnitCube, 13).unwrap();
        assert_eq!((c.n_nodes(), c.n_boundary()), (2197, 866));
        assert!(generate_grid(GridDomain::UnitSquare, 2).is_err());
    }

    #[test]
    fn interior_nodes_come_first() {
        let g = generate_grid(GridDomain::UnitSquare, 6).unwrap();
        let dom = Domain::unit_square();
        assert!(g.interior().iter().all(|p| dom.depth(p) > 0.0));
        assert!(g.boundary().iter().all(|p| dom.depth(p) == 0.0));
    }

    #[test]
    fn disc_counts_and_normals() {
        let d = generate_disc(std::f64::consts::FRAC_PI_2 - 0.1, 715, 80, 3).unwrap();
        assert_eq!((d.n_nodes(), d.n_boundary()), (795, 80));
        for (p, n) in d.boundary().iter().zip(&d.normals) {
            let len = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert_eq!(n[0], p[0] / len);
            assert_eq!(n[1], p[1] / len);
        }
        let small = generate_disc(1.0, 0, 4, 0).unwrap();
        let expect = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (p, e) in small.nodes.iter().zip(expect) {
            assert!((p[0] - e[0]).abs() < 1e-15 && (p[1] - e[1]).abs() < 1e-15);
        }
        assert_eq!(d, generate_disc(std::f64::consts::FRAC_PI_2 - 0.1, 715, 80, 3).unwrap());
    }

    #[test]
    fn fill_distance_examples() {
        let single = Pointset {
            dim: 2,
            nodes: vec![[0.0; 3]],
            n_interior: 1,
            normals: vec![],
            tags: vec![],
            extra_centres: vec![],
        };
        let probe = EvaluationSet {
            points: vec![[1.0, 0.0, 0.0]],
        };
        assert_eq!(fill_distance(&single, &probe), 1.0);

        let probe = EvaluationSet::sample(&Domain::unit_square(), 20000, 1, &[]).unwrap();
        let h10 = fill_distance(&generate_grid(GridDomain::UnitSquare, 11).unwrap(), &probe);
        let h20 = fill_distance(&generate_grid(GridDomain::UnitSquare, 21).unwrap(), &probe);
        let ideal = 0.5f64.sqrt() / 10.0;
        assert!((h10 - ideal).abs() < 0.05 * ideal, "{h10} vs {ideal}");
        assert!((h10 / h20 - 2.0).abs() < 0.1, "{}", h10 / h20);
    }

    #[test]
    fn disc_fill_distance_shrinks() {
        let probe = EvaluationSet::sample(&Domain::Disc { radius: 1.0 }, 5000, 9, &[]).unwrap();
        let a = fill_distance(&generate_disc(1.0, 100, 40, 1).unwrap(), &probe);
        let b = fill_distance(&generate_disc(1.0, 400, 80, 1).unwrap(), &probe);
        assert!(b < a);
    }

    #[test]
    fn mold_structure() {
        let spec = MoldSpec::default();
        let ps = generate_mold(&spec).unwrap();
        assert_eq!(ps.n_boundary(), 166);
        assert_eq!(ps.n_nodes(), 1152);
        assert_eq!(ps.extra_centres.len(), 164);
        let singular: Vec<_> = ps
            .boundary()
            .iter()
            .zip(&ps.tags)
            .filter(|(_, t)| !t.is_pde())
            .map(|(p, _)| *p)
            .collect();
        assert_eq!(singular.len(), 2);
        for s in spec.singular_points() {
            assert!(singular.contains(&s));
        }
        let no_pde = generate_mold(&MoldSpec { pdebc: false, ..spec }).unwrap();
        assert!(no_pde.extra_centres.is_empty());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let ps = generate_mold(&MoldSpec {
            n_interior: 50,
            boundary_spacing: 0.5,
            ..MoldSpec::default()
        })
        .unwrap();
        let back = Pointset::from_text(&ps.to_text()).unwrap();
        assert_eq!(ps, back);
        let cube = generate_grid(GridDomain::UnitCube, 4).unwrap();
        assert_eq!(cube, Pointset::from_text(&cube.to_text()).unwrap());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "2 1 2 0\n0.5 0.5 I\n1.0 0.0 Q 1 0\n";
        match Pointset::from_text(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let dup = "2 1 2 0\n0.5 0.5 I\n0.5 0.5 D 1 0\n";
        assert!(matches!(Pointset::from_text(dup), Err(Error::Validation(_))));
        let normal = "2 1 2 0\n0.5 0.5 I\n1 0.5 D 1.1 0\n";
        assert!(matches!(Pointset::from_text(normal), Err(Error::Validation(_))));
        let square = "2 1 2 0\n0.5 0.5 I\n1 0.5 DP 1 0\n";
        assert!(matches!(Pointset::from_text(square), Err(Error::Validation(_))));
        assert!(matches!(Pointset::from_text("2 1 2 0\n0.5 x I\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn evaluation_set_avoids_nodes() {
        let g = generate_grid(GridDomain::UnitSquare, 5).unwrap();
        let e = EvaluationSet::sample(&Domain::unit_square(), 300, 4, &g.nodes).unwrap();
        assert_eq!(e.points.len(), 300);
        assert!(e.points.iter().all(|p| g.nodes.iter().all(|q| dist(p, q) > 1e-10)));
        assert_eq!(EvaluationSet::sample(&Domain::unit_square(), 1, 4, &[]).unwrap().points.len(), 1);
    }
}
