//! Chain complexes of lattice graphs over Z_q.
//!
//! `boundaries[k]` is the matrix of the boundary map from (k+1)-chains to
//! k-chains, with rows indexed by k-cells and columns by (k+1)-cells. Entries
//! are kept as small signed integers and reduced mod q on demand. Dimension
//! lists returned by [`homology_dims`] and [`cohomology_dims`] run from the
//! top dimension down to 0.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::Rng;
use serde::Serialize;

use crate::algebra::{
    check_modulus, enumerate_span, image_basis, in_span, kernel_basis, orthogonal_complement,
    rank, reduce, ZqMatrix, ZqVector,
};
use crate::error::{Error, Result};

/// Integer incidence matrix with entries accumulated as i8.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SignedMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

impl SignedMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> i8 {
        self.data[r * self.cols + c]
    }

    /// Adds `v` to an entry; coincident cells on small tori cancel this way.
    pub fn add(&mut self, r: usize, c: usize, v: i8) {
        self.data[r * self.cols + c] += v;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    pub fn to_zq(&self, q: u32) -> Result<ZqMatrix> {
        let rows: Vec<Vec<i64>> = (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c) as i64).collect())
            .collect();
        if self.rows == 0 {
            return ZqMatrix::zeros(0, self.cols, q);
        }
        ZqMatrix::from_rows(&rows, q)
    }

    /// Nonzero entries of a column as (row, value).
    pub fn column_entries(&self, c: usize) -> Vec<(usize, i8)> {
        (0..self.rows)
            .filter_map(|r| {
                let v = self.get(r, c);
                (v != 0).then_some((r, v))
            })
            .collect()
    }

    /// Nonzero entries of a row as (column, value).
    pub fn row_entries(&self, r: usize) -> Vec<(usize, i8)> {
        (0..self.cols)
            .filter_map(|c| {
                let v = self.get(r, c);
                (v != 0).then_some((c, v))
            })
            .collect()
    }

    /// Image of a chain, reduced mod q.
    pub fn apply(&self, chain: &[u8], q: u32) -> ZqVector {
        (0..self.rows)
            .map(|r| {
                let s: i64 = (0..self.cols)
                    .map(|c| self.get(r, c) as i64 * chain[c] as i64)
                    .sum();
                reduce(s, q)
            })
            .collect()
    }

    fn scale_rows_cols(&self, row_signs: &[i8], col_signs: &[i8]) -> Self {
        let mut m = self.clone();
        for r in 0..self.rows {
            for c in 0..self.cols {
                m.data[r * self.cols + c] *= row_signs[r] * col_signs[c];
            }
        }
        m
    }
}

/// Which builder produced a complex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "lattice", rename_all = "snake_case")]
pub enum ComplexKind {
    Custom,
    Graph { rows: usize, cols: usize },
    Grid2d { rows: usize, cols: usize, holes: Vec<usize> },
    Torus2d { l1: usize, l2: usize },
    Cube3d { l: usize },
    Torus3d { l: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainComplex {
    q: u32,
    kind: ComplexKind,
    labels: Vec<Vec<String>>,
    boundaries: Vec<SignedMatrix>,
}

impl ChainComplex {
    /// Checks shapes; `labels[k]` names the k-cells.
    pub fn new(
        q: u32,
        kind: ComplexKind,
        labels: Vec<Vec<String>>,
        boundaries: Vec<SignedMatrix>,
    ) -> Result<Self> {
        check_modulus(q)?;
        let expected = labels.len().saturating_sub(1);
        if boundaries.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{} boundary maps for {} cell dimensions",
                boundaries.len(),
                labels.len()
            )));
        }
        for (k, b) in boundaries.iter().enumerate() {
            if b.rows() != labels[k].len() || b.cols() != labels[k + 1].len() {
                return Err(Error::DimensionMismatch(format!(
                    "boundary {} is {}x{}, cells are {} and {}",
                    k + 1,
                    b.rows(),
                    b.cols(),
                    labels[k].len(),
                    labels[k + 1].len()
                )));
            }
        }
        Ok(Self {
            q,
            kind,
            labels,
            boundaries,
        })
    }

    pub fn empty(q: u32) -> Result<Self> {
        Self::new(q, ComplexKind::Custom, Vec::new(), Vec::new())
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn kind(&self) -> &ComplexKind {
        &self.kind
    }

    /// Top cell dimension, or `None` for the empty complex.
    pub fn dimension(&self) -> Option<usize> {
        self.labels.len().checked_sub(1)
    }

    /// Cell counts from dimension 0 up.
    pub fn cell_counts(&self) -> Vec<usize> {
        self.labels.iter().map(Vec::len).collect()
    }

    pub fn labels(&self, dim: usize) -> &[String] {
        &self.labels[dim]
    }

    /// The boundary map from `dim`-chains to (`dim`-1)-chains, `dim >= 1`.
    pub fn boundary(&self, dim: usize) -> &SignedMatrix {
        &self.boundaries[dim - 1]
    }

    pub fn boundary_zq(&self, dim: usize) -> Result<ZqMatrix> {
        self.boundary(dim).to_zq(self.q)
    }

    /// The coboundary d_dim, the transpose of the boundary map.
    pub fn coboundary_zq(&self, dim: usize) -> Result<ZqMatrix> {
        Ok(self.boundary_zq(dim)?.transpose())
    }

    pub fn cell_index(&self, dim: usize, label: &str) -> Option<usize> {
        self.labels[dim].iter().position(|l| l == label)
    }

    /// The same complex with modulus `q`.
    pub fn with_modulus(&self, q: u32) -> Result<Self> {
        check_modulus(q)?;
        Ok(Self { q, ..self.clone() })
    }

    /// Checks that every composite of consecutive boundary maps vanishes mod q.
    pub fn validate(&self) -> Result<()> {
        for k in 1..self.boundaries.len() {
            let lower = self.boundaries[k - 1].to_zq(self.q)?;
            let upper = self.boundaries[k].to_zq(self.q)?;
            if !lower.mul(&upper)?.is_zero() {
                return Err(Error::BoundaryConditionViolated {
                    upper: k + 1,
                    lower: k,
                });
            }
        }
        Ok(())
    }

    /// Flips the orientation of every cell with probability one half.
    pub fn reoriented<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let signs: Vec<Vec<i8>> = self
            .labels
            .iter()
            .map(|cells| {
                cells
                    .iter()
                    .map(|_| if rng.gen_bool(0.5) { -1 } else { 1 })
                    .collect()
            })
            .collect();
        let boundaries = self
            .boundaries
            .iter()
            .enumerate()
            .map(|(k, b)| b.scale_rows_cols(&signs[k], &signs[k + 1]))
            .collect();
        Self {
            boundaries,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            schema_version: u32,
            q: u32,
            kind: &'a ComplexKind,
            cell_counts: Vec<usize>,
            labels: &'a [Vec<String>],
            boundaries: Vec<Vec<Vec<i8>>>,
        }
        let boundaries = self
            .boundaries
            .iter()
            .map(|b| (0..b.rows()).map(|r| (0..b.cols()).map(|c| b.get(r, c)).collect()).collect())
            .collect();
        serde_json::to_string_pretty(&Doc {
            schema_version: 1,
            q: self.q,
            kind: &self.kind,
            cell_counts: self.cell_counts(),
            labels: &self.labels,
            boundaries,
        })
        .expect("complex serializes")
    }

    /// Graphviz rendering of the 1-skeleton.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph complex {\n");
        if let Some(vertices) = self.labels.first() {
            for v in vertices {
                let _ = writeln!(s, "  \"{v}\";");
            }
        }
        if self.labels.len() > 1 {
            let b = &self.boundaries[0];
            for (e, label) in self.labels[1].iter().enumerate() {
                let entries = b.column_entries(e);
                let tail = entries.iter().find(|(_, v)| *v < 0).map(|(r, _)| *r);
                let head = entries.iter().find(|(_, v)| *v > 0).map(|(r, _)| *r);
                match (tail, head) {
                    (Some(t), Some(h)) => {
                        let _ = writeln!(
                            s,
                            "  \"{}\" -> \"{}\" [label=\"{label}\"];",
                            self.labels[0][t], self.labels[0][h]
                        );
                    }
                    _ => {
                        let _ = writeln!(s, "  \"{label}\" [shape=point];");
                    }
                }
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Homology dimensions, top dimension first.
pub fn homology_dims(c: &ChainComplex) -> Result<Vec<usize>> {
    c.validate()?;
    let counts = c.cell_counts();
    let ranks = c
        .boundaries
        .iter()
        .map(|b| rank(&b.to_zq(c.q)?))
        .collect::<Result<Vec<_>>>()?;
    if ranks.is_empty() && !counts.is_empty() && !crate::algebra::is_prime(c.q) {
        return Err(Error::CompositeModulus { q: c.q });
    }
    let mut dims: Vec<usize> = (0..counts.len())
        .map(|i| {
            let down = if i == 0 { 0 } else { ranks[i - 1] };
            let up = ranks.get(i).copied().unwrap_or(0);
            counts[i] - down - up
        })
        .collect();
    dims.reverse();
    Ok(dims)
}

/// Cohomology dimensions from the transposed maps, top dimension first.
pub fn cohomology_dims(c: &ChainComplex) -> Result<Vec<usize>> {
    c.validate()?;
    let counts = c.cell_counts();
    let ranks = c
        .boundaries
        .iter()
        .map(|b| rank(&b.transpose().to_zq(c.q)?))
        .collect::<Result<Vec<_>>>()?;
    if ranks.is_empty() && !counts.is_empty() && !crate::algebra::is_prime(c.q) {
        return Err(Error::CompositeModulus { q: c.q });
    }
    // dim ker d_(i+1) - dim im d_i, where d_k is the transpose of the k-th boundary.
    let mut dims: Vec<usize> = (0..counts.len())
        .map(|i| {
            let kernel = counts[i] - ranks.get(i).copied().unwrap_or(0);
            let image = if i == 0 { 0 } else { ranks[i - 1] };
            kernel - image
        })
        .collect();
    dims.reverse();
    Ok(dims)
}

fn require_size(name: &str, value: usize, min: usize) -> Result<()> {
    if value < min {
        Err(Error::DimensionMismatch(format!(
            "{name} = {value} is below the minimum of {min}"
        )))
    } else {
        Ok(())
    }
}

fn vertex_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

/// Grid edges directed from the lower to the higher vertex index, sorted by
/// (tail, head). Returns the edges and an index lookup.
fn grid_edges(rows: usize, cols: usize) -> (Vec<(usize, usize)>, HashMap<(usize, usize), usize>) {
    let mut edges = Vec::new();
    for i in 0..rows * cols {
        let (r, c) = (i / cols, i % cols);
        if c + 1 < cols {
            edges.push((i, i + 1));
        }
        if r + 1 < rows {
            edges.push((i, i + cols));
        }
    }
    edges.sort_unstable();
    let index = edges.iter().enumerate().map(|(k, &e)| (e, k)).collect();
    (edges, index)
}

fn incidence(vertices: usize, edges: &[(usize, usize)]) -> SignedMatrix {
    let mut b = SignedMatrix::zeros(vertices, edges.len());
    for (k, &(t, h)) in edges.iter().enumerate() {
        b.add(t, k, -1);
        b.add(h, k, 1);
    }
    b
}

/// The rows x cols grid graph as a 1-complex. Vertices are numbered row by
/// row; edges point from the lower index to the higher and are labelled
/// `a{tail},{head}`.
pub fn build_grid_1complex(rows: usize, cols: usize, q: u32) -> Result<ChainComplex> {
    require_size("rows", rows, 2)?;
    require_size("cols", cols, 2)?;
    let n = rows * cols;
    let (edges, _) = grid_edges(rows, cols);
    let labels = vec![
        vertex_labels(n),
        edges.iter().map(|(t, h)| format!("a{t},{h}")).collect(),
    ];
    ChainComplex::new(
        q,
        ComplexKind::Graph { rows, cols },
        labels,
        vec![incidence(n, &edges)],
    )
}

/// The grid as a 2-complex: every inner square except the holes is a face,
/// oriented clockwise. Face `s{k}` has top-left vertex (k / (cols-1),
/// k % (cols-1)); removed faces keep their numbers out of use.
pub fn build_grid_2complex(rows: usize, cols: usize, q: u32, holes: &[usize]) -> Result<ChainComplex> {
    require_size("rows", rows, 2)?;
    require_size("cols", cols, 2)?;
    let faces_total = (rows - 1) * (cols - 1);
    if let Some(&bad) = holes.iter().find(|&&h| h >= faces_total) {
        return Err(Error::InvalidHoleIndex {
            index: bad,
            faces: faces_total,
        });
    }
    let n = rows * cols;
    let (edges, index) = grid_edges(rows, cols);
    let faces: Vec<usize> = (0..faces_total).filter(|f| !holes.contains(f)).collect();
    let mut b2 = SignedMatrix::zeros(edges.len(), faces.len());
    for (j, &f) in faces.iter().enumerate() {
        let tl = (f / (cols - 1)) * cols + f % (cols - 1);
        let (tr, bl, br) = (tl + 1, tl + cols, tl + cols + 1);
        b2.add(index[&(tl, tr)], j, 1);
        b2.add(index[&(tr, br)], j, 1);
        b2.add(index[&(bl, br)], j, -1);
        b2.add(index[&(tl, bl)], j, -1);
    }
    let mut sorted_holes = holes.to_vec();
    sorted_holes.sort_unstable();
    sorted_holes.dedup();
    let labels = vec![
        vertex_labels(n),
        edges.iter().map(|(t, h)| format!("a{t},{h}")).collect(),
        faces.iter().map(|f| format!("s{f}")).collect(),
    ];
    ChainComplex::new(
        q,
        ComplexKind::Grid2d {
            rows,
            cols,
            holes: sorted_holes,
        },
        labels,
        vec![incidence(n, &edges), b2],
    )
}

/// Axis-aligned cubical complex on a box of vertices, optionally periodic.
///
/// Vertex index is `x0 + W0 (x1 + W1 x2 ...)`. Cells of each dimension are
/// grouped by their set of spanning axes (axis sets in the order listed by
/// `axis_sets`) and then by base vertex. A cell spanning axes a_0 < a_1 < ...
/// has boundary sum_j (-1)^j (upper_j - lower_j); `sign(axes)` rescales the
/// orientation of individual cell families.
struct Cubical {
    widths: Vec<usize>,
    periodic: bool,
}

impl Cubical {
    fn vertex_count(&self) -> usize {
        self.widths.iter().product()
    }

    fn coords(&self, mut v: usize) -> Vec<usize> {
        self.widths
            .iter()
            .map(|&w| {
                let c = v % w;
                v /= w;
                c
            })
            .collect()
    }

    fn index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.widths)
            .rev()
            .fold(0, |acc, (&c, &w)| acc * w + c)
    }

    /// Base vertices of cells spanning `axes`.
    fn bases(&self, axes: &[usize]) -> Vec<usize> {
        (0..self.vertex_count())
            .filter(|&v| {
                let c = self.coords(v);
                self.periodic || axes.iter().all(|&a| c[a] + 1 < self.widths[a])
            })
            .collect()
    }

    fn shifted(&self, v: usize, axis: usize) -> usize {
        let mut c = self.coords(v);
        c[axis] = (c[axis] + 1) % self.widths[axis];
        self.index(&c)
    }

    /// Cells per dimension as (axes, base) lists, and boundary matrices.
    fn build(
        &self,
        axis_sets: &[Vec<Vec<usize>>],
        sign: impl Fn(&[usize]) -> i8,
    ) -> (Vec<Vec<(Vec<usize>, usize)>>, Vec<SignedMatrix>) {
        let cells: Vec<Vec<(Vec<usize>, usize)>> = axis_sets
            .iter()
            .map(|sets| {
                sets.iter()
                    .flat_map(|axes| self.bases(axes).into_iter().map(move |b| (axes.clone(), b)))
                    .collect()
            })
            .collect();
        let lookup: Vec<HashMap<(Vec<usize>, usize), usize>> = cells
            .iter()
            .map(|list| list.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect())
            .collect();
        let mut boundaries = Vec::new();
        for k in 1..cells.len() {
            let mut m = SignedMatrix::zeros(cells[k - 1].len(), cells[k].len());
            for (col, (axes, base)) in cells[k].iter().enumerate() {
                let outer = sign(axes);
                for (j, &a) in axes.iter().enumerate() {
                    let face_axes: Vec<usize> = axes.iter().copied().filter(|&x| x != a).collect();
                    let parity: i8 = if j % 2 == 0 { 1 } else { -1 };
                    let s = parity * outer * sign(&face_axes);
                    let upper = lookup[k - 1][&(face_axes.clone(), self.shifted(*base, a))];
                    let lower = lookup[k - 1][&(face_axes, *base)];
                    m.add(upper, col, s);
                    m.add(lower, col, -s);
                }
            }
            boundaries.push(m);
        }
        (cells, boundaries)
    }
}

/// The L1 x L2 torus. Vertex (r, c) has index r*L2 + c. Horizontal edges
/// (r, c) -> (r, c+1) come first with index r*L2 + c, then vertical edges
/// (r, c) -> (r+1, c) with index n + r*L2 + c; wrap-around edges point back
/// to row or column 0. Face (r, c) is oriented clockwise.
pub fn build_torus_2complex(l1: usize, l2: usize, q: u32) -> Result<ChainComplex> {
    require_size("l1", l1, 2)?;
    require_size("l2", l2, 2)?;
    let cube = Cubical {
        widths: vec![l2, l1],
        periodic: true,
    };
    let sets = vec![vec![vec![]], vec![vec![0], vec![1]], vec![vec![0, 1]]];
    let (cells, boundaries) = cube.build(&sets, |_| 1);
    let edge_label = |(axes, base): &(Vec<usize>, usize)| {
        format!("a{},{}", base, cube.shifted(*base, axes[0]))
    };
    let labels = vec![
        vertex_labels(cells[0].len()),
        cells[1].iter().map(edge_label).collect(),
        cells[2].iter().map(|(_, b)| format!("s{b}")).collect(),
    ];
    ChainComplex::new(q, ComplexKind::Torus2d { l1, l2 }, labels, boundaries)
}

const AXIS: [&str; 3] = ["x", "y", "z"];

fn labels_3d(cells: &[Vec<(Vec<usize>, usize)>]) -> Vec<Vec<String>> {
    let name = |axes: &[usize]| axes.iter().map(|&a| AXIS[a]).collect::<String>();
    vec![
        vertex_labels(cells[0].len()),
        cells[1]
            .iter()
            .map(|(a, b)| format!("a{}{b}", name(a)))
            .collect(),
        cells[2]
            .iter()
            .map(|(a, b)| format!("s{}{b}", name(a)))
            .collect(),
        cells[3].iter().map(|(_, b)| format!("c{b}")).collect(),
    ]
}

fn sets_3d() -> Vec<Vec<Vec<usize>>> {
    vec![
        vec![vec![]],
        vec![vec![0], vec![1], vec![2]],
        vec![vec![1, 2], vec![0, 2], vec![0, 1]],
        vec![vec![0, 1, 2]],
    ]
}

/// Face orientation: every cube has coefficient +1 on the faces at its
/// lower x, y and z sides and -1 on the upper ones.
fn sign_3d(axes: &[usize]) -> i8 {
    match axes {
        [1, 2] | [0, 1] => -1,
        _ => 1,
    }
}

/// The cube [0, L]^3 as a 3-complex with (L+1)^3 vertices.
pub fn build_cube_3complex(l: usize, q: u32) -> Result<ChainComplex> {
    require_size("l", l, 1)?;
    let cube = Cubical {
        widths: vec![l + 1; 3],
        periodic: false,
    };
    let (cells, boundaries) = cube.build(&sets_3d(), sign_3d);
    ChainComplex::new(q, ComplexKind::Cube3d { l }, labels_3d(&cells), boundaries)
}

/// The L x L x L torus: n vertices, 3n edges (x, then y, then z), 3n faces,
/// n cubes. Vertex (x, y, z) has index x + L (y + L z).
pub fn build_torus_3complex(l: usize, q: u32) -> Result<ChainComplex> {
    require_size("l", l, 1)?;
    let cube = Cubical {
        widths: vec![l; 3],
        periodic: true,
    };
    let (cells, boundaries) = cube.build(&sets_3d(), sign_3d);
    ChainComplex::new(q, ComplexKind::Torus3d { l }, labels_3d(&cells), boundaries)
}

/// Representatives of the non-trivial 1-cycles of a torus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TorusCycles {
    /// Horizontal cycle: row 0 (2D) or the x-line through the origin (3D).
    pub h: ZqVector,
    /// Vertical cycle: column 0 (2D) or the y-line through the origin (3D).
    pub v: ZqVector,
    /// The z-line through the origin, 3D only.
    pub d: Option<ZqVector>,
}

impl TorusCycles {
    /// The cycles in coset-coordinate order (h, v, then d).
    pub fn list(&self) -> Vec<&ZqVector> {
        let mut out = vec![&self.h, &self.v];
        if let Some(d) = &self.d {
            out.push(d);
        }
        out
    }

    /// Sum of alpha_j times cycle j, mod q.
    pub fn combination(&self, alpha: &[u8], q: u32) -> ZqVector {
        let list = self.list();
        let mut out = vec![0u8; self.h.len()];
        for (&a, c) in alpha.iter().zip(list) {
            for (o, &x) in out.iter_mut().zip(c) {
                *o = ((*o as u32 + a as u32 * x as u32) % q) as u8;
            }
        }
        out
    }
}

pub fn torus_cycles(c: &ChainComplex) -> Result<TorusCycles> {
    let edges = c.cell_counts().get(1).copied().unwrap_or(0);
    let line = |idx: Vec<usize>| {
        let mut v = vec![0u8; edges];
        for i in idx {
            v[i] = 1;
        }
        v
    };
    match *c.kind() {
        ComplexKind::Torus2d { l1, l2 } => {
            let n = l1 * l2;
            Ok(TorusCycles {
                h: line((0..l2).collect()),
                v: line((0..l1).map(|r| n + r * l2).collect()),
                d: None,
            })
        }
        ComplexKind::Torus3d { l } => {
            let n = l * l * l;
            Ok(TorusCycles {
                h: line((0..l).collect()),
                v: line((0..l).map(|y| n + l * y).collect()),
                d: Some(line((0..l).map(|z| 2 * n + l * l * z).collect())),
            })
        }
        _ => Err(Error::NotATorus),
    }
}

/// Checks that each cycle is closed and that none lies in the span of the
/// face boundaries and the cycles before it.
pub fn verify_torus_cycles(c: &ChainComplex, cycles: &TorusCycles) -> Result<bool> {
    let q = c.q();
    let b1 = c.boundary(1);
    let mut span = image_basis(&c.boundary_zq(2)?)?;
    for cyc in cycles.list() {
        if b1.apply(cyc, q).iter().any(|&x| x != 0) {
            return Ok(false);
        }
        if in_span(&span, cyc, q)? {
            return Ok(false);
        }
        span.push(cyc.clone());
    }
    Ok(true)
}

/// The 1-cycles sorted by coset of the face boundaries. `counts` is indexed
/// by the coset coordinate alpha in mixed radix, first cycle least
/// significant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CosetPartition {
    pub kernel_size: u64,
    pub image_size: u64,
    pub counts: Vec<u64>,
    /// No two coset representatives fall into the same coset.
    pub disjoint: bool,
    /// Every cycle landed in some coset.
    pub exhaustive: bool,
}

impl CosetPartition {
    pub fn is_partition(&self) -> bool {
        self.disjoint
            && self.exhaustive
            && self.counts.iter().all(|&c| c == self.image_size)
            && self.counts.iter().sum::<u64>() == self.kernel_size
    }
}

/// Enumerates the cycle space and sorts every cycle into a coset
/// alpha . cycles + im(boundary_2).
pub fn coset_partition(c: &ChainComplex, cycles: &TorusCycles, cap: u64) -> Result<CosetPartition> {
    let q = c.q();
    let edges = c.cell_counts()[1];
    let b2 = c.boundary_zq(2)?;
    let image = image_basis(&b2)?;
    let checks = orthogonal_complement(&image, edges, q)?;
    let syndrome = |v: &[u8]| -> Vec<u8> {
        checks
            .iter()
            .map(|h| {
                let s: u32 = h.iter().zip(v).map(|(&a, &b)| a as u32 * b as u32).sum();
                (s % q) as u8
            })
            .collect()
    };
    let k = cycles.list().len();
    let cosets = (q as u64).pow(k as u32) as usize;
    let mut by_syndrome: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut disjoint = true;
    for a in 0..cosets {
        let alpha: Vec<u8> = (0..k)
            .map(|j| ((a / (q as usize).pow(j as u32)) % q as usize) as u8)
            .collect();
        let rep = cycles.combination(&alpha, q);
        if by_syndrome.insert(syndrome(&rep), a).is_some() {
            disjoint = false;
        }
    }
    let kernel = kernel_basis(&c.boundary_zq(1)?)?;
    let span = enumerate_span(&kernel, edges, q, cap)?;
    let mut counts = vec![0u64; cosets];
    let mut exhaustive = true;
    span.for_each_in_range(0..span.count(), |v| match by_syndrome.get(&syndrome(v)) {
        Some(&a) => counts[a] += 1,
        None => exhaustive = false,
    });
    Ok(CosetPartition {
        kernel_size: span.count(),
        image_size: (q as u64).pow(image.len() as u32),
        counts,
        disjoint,
        exhaustive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(c: &ChainComplex, dim: usize, terms: &[(&str, i64)]) -> ZqVector {
        let mut v = vec![0u8; c.cell_counts()[dim]];
        for &(label, coeff) in terms {
            let i = c.cell_index(dim, label).unwrap_or_else(|| panic!("no cell {label}"));
            v[i] = reduce(v[i] as i64 + coeff, c.q());
        }
        v
    }

    #[test]
    fn grid_graph_boundaries() {
        let g = build_grid_1complex(3, 3, 5).unwrap();
        assert_eq!(g.cell_counts(), vec![9, 12]);
        let z = chain(&g, 1, &[("a0,1", 1), ("a1,4", 1), ("a4,7", 1)]);
        assert_eq!(g.boundary(1).apply(&z, 5), chain(&g, 0, &[("v7", 1), ("v0", -1)]));
        let z = chain(&g, 1, &[("a6,7", 2), ("a7,8", 3)]);
        assert_eq!(
            g.boundary(1).apply(&z, 5),
            chain(&g, 0, &[("v8", 3), ("v7", -1), ("v6", -2)])
        );
        assert_eq!(homology_dims(&g).unwrap(), vec![4, 1]);
    }

    #[test]
    fn grid_faces_are_clockwise() {
        let g = build_grid_2complex(4, 4, 3, &[]).unwrap();
        assert_eq!(g.cell_counts(), vec![16, 24, 9]);
        let s = chain(&g, 2, &[("s0", 1), ("s1", 1)]);
        let expected = chain(
            &g,
            1,
            &[
                ("a0,1", 1),
                ("a1,2", 1),
                ("a2,6", 1),
                ("a5,6", -1),
                ("a4,5", -1),
                ("a0,4", -1),
            ],
        );
        assert_eq!(g.boundary(2).apply(&s, 3), expected);
        assert_eq!(homology_dims(&g).unwrap(), vec![0, 0, 1]);
        let h = build_grid_2complex(4, 4, 2, &[4]).unwrap();
        assert_eq!(h.cell_counts(), vec![16, 24, 8]);
        assert_eq!(homology_dims(&h).unwrap(), vec![0, 1, 1]);
        assert_eq!(
            build_grid_2complex(4, 4, 2, &[9]),
            Err(Error::InvalidHoleIndex { index: 9, faces: 9 })
        );
    }

    #[test]
    fn torus_shapes() {
        let t = build_torus_2complex(2, 2, 2).unwrap();
        assert_eq!(t.cell_counts(), vec![4, 8, 4]);
        assert_eq!(t.labels(1)[0], "a0,1");
        assert_eq!(t.labels(1)[1], "a1,0");
        assert_eq!(t.labels(1)[4], "a0,2");
        assert_eq!(homology_dims(&t).unwrap(), vec![1, 2, 1]);
        let t = build_torus_2complex(3, 3, 2).unwrap();
        assert_eq!(kernel_basis(&t.boundary_zq(1).unwrap()).unwrap().len(), 10);
        assert_eq!(rank(&t.boundary_zq(2).unwrap()).unwrap(), 8);
    }

    #[test]
    fn three_dimensional_tables() {
        let c = build_cube_3complex(1, 2).unwrap();
        assert_eq!(c.cell_counts(), vec![8, 12, 6, 1]);
        assert_eq!(homology_dims(&c).unwrap(), vec![0, 0, 0, 1]);
        let t = build_torus_3complex(1, 2).unwrap();
        assert_eq!(t.cell_counts(), vec![1, 3, 3, 1]);
        assert_eq!(homology_dims(&t).unwrap(), vec![1, 3, 3, 1]);
        let t = build_torus_3complex(2, 3).unwrap();
        assert_eq!(t.cell_counts(), vec![8, 24, 24, 8]);
        assert_eq!(homology_dims(&t).unwrap(), vec![1, 3, 3, 1]);
    }

    #[test]
    fn cube_faces_lower_sides_positive() {
        let c = build_cube_3complex(1, 5).unwrap();
        let col = c.boundary(3).column_entries(0);
        for (face, sign) in col {
            let label = &c.labels(2)[face];
            let base: usize = label[3..].parse().unwrap();
            assert_eq!(sign, if base == 0 { 1 } else { -1 }, "{label}");
        }
    }

    #[test]
    fn degenerate_complexes() {
        assert!(homology_dims(&ChainComplex::empty(2).unwrap())
            .unwrap()
            .is_empty());
        assert!(cohomology_dims(&ChainComplex::empty(2).unwrap())
            .unwrap()
            .is_empty());
        let two_points = ChainComplex::new(
            2,
            ComplexKind::Custom,
            vec![vec!["v0".into(), "v1".into()]],
            vec![],
        )
        .unwrap();
        assert_eq!(homology_dims(&two_points).unwrap(), vec![2]);
    }

    #[test]
    fn broken_complex_is_detected() {
        let mut b1 = SignedMatrix::zeros(2, 1);
        b1.add(0, 0, -1);
        b1.add(1, 0, 1);
        let mut b2 = SignedMatrix::zeros(1, 1);
        b2.add(0, 0, 1);
        let c = ChainComplex::new(
            3,
            ComplexKind::Custom,
            vec![
                vec!["v0".into(), "v1".into()],
                vec!["a".into()],
                vec!["s".into()],
            ],
            vec![b1, b2],
        )
        .unwrap();
        assert_eq!(
            homology_dims(&c),
            Err(Error::BoundaryConditionViolated { upper: 2, lower: 1 })
        );
    }

    #[test]
    fn torus_cosets() {
        let t = build_torus_2complex(2, 2, 2).unwrap();
        let cyc = torus_cycles(&t).unwrap();
        assert!(verify_torus_cycles(&t, &cyc).unwrap());
        let p = coset_partition(&t, &cyc, 1 << 20).unwrap();
        assert_eq!(p.kernel_size, 32);
        assert_eq!(p.counts, vec![8; 4]);
        assert!(p.is_partition());
        let t3 = build_torus_2complex(2, 2, 3).unwrap();
        let p = coset_partition(&t3, &torus_cycles(&t3).unwrap(), 1 << 20).unwrap();
        assert_eq!(p.counts.len(), 9);
        assert!(p.is_partition());
        assert_eq!(
            torus_cycles(&build_grid_1complex(2, 2, 2).unwrap()),
            Err(Error::NotATorus)
        );
    }
}
