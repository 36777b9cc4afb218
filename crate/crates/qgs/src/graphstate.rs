//! Labelled graph states and their symbolic rewrite calculus.
//!
//! A [`LabelledGraph`] is an adjacency matrix over `F_d` plus per-vertex
//! `(z, x, m)` labels — exponents of local Z, X, S operators applied to the
//! bare graph state. The operations here never touch amplitudes: they are
//! exact label/edge rewrites whose physical correctness is established by
//! the dense oracle cross-validation suites.
//!
//! * [`LabelledGraph::apply_stabilizer_power`] — the stabilizer relabelling
//!   `x_i += k`, `z_j += k·A_ij` (same physical state up to global phase);
//! * [`LabelledGraph::shuffle`] — moves a z-label off a vertex onto a
//!   neighbour, the denial-certificate primitive;
//! * [`EncodedGraph::measure_symbolic`] — local `X^m Z` / `Z` measurement as
//!   a graph reduction (rules M1–M3);
//! * [`EncodedGraph::access_weights`] / [`EncodedGraph::denial_certificate`]
//!   — the LOCC access solver and its negative counterpart.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::fmt;
use std::ops::Deref;

use thiserror::Error;

use crate::field::{solve_linear, Field, FieldElement, FieldError, LinearSolution, Matrix};
use crate::pauli::{stabilizer_of, MeasurementBasis, PauliOperator};

/// Stable external vertex name. Survives vertex deletion (rule M3), so
/// protocol code can address players by identity across measurements.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct VertexId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("duplicate vertex id {0}")]
    DuplicateVertexId(VertexId),
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("self-loop on vertex {0}")]
    SelfLoop(VertexId),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(VertexId, VertexId),
    #[error("edge {0}-{1} has weight 0 (omit the edge instead)")]
    ZeroWeightEdge(VertexId, VertexId),
    #[error("vertices {0} and {1} are not neighbours")]
    NotNeighbours(VertexId, VertexId),
    #[error("vertex {0} is isolated; the symbolic measurement rules need a neighbour (use the dense oracle)")]
    IsolatedVertex(VertexId),
    #[error("vertex {vertex} carries S-label m={m}; measuring it symbolically is unsupported (use the dense oracle)")]
    MeasuredVertexCarriesSLabel { vertex: VertexId, m: u64 },
    #[error("vertex {vertex} has x-label {x}; not an encoded graph state")]
    NotEncoded { vertex: VertexId, x: u64 },
    #[error("adjacency matrix is asymmetric at ({0}, {1})")]
    AsymmetricAdjacency(usize, usize),
    #[error("adjacency matrix has nonzero diagonal at {0}")]
    NonzeroDiagonal(usize),
    #[error("subset is empty")]
    EmptySubset,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn parse_err(line: usize, message: impl Into<String>) -> GraphError {
    GraphError::Parse {
        line,
        message: message.into(),
    }
}

/// Adjacency over `F_d` plus per-vertex `(z, x, m)` labels.
#[derive(Clone, PartialEq, Eq)]
pub struct LabelledGraph {
    field: Field,
    ids: Vec<VertexId>,
    adj: Vec<FieldElement>, // n×n row-major, symmetric, zero diagonal
    z: Vec<FieldElement>,
    x: Vec<FieldElement>,
    m: Vec<FieldElement>,
}

impl LabelledGraph {
    /// Edge-less graph on the given vertices, all labels zero.
    pub fn new(field: Field, ids: Vec<VertexId>) -> Result<LabelledGraph, GraphError> {
        for (i, id) in ids.iter().enumerate() {
            if ids[..i].contains(id) {
                return Err(GraphError::DuplicateVertexId(*id));
            }
        }
        let n = ids.len();
        Ok(LabelledGraph {
            field,
            ids,
            adj: vec![field.zero(); n * n],
            z: vec![field.zero(); n],
            x: vec![field.zero(); n],
            m: vec![field.zero(); n],
        })
    }

    /// Edge-less graph on vertices named `1..=n`.
    pub fn with_vertices(field: Field, n: u32) -> LabelledGraph {
        LabelledGraph::new(field, (1..=n).map(VertexId).collect())
            .expect("consecutive ids are unique")
    }

    /// Validated construction from a full adjacency matrix (entries are raw
    /// integers checked into `F_d`) and per-vertex `(z, x, m)` labels.
    pub fn from_adjacency(
        field: Field,
        ids: Vec<VertexId>,
        adjacency: &[Vec<u64>],
        labels: &[(u64, u64, u64)],
    ) -> Result<LabelledGraph, GraphError> {
        let n = ids.len();
        assert_eq!(adjacency.len(), n, "adjacency must be n×n");
        assert!(adjacency.iter().all(|row| row.len() == n), "adjacency must be n×n");
        assert_eq!(labels.len(), n, "one (z,x,m) triple per vertex");

        let mut g = LabelledGraph::new(field, ids)?;
        for (i, arow) in adjacency.iter().enumerate() {
            if arow[i] != 0 {
                return Err(GraphError::NonzeroDiagonal(i));
            }
            for (j, &w) in arow.iter().enumerate() {
                if w != adjacency[j][i] {
                    return Err(GraphError::AsymmetricAdjacency(i, j));
                }
                g.adj[i * n + j] = field.checked_elem(w)?;
            }
        }
        for (i, &(z, x, m)) in labels.iter().enumerate() {
            g.z[i] = field.checked_elem(z)?;
            g.x[i] = field.checked_elem(x)?;
            g.m[i] = field.checked_elem(m)?;
        }
        Ok(g)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    pub fn index_of(&self, v: VertexId) -> Result<usize, GraphError> {
        self.ids
            .iter()
            .position(|&id| id == v)
            .ok_or(GraphError::UnknownVertex(v))
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.ids.contains(&v)
    }

    /// Positional adjacency access (used by the stabilizer constructor).
    pub fn weight_at(&self, i: usize, j: usize) -> FieldElement {
        self.adj[i * self.vertex_count() + j]
    }

    pub fn weight(&self, a: VertexId, b: VertexId) -> Result<FieldElement, GraphError> {
        Ok(self.weight_at(self.index_of(a)?, self.index_of(b)?))
    }

    pub fn z_label(&self, v: VertexId) -> Result<FieldElement, GraphError> {
        Ok(self.z[self.index_of(v)?])
    }

    pub fn x_label(&self, v: VertexId) -> Result<FieldElement, GraphError> {
        Ok(self.x[self.index_of(v)?])
    }

    pub fn m_label(&self, v: VertexId) -> Result<FieldElement, GraphError> {
        Ok(self.m[self.index_of(v)?])
    }

    pub fn z_label_at(&self, pos: usize) -> FieldElement {
        self.z[pos]
    }

    pub fn x_label_at(&self, pos: usize) -> FieldElement {
        self.x[pos]
    }

    pub fn m_label_at(&self, pos: usize) -> FieldElement {
        self.m[pos]
    }

    /// Adds an edge of nonzero weight; both endpoints must exist and the
    /// edge must not already be present.
    pub fn add_edge(&mut self, a: VertexId, b: VertexId, w: FieldElement) -> Result<(), GraphError> {
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        if w.is_zero() {
            return Err(GraphError::ZeroWeightEdge(a, b));
        }
        let (i, j) = (self.index_of(a)?, self.index_of(b)?);
        if !self.weight_at(i, j).is_zero() {
            return Err(GraphError::DuplicateEdge(a, b));
        }
        let n = self.vertex_count();
        self.adj[i * n + j] = w;
        self.adj[j * n + i] = w;
        Ok(())
    }

    pub fn set_labels(
        &mut self,
        v: VertexId,
        z: FieldElement,
        x: FieldElement,
        m: FieldElement,
    ) -> Result<(), GraphError> {
        let i = self.index_of(v)?;
        self.z[i] = z;
        self.x[i] = x;
        self.m[i] = m;
        Ok(())
    }

    pub fn set_z(&mut self, v: VertexId, z: FieldElement) -> Result<(), GraphError> {
        let i = self.index_of(v)?;
        self.z[i] = z;
        Ok(())
    }

    pub fn neighbours(&self, v: VertexId) -> Result<Vec<VertexId>, GraphError> {
        let i = self.index_of(v)?;
        Ok((0..self.vertex_count())
            .filter(|&j| !self.weight_at(i, j).is_zero())
            .map(|j| self.ids[j])
            .collect())
    }

    pub fn edges(&self) -> Vec<(VertexId, VertexId, FieldElement)> {
        let n = self.vertex_count();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.weight_at(i, j);
                if !w.is_zero() {
                    out.push((self.ids[i], self.ids[j], w));
                }
            }
        }
        out
    }

    /// Multiplies the state by `K_i^k`, which only relabels:
    /// `x_i += k`, `z_j += k·A_ij` for every j. Physically the same state
    /// (up to a global phase `ω^{−k·z_i}`), for arbitrary labels.
    pub fn apply_stabilizer_power(
        &self,
        v: VertexId,
        k: FieldElement,
    ) -> Result<LabelledGraph, GraphError> {
        let i = self.index_of(v)?;
        let mut g = self.clone();
        g.x[i] += k;
        for j in 0..g.vertex_count() {
            let w = self.weight_at(i, j);
            g.z[j] += k * w;
        }
        Ok(g)
    }

    /// Shuffles vertex `i`'s z-label onto neighbour `j`: applies
    /// `K_j^{−A_ij^{−1} z_i}`, after which `z_i = 0` and
    /// `x_j = x_j − A_ij^{−1} z_i`. A relabelling, not a physical operation.
    pub fn shuffle(&self, i: VertexId, j: VertexId) -> Result<LabelledGraph, GraphError> {
        let w = self.weight(i, j)?;
        if w.is_zero() {
            return Err(GraphError::NotNeighbours(i, j));
        }
        let k = -(w.inv() * self.z_label(i)?);
        self.apply_stabilizer_power(j, k)
    }

    /// The induced subgraph on `keep` (order taken from `keep`), retaining
    /// labels of the kept vertices.
    pub fn induced_subgraph(&self, keep: &[VertexId]) -> Result<LabelledGraph, GraphError> {
        let mut g = LabelledGraph::new(self.field, keep.to_vec())?;
        for (a_new, &a) in keep.iter().enumerate() {
            let a_old = self.index_of(a)?;
            g.z[a_new] = self.z[a_old];
            g.x[a_new] = self.x[a_old];
            g.m[a_new] = self.m[a_old];
            for (b_new, &b) in keep.iter().enumerate() {
                let b_old = self.index_of(b)?;
                g.adj[a_new * keep.len() + b_new] = self.weight_at(a_old, b_old);
            }
        }
        Ok(g)
    }

    fn remove_vertex(&self, v: VertexId) -> Result<LabelledGraph, GraphError> {
        self.index_of(v)?;
        let keep: Vec<VertexId> = self.ids.iter().copied().filter(|&id| id != v).collect();
        self.induced_subgraph(&keep)
    }

    /// Serializes to the line-oriented graph file format. Round-trips
    /// bit-exactly through [`parse_graph`] for graphs whose vertices are
    /// named `1..=n` (the only kind the format can express).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("d {}\n", self.field.modulus()));
        out.push_str(&format!("n {}\n", self.vertex_count()));
        for (a, b, w) in self.edges() {
            out.push_str(&format!("edge {} {} {}\n", a, b, w));
        }
        for (i, &id) in self.ids.iter().enumerate() {
            if !self.z[i].is_zero() || !self.x[i].is_zero() || !self.m[i].is_zero() {
                out.push_str(&format!(
                    "label {} {} {} {}\n",
                    id, self.z[i], self.x[i], self.m[i]
                ));
            }
        }
        out
    }
}

/// Human-readable rendering: dimension, edge list, label vectors.
impl fmt::Display for LabelledGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "d = {}, n = {}", self.field.modulus(), self.vertex_count())?;
        let edges = self.edges();
        if edges.is_empty() {
            writeln!(f, "edges: (none)")?;
        } else {
            let rendered: Vec<String> = edges
                .iter()
                .map(|(a, b, w)| format!("{}-{}:{}", a, b, w))
                .collect();
            writeln!(f, "edges: {}", rendered.join(" "))?;
        }
        let vec_line = |vals: &[FieldElement]| {
            let inner: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
            format!("({})", inner.join(", "))
        };
        writeln!(f, "z = {}", vec_line(&self.z))?;
        writeln!(f, "x = {}", vec_line(&self.x))?;
        write!(f, "m = {}", vec_line(&self.m))
    }
}

impl fmt::Debug for LabelledGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Parses the line-oriented graph format:
///
/// ```text
/// # comment
/// d 5
/// n 4
/// edge 1 2 2
/// label 1 1 0 1
/// ```
///
/// `d` must precede `n`; both must precede `edge`/`label` lines. Vertices
/// are `1..=n`. Duplicate edges (either orientation), duplicate labels,
/// zero/overweight edges, and out-of-range labels are errors carrying the
/// offending line number.
pub fn parse_graph(text: &str) -> Result<LabelledGraph, GraphError> {
    let mut field: Option<Field> = None;
    let mut graph: Option<LabelledGraph> = None;
    let mut labelled: Vec<bool> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let keyword = parts.next().expect("nonempty line has a first token");
        let args: Vec<&str> = parts.collect();
        let want = |n: usize| -> Result<(), GraphError> {
            if args.len() == n {
                Ok(())
            } else {
                Err(parse_err(
                    line_no,
                    format!("`{keyword}` takes {n} argument(s), got {}", args.len()),
                ))
            }
        };
        let int = |s: &str| -> Result<u64, GraphError> {
            s.parse::<u64>()
                .map_err(|_| parse_err(line_no, format!("expected a nonnegative integer, got {s:?}")))
        };

        match keyword {
            "d" => {
                want(1)?;
                if field.is_some() {
                    return Err(parse_err(line_no, "duplicate `d` directive"));
                }
                let d = int(args[0])?;
                field = Some(Field::new(d).map_err(|e| parse_err(line_no, e.to_string()))?);
            }
            "n" => {
                want(1)?;
                let field = field.ok_or_else(|| parse_err(line_no, "`n` before `d`"))?;
                if graph.is_some() {
                    return Err(parse_err(line_no, "duplicate `n` directive"));
                }
                let n = int(args[0])?;
                if n == 0 {
                    return Err(parse_err(line_no, "graph needs at least one vertex"));
                }
                graph = Some(LabelledGraph::with_vertices(field, n as u32));
                labelled = vec![false; n as usize];
            }
            "edge" => {
                want(3)?;
                let g = graph
                    .as_mut()
                    .ok_or_else(|| parse_err(line_no, "`edge` before `n`"))?;
                let (a, b, w) = (int(args[0])?, int(args[1])?, int(args[2])?);
                let vertex = |v: u64| -> Result<VertexId, GraphError> {
                    if (1..=g.vertex_count() as u64).contains(&v) {
                        Ok(VertexId(v as u32))
                    } else {
                        Err(parse_err(line_no, format!("vertex {v} out of range")))
                    }
                };
                let w = g
                    .field
                    .checked_elem(w)
                    .map_err(|e| parse_err(line_no, e.to_string()))?;
                g.add_edge(vertex(a)?, vertex(b)?, w)
                    .map_err(|e| parse_err(line_no, e.to_string()))?;
            }
            "label" => {
                want(4)?;
                let g = graph
                    .as_mut()
                    .ok_or_else(|| parse_err(line_no, "`label` before `n`"))?;
                let v = int(args[0])?;
                if !(1..=g.vertex_count() as u64).contains(&v) {
                    return Err(parse_err(line_no, format!("vertex {v} out of range")));
                }
                if std::mem::replace(&mut labelled[(v - 1) as usize], true) {
                    return Err(parse_err(line_no, format!("duplicate label for vertex {v}")));
                }
                let f = g.field;
                let elem = |s: &str| -> Result<FieldElement, GraphError> {
                    f.checked_elem(int(s)?)
                        .map_err(|e| parse_err(line_no, e.to_string()))
                };
                let (z, x, m) = (elem(args[1])?, elem(args[2])?, elem(args[3])?);
                g.set_labels(VertexId(v as u32), z, x, m)
                    .expect("vertex range checked above");
            }
            other => {
                return Err(parse_err(line_no, format!("unknown directive {other:?}")));
            }
        }
    }

    graph.ok_or_else(|| parse_err(text.lines().count().max(1), "missing `d`/`n` directives"))
}

/// A labelled graph state with all x-labels zero — the domain of the
/// measurement rules and the access/denial solvers.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EncodedGraph(LabelledGraph);

impl EncodedGraph {
    pub fn new(graph: LabelledGraph) -> Result<EncodedGraph, GraphError> {
        for (i, &x) in graph.x.iter().enumerate() {
            if !x.is_zero() {
                return Err(GraphError::NotEncoded {
                    vertex: graph.ids[i],
                    x: x.value(),
                });
            }
        }
        Ok(EncodedGraph(graph))
    }

    pub fn as_graph(&self) -> &LabelledGraph {
        &self.0
    }

    pub fn into_inner(self) -> LabelledGraph {
        self.0
    }

    /// Local measurement of `basis` on vertex `v` with outcome `ω^s`,
    /// rewritten as a graph reduction. For `X^m Z` with outcome `ω^s`:
    ///
    /// * M1 — every pair of distinct neighbours j,k of v gains edge weight
    ///   `m·A_vj·A_vk`;
    /// * M2 — every neighbour j gains `z_j += A_vj·s + m·A_vj·z_v +
    ///   m·A_vj(A_vj+1)/2` and `m_j += m·A_vj²` (additive composition with
    ///   any S-label already on j);
    /// * M3 — v and its edges are removed.
    ///
    /// The Z basis is the `m = 0` member of the family. Preconditions:
    /// v must have a neighbour (else the outcome statistics degenerate) and
    /// must not carry an S-label (`m_v = 0`) — both cases are delegated to
    /// the dense oracle, which has no such restrictions.
    pub fn measure_symbolic(
        &self,
        v: VertexId,
        basis: MeasurementBasis,
        outcome: FieldElement,
    ) -> Result<SymbolicMeasurementResult, GraphError> {
        let g = &self.0;
        let field = g.field;
        let i = g.index_of(v)?;
        let m = basis.m(field);

        if !g.m[i].is_zero() {
            return Err(GraphError::MeasuredVertexCarriesSLabel {
                vertex: v,
                m: g.m[i].value(),
            });
        }
        let nbrs: Vec<usize> = (0..g.vertex_count())
            .filter(|&j| !g.weight_at(i, j).is_zero())
            .collect();
        if nbrs.is_empty() {
            return Err(GraphError::IsolatedVertex(v));
        }

        let mut out = g.clone();
        let n = g.vertex_count();
        // M1: edge updates use the *original* weights throughout.
        for (a_idx, &j) in nbrs.iter().enumerate() {
            for &k in &nbrs[a_idx + 1..] {
                let delta = m * g.weight_at(i, j) * g.weight_at(i, k);
                let w = out.adj[j * n + k] + delta;
                out.adj[j * n + k] = w;
                out.adj[k * n + j] = w;
            }
        }
        // M2: label updates on the neighbours.
        for &j in &nbrs {
            let a = g.weight_at(i, j);
            out.z[j] += a * outcome + m * a * g.z[i] + (m * a * (a + field.one())).half();
            out.m[j] += m * a * a;
        }
        // M3: drop the measured vertex.
        let reduced = out.remove_vertex(v)?;

        Ok(SymbolicMeasurementResult {
            reduced,
            outcome,
            basis,
            measured_vertex: v,
        })
    }

    /// Solves for measurement weights `w` supported on `subset` such that
    /// `Σ_i w_i A_ij = 0` for every vertex j outside the subset (so the
    /// stabilizer product `Π K_i^{w_i}` acts only on subset sites) and
    /// `Σ_i w_i·coeff_i = 1` (so its eigenvalue exponent recovers the
    /// secret with unit coefficient). `coeff` is the per-vertex coefficient
    /// of the secret in the z-encoding, aligned with `ids()`.
    pub fn access_weights(
        &self,
        subset: &[VertexId],
        coeff: &[FieldElement],
    ) -> Result<Option<AccessWitness>, GraphError> {
        let g = &self.0;
        let field = g.field;
        let n = g.vertex_count();
        assert_eq!(coeff.len(), n, "one coefficient per vertex");
        if subset.is_empty() {
            return Err(GraphError::EmptySubset);
        }
        let mut members = Vec::new();
        for &v in subset {
            let idx = g.index_of(v)?;
            if !members.contains(&idx) {
                members.push(idx);
            }
        }

        let outside: Vec<usize> = (0..n).filter(|p| !members.contains(p)).collect();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for &j in &outside {
            rows.push(members.iter().map(|&i| g.weight_at(i, j)).collect());
            rhs.push(field.zero());
        }
        rows.push(members.iter().map(|&i| coeff[i]).collect());
        rhs.push(field.one());

        match solve_linear(&Matrix::from_rows(field, &rows), &rhs) {
            LinearSolution::Inconsistent => Ok(None),
            LinearSolution::Solution { particular, .. } => {
                let mut weights = vec![field.zero(); n];
                for (slot, &pos) in members.iter().enumerate() {
                    weights[pos] = particular[slot];
                }
                let mut product = PauliOperator::identity(field, n);
                for (pos, &w) in weights.iter().enumerate() {
                    if !w.is_zero() {
                        let k = stabilizer_of(g, g.ids[pos])?.power(w);
                        product = product.multiply(&k).expect("same graph, same shape");
                    }
                }
                Ok(Some(AccessWitness { weights, product }))
            }
        }
    }

    /// Breadth-first search for a shuffle sequence after which no vertex in
    /// `subset` carries any secret-dependent label. `coeff` is the
    /// z-encoding's secret coefficient per vertex (as in
    /// [`Self::access_weights`]); the search runs in coefficient space, so
    /// one certificate is valid for every secret value. Returns the move
    /// sequence (empty if the subset is already independent) or `None` if
    /// none exists within `max_depth` moves.
    pub fn denial_certificate(
        &self,
        subset: &[VertexId],
        coeff: &[FieldElement],
        max_depth: usize,
    ) -> Result<Option<Vec<ShuffleMove>>, GraphError> {
        let g = &self.0;
        let field = g.field;
        let n = g.vertex_count();
        assert_eq!(coeff.len(), n, "one coefficient per vertex");
        if subset.is_empty() {
            return Err(GraphError::EmptySubset);
        }
        let mut members = Vec::new();
        for &v in subset {
            members.push(g.index_of(v)?);
        }

        // Search state: per-vertex secret coefficients of (z, x).
        type Key = (Vec<u64>, Vec<u64>);
        let key = |zc: &[FieldElement], xc: &[FieldElement]| -> Key {
            (
                zc.iter().map(|e| e.value()).collect(),
                xc.iter().map(|e| e.value()).collect(),
            )
        };
        let clean = |zc: &[FieldElement], xc: &[FieldElement]| {
            members
                .iter()
                .all(|&p| zc[p].is_zero() && xc[p].is_zero())
        };

        let zc0: Vec<FieldElement> = coeff.to_vec();
        let xc0: Vec<FieldElement> = vec![field.zero(); n];
        if clean(&zc0, &xc0) {
            return Ok(Some(Vec::new()));
        }

        let start = key(&zc0, &xc0);
        let mut parents: HashMap<Key, (Key, ShuffleMove)> = HashMap::new();
        let mut depth_of: HashMap<Key, usize> = HashMap::new();
        depth_of.insert(start.clone(), 0);
        let mut queue = VecDeque::from([(zc0, xc0)]);

        while let Some((zc, xc)) = queue.pop_front() {
            let here = key(&zc, &xc);
            let depth = depth_of[&here];
            if depth == max_depth {
                continue;
            }
            for i in 0..n {
                if zc[i].is_zero() {
                    continue; // nothing to move off vertex i
                }
                for j in 0..n {
                    let w = g.weight_at(i, j);
                    if w.is_zero() {
                        continue;
                    }
                    // Coefficient-space image of shuffle(i → j).
                    let k = -(w.inv() * zc[i]);
                    let mut nz = zc.clone();
                    let mut nx = xc.clone();
                    nx[j] += k;
                    for (l, nzl) in nz.iter_mut().enumerate() {
                        *nzl += k * g.weight_at(j, l);
                    }
                    let nk = key(&nz, &nx);
                    if depth_of.contains_key(&nk) {
                        continue;
                    }
                    let mv = ShuffleMove {
                        from: g.ids[i],
                        to: g.ids[j],
                    };
                    depth_of.insert(nk.clone(), depth + 1);
                    parents.insert(nk.clone(), (here.clone(), mv));
                    if clean(&nz, &nx) {
                        let mut moves = vec![mv];
                        let mut cursor = here.clone();
                        while cursor != start {
                            let (prev, m) = parents[&cursor].clone();
                            moves.push(m);
                            cursor = prev;
                        }
                        moves.reverse();
                        return Ok(Some(moves));
                    }
                    queue.push_back((nz, nx));
                }
            }
        }
        Ok(None)
    }
}

impl Deref for EncodedGraph {
    type Target = LabelledGraph;
    fn deref(&self) -> &LabelledGraph {
        &self.0
    }
}

/// One step of a denial certificate: shuffle `from`'s z-label onto `to`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ShuffleMove {
    pub from: VertexId,
    pub to: VertexId,
}

impl fmt::Display for ShuffleMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

/// A positive access witness: full-length weight vector plus the assembled
/// stabilizer product `Π K_i^{w_i}` the subset measures.
#[derive(Clone, Debug)]
pub struct AccessWitness {
    pub weights: Vec<FieldElement>,
    pub product: PauliOperator,
}

/// Result of a symbolic local measurement: the reduced graph (measured
/// vertex deleted, external ids preserved) plus what was measured.
#[derive(Clone, Debug)]
pub struct SymbolicMeasurementResult {
    pub reduced: LabelledGraph,
    pub outcome: FieldElement,
    pub basis: MeasurementBasis,
    pub measured_vertex: VertexId,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn f(d: u64) -> Field {
        Field::new(d).unwrap()
    }

    fn labels_of(g: &LabelledGraph) -> (Vec<u64>, Vec<u64>, Vec<u64>) {
        (
            g.ids().iter().map(|&v| g.z_label(v).unwrap().value()).collect(),
            g.ids().iter().map(|&v| g.x_label(v).unwrap().value()).collect(),
            g.ids().iter().map(|&v| g.m_label(v).unwrap().value()).collect(),
        )
    }

    #[test]
    fn from_adjacency_validation() {
        let field = f(5);
        let ids = vec![VertexId(1), VertexId(2)];
        let asym = vec![vec![0, 1], vec![2, 0]];
        assert!(matches!(
            LabelledGraph::from_adjacency(field, ids.clone(), &asym, &[(0, 0, 0); 2]),
            Err(GraphError::AsymmetricAdjacency(..))
        ));
        let diag = vec![vec![1, 0], vec![0, 0]];
        assert!(matches!(
            LabelledGraph::from_adjacency(field, ids.clone(), &diag, &[(0, 0, 0); 2]),
            Err(GraphError::NonzeroDiagonal(0))
        ));
        let wide = vec![vec![0, 7], vec![7, 0]];
        assert!(matches!(
            LabelledGraph::from_adjacency(field, ids, &wide, &[(0, 0, 0); 2]),
            Err(GraphError::Field(FieldError::ValueOutOfRange { .. }))
        ));
    }

    #[test]
    fn single_vertex_graph() {
        let g = LabelledGraph::from_adjacency(f(3), vec![VertexId(1)], &[vec![0]], &[(0, 0, 0)])
            .unwrap();
        assert_eq!(g.vertex_count(), 1);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn stabilizer_relabelling_star() {
        // Star on 3 vertices with z = (0, 2s, s): K_1^{-2s} clears player
        // 2's secret dependence, K_1^{-s} clears player 3's.
        let d = 5;
        let field = f(d);
        for s in 0..d {
            let s = field.elem(s as i64);
            let g = fixtures::cc_twothree(field, s);
            let shifted = g.apply_stabilizer_power(VertexId(1), -(field.elem(2) * s)).unwrap();
            assert_eq!(shifted.x_label(VertexId(1)).unwrap(), -(field.elem(2) * s));
            assert_eq!(shifted.z_label(VertexId(2)).unwrap().value(), 0);
            assert_eq!(shifted.z_label(VertexId(3)).unwrap(), -s);

            let shifted = g.apply_stabilizer_power(VertexId(1), -s).unwrap();
            assert_eq!(shifted.z_label(VertexId(2)).unwrap(), s);
            assert_eq!(shifted.z_label(VertexId(3)).unwrap().value(), 0);

            let unchanged = g.apply_stabilizer_power(VertexId(2), field.zero()).unwrap();
            assert_eq!(unchanged, *g.as_graph());
        }
    }

    #[test]
    fn shuffle_square_regression() {
        // Weight-2 square at d=5 with z_1 = 3: shuffling 1 onto 2 sets
        // x_2 = -3/2 = 1 and z_3 = -6/2 = 2.
        let field = f(5);
        let mut g = fixtures::shuffle_square(field);
        g.set_z(VertexId(1), field.elem(3)).unwrap();
        let shuffled = g.shuffle(VertexId(1), VertexId(2)).unwrap();
        let (z, x, m) = labels_of(&shuffled);
        assert_eq!(z, vec![0, 0, 2, 0]);
        assert_eq!(x, vec![0, 1, 0, 0]);
        assert_eq!(m, vec![0, 0, 0, 0]);
    }

    #[test]
    fn shuffle_requires_neighbours() {
        let g = fixtures::cc_twothree(f(5), f(5).one());
        // 2 and 3 are both leaves of the star: not adjacent.
        assert!(matches!(
            g.shuffle(VertexId(2), VertexId(3)),
            Err(GraphError::NotNeighbours(..))
        ));
    }

    #[test]
    fn shuffle_tree_to_any_player() {
        let field = f(7);
        let s = field.elem(4);
        let g = fixtures::cc_tree(field, 4, s);
        let shuffled = g.shuffle(VertexId(1), VertexId(3)).unwrap();
        assert_eq!(shuffled.z_label(VertexId(1)).unwrap().value(), 0);
        assert_eq!(shuffled.x_label(VertexId(3)).unwrap(), -s);
        let (z, x, _) = labels_of(&shuffled);
        assert_eq!(z, vec![0, 0, 0, 0]);
        assert_eq!(x, vec![0, 0, 3, 0]);
    }

    #[test]
    fn measure_z_on_leaf_deletes_edge_only() {
        let field = f(5);
        let g = fixtures::cc_tree(field, 3, field.zero());
        let res = g
            .measure_symbolic(VertexId(3), MeasurementBasis::Z, field.zero())
            .unwrap();
        assert_eq!(res.reduced.vertex_count(), 2);
        assert_eq!(res.reduced.ids(), &[VertexId(1), VertexId(2)]);
        let (z, x, m) = labels_of(&res.reduced);
        assert_eq!((z, x, m), (vec![0, 0], vec![0, 0], vec![0, 0]));
        assert_eq!(res.reduced.edges().len(), 1);
    }

    #[test]
    fn measure_extended_tree_dealer() {
        // Dealer measures X^{t}Z with outcome s on the extended tree: the
        // reduced tree keeps its edges, player 1 picks up z_1 = s + t
        // (the A(A+1)/2 half-term with A = 1) and m_1 = t.
        let field = f(5);
        for t in 0..5 {
            for s in 0..5 {
                let (t, s) = (field.elem(t), field.elem(s));
                let ext = fixtures::ext_tree(field, 3);
                let res = ext
                    .measure_symbolic(fixtures::DEALER, MeasurementBasis::XmZ(t), s)
                    .unwrap();
                let g = &res.reduced;
                assert_eq!(g.ids(), &[VertexId(1), VertexId(2), VertexId(3)]);
                assert_eq!(g.z_label(VertexId(1)).unwrap(), s + t);
                assert_eq!(g.m_label(VertexId(1)).unwrap(), t);
                for v in [VertexId(2), VertexId(3)] {
                    assert_eq!(g.z_label(v).unwrap().value(), 0);
                    assert_eq!(g.m_label(v).unwrap().value(), 0);
                }
                assert_eq!(g.edges().len(), 2, "star edges survive");
            }
        }
    }

    #[test]
    fn measure_rejects_isolated_and_s_labelled() {
        let field = f(3);
        let mut g = LabelledGraph::with_vertices(field, 2);
        // no edges: vertex 1 isolated
        let enc = EncodedGraph::new(g.clone()).unwrap();
        assert!(matches!(
            enc.measure_symbolic(VertexId(1), MeasurementBasis::Z, field.zero()),
            Err(GraphError::IsolatedVertex(VertexId(1)))
        ));

        g.add_edge(VertexId(1), VertexId(2), field.one()).unwrap();
        g.set_labels(VertexId(1), field.zero(), field.zero(), field.one())
            .unwrap();
        let enc = EncodedGraph::new(g).unwrap();
        assert!(matches!(
            enc.measure_symbolic(VertexId(1), MeasurementBasis::Z, field.zero()),
            Err(GraphError::MeasuredVertexCarriesSLabel { .. })
        ));
    }

    #[test]
    fn encoded_graph_rejects_x_labels() {
        let field = f(3);
        let mut g = LabelledGraph::with_vertices(field, 2);
        g.set_labels(VertexId(2), field.zero(), field.one(), field.zero())
            .unwrap();
        assert!(matches!(
            EncodedGraph::new(g),
            Err(GraphError::NotEncoded { vertex: VertexId(2), x: 1 })
        ));
    }

    #[test]
    fn stabilizer_display_fixtures() {
        let field = f(5);
        let star = fixtures::cc_tree(field, 3, field.zero());
        assert_eq!(
            stabilizer_of(&star, VertexId(1)).unwrap().to_string(),
            "X1 Z2 Z3"
        );
        let ring = fixtures::cc_ring(field, 5, field.zero());
        assert_eq!(
            stabilizer_of(&ring, VertexId(2)).unwrap().to_string(),
            "Z1 X2 Z3"
        );
        let ext = fixtures::ext_ring35(field);
        let kd = stabilizer_of(&ext, fixtures::DEALER).unwrap();
        assert_eq!(kd.display_with_ids(ext.ids()), "X0 Z1 Z2 Z3 Z4 Z5");
    }

    #[test]
    fn twothree_pair_product() {
        // On the (2,3) star the product K_2^{d-1} K_3 is X-only: the
        // Z-parts on vertex 1 cancel and no reordering phase appears.
        let field = f(7);
        let g = fixtures::cc_twothree(field, field.zero());
        let k2 = stabilizer_of(&g, VertexId(2)).unwrap();
        let k3 = stabilizer_of(&g, VertexId(3)).unwrap();
        let prod = k2.power(field.elem(-1)).multiply(&k3).unwrap();
        assert_eq!(prod.to_string(), "X2^6 X3");
        assert_eq!(prod.phase().value(), 0);
    }

    #[test]
    fn access_witnesses() {
        let field = f(5);
        let s = field.elem(1);

        // (2,3): pair {2,3} measures a multiple of K_2^{-1} K_3.
        let g = fixtures::cc_twothree(field, s);
        let coeff = fixtures::cc_twothree_coeff(field);
        let w = g
            .access_weights(&[VertexId(2), VertexId(3)], &coeff)
            .unwrap()
            .expect("pair is authorized");
        let vals: Vec<u64> = w.weights.iter().map(|e| e.value()).collect();
        assert_eq!(vals, vec![0, 1, 4], "normalized multiple of (0, d-1, 1)");

        // Corollary case: a vertex plus all its neighbours recovers its own
        // z-label: weights e_k.
        let mut coeff_e2 = vec![field.zero(); 3];
        coeff_e2[1] = field.one();
        let w = g
            .access_weights(&[VertexId(1), VertexId(2)], &coeff_e2)
            .unwrap()
            .expect("{1,2} contains 2 and its neighbourhood");
        let vals: Vec<u64> = w.weights.iter().map(|e| e.value()).collect();
        assert_eq!(vals, vec![0, 1, 0]);

        // (3,5) ring, {1,2,4}: the unique witness is (1,1,0,-1,0).
        let ring = fixtures::cc_ring(field, 5, s);
        let coeff = vec![field.one(); 5];
        let w = ring
            .access_weights(&[VertexId(1), VertexId(2), VertexId(4)], &coeff)
            .unwrap()
            .expect("trio is authorized");
        let vals: Vec<u64> = w.weights.iter().map(|e| e.value()).collect();
        assert_eq!(vals, vec![1, 1, 0, 4, 0]);
        assert_eq!(w.product.support(), vec![0, 1, 3], "acts only on the trio's sites");

        // (3,4) ring, nonadjacent pair {1,3}: no witness exists.
        let ring4 = fixtures::cc_ring(field, 4, s);
        let coeff4 = vec![field.one(); 4];
        assert!(ring4
            .access_weights(&[VertexId(1), VertexId(3)], &coeff4)
            .unwrap()
            .is_none());
    }

    #[test]
    fn denial_certificates() {
        let field = f(5);

        // Tree: everyone but player 1 is already independent.
        let tree = fixtures::cc_tree(field, 4, field.one());
        let coeff = fixtures::cc_tree_coeff(field, 4);
        let cert = tree
            .denial_certificate(&[VertexId(2), VertexId(3), VertexId(4)], &coeff, 4)
            .unwrap()
            .expect("subset excluding player 1 is independent");
        assert!(cert.is_empty());

        // (2,3): player 1 alone — already independent; player 2 needs one move.
        let g = fixtures::cc_twothree(field, field.one());
        let coeff23 = fixtures::cc_twothree_coeff(field);
        assert_eq!(
            g.denial_certificate(&[VertexId(1)], &coeff23, 3).unwrap(),
            Some(vec![])
        );
        let cert = g
            .denial_certificate(&[VertexId(2)], &coeff23, 3)
            .unwrap()
            .expect("single player is denied");
        assert_eq!(cert.len(), 1);

        // (3,4) ring: nonadjacent pair in one move, adjacent pair in two.
        let ring = fixtures::cc_ring(field, 4, field.one());
        let coeff4 = vec![field.one(); 4];
        let cert = ring
            .denial_certificate(&[VertexId(1), VertexId(3)], &coeff4, 4)
            .unwrap()
            .expect("nonadjacent pair denied");
        assert_eq!(cert.len(), 1);
        let cert = ring
            .denial_certificate(&[VertexId(1), VertexId(4)], &coeff4, 4)
            .unwrap()
            .expect("adjacent pair denied");
        assert_eq!(cert.len(), 2);

        // Certificates replay on the concrete graph: after the moves, no
        // subset vertex label depends on s (checked across two s values by
        // comparing labels).
        for subset in [vec![VertexId(1), VertexId(3)], vec![VertexId(1), VertexId(4)]] {
            let cert = ring
                .denial_certificate(&subset, &coeff4, 4)
                .unwrap()
                .unwrap();
            let mut per_s = Vec::new();
            for s in 0..5 {
                let mut g = fixtures::cc_ring(field, 4, field.elem(s)).into_inner();
                for mv in &cert {
                    g = g.shuffle(mv.from, mv.to).unwrap();
                }
                let snapshot: Vec<(u64, u64)> = subset
                    .iter()
                    .map(|&v| {
                        (
                            g.z_label(v).unwrap().value(),
                            g.x_label(v).unwrap().value(),
                        )
                    })
                    .collect();
                per_s.push(snapshot);
            }
            assert!(per_s.windows(2).all(|w| w[0] == w[1]), "labels s-independent");
        }
    }

    #[test]
    fn parse_round_trip() {
        let text = "# weight-2 square\nd 5\nn 4\nedge 1 2 2\nedge 1 4 2\nedge 2 3 2\nedge 3 4 2\nlabel 1 1 0 1\nlabel 2 1 0 1\nlabel 3 1 0 1\nlabel 4 1 0 1\n";
        let g = parse_graph(text).unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.weight(VertexId(1), VertexId(2)).unwrap().value(), 2);
        let rendered = g.to_text();
        let reparsed = parse_graph(&rendered).unwrap();
        assert_eq!(reparsed, g);
        assert_eq!(reparsed.to_text(), rendered, "serialization is a fixed point");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("d 4\n", 1, "not an odd prime"),
            ("n 3\n", 1, "`n` before `d`"),
            ("d 5\nedge 1 2 1\n", 2, "`edge` before `n`"),
            ("d 5\nn 2\nedge 1 2 0\n", 3, "weight 0"),
            ("d 5\nn 2\nedge 1 2 5\n", 3, "not reducible"),
            ("d 5\nn 2\nedge 1 3 1\n", 3, "out of range"),
            ("d 5\nn 2\nedge 1 2 1\nedge 2 1 2\n", 4, "duplicate edge"),
            ("d 5\nn 2\nlabel 1 0 0 0\nlabel 1 1 0 0\n", 4, "duplicate label"),
            ("d 5\nn 2\nedge 1 1 2\n", 3, "self-loop"),
            ("d 5\nn 2\nvertex 1\n", 3, "unknown directive"),
            ("d 5\nn 2\nedge 1 2\n", 3, "takes 3 argument"),
            ("# nothing\n", 1, "missing `d`/`n`"),
        ];
        for (text, line, needle) in cases {
            match parse_graph(text) {
                Err(GraphError::Parse { line: l, message }) => {
                    assert_eq!(l, line, "line number for {text:?}");
                    assert!(
                        message.contains(needle),
                        "message {message:?} should mention {needle:?}"
                    );
                }
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn induced_subgraph_keeps_ids_and_weights() {
        let field = f(5);
        let ring = fixtures::cc_ring(field, 5, field.elem(2));
        let sub = ring.induced_subgraph(&[VertexId(3), VertexId(4), VertexId(5)]).unwrap();
        assert_eq!(sub.ids(), &[VertexId(3), VertexId(4), VertexId(5)]);
        assert_eq!(sub.weight(VertexId(3), VertexId(4)).unwrap().value(), 1);
        assert_eq!(sub.weight(VertexId(4), VertexId(5)).unwrap().value(), 1);
        assert_eq!(sub.weight(VertexId(3), VertexId(5)).unwrap().value(), 0);
        assert_eq!(sub.z_label(VertexId(3)).unwrap().value(), 2);
    }
}
