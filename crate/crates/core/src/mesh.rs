//! Hierarchical quadtree mesh with 2:1 balancing and hanging-node polygons.
//!
//! Cells live on an integer lattice: every root tile spans `2^max_depth`
//! units, so corner coordinates stay exact under refinement and node
//! deduplication is a hash lookup instead of a floating-point tolerance
//! dance. An initial notch is carved as a topological slit: lattice nodes on
//! the notch interior are duplicated into a plus-side and a minus-side copy,
//! and each element references the copy matching its side.

use crate::error::{Error, Result};
use crate::geometry::{Rect, Vec2};
use std::collections::{BTreeSet, HashMap, HashSet};

pub type CellId = usize;

#[derive(Debug, Clone)]
pub struct QuadtreeCell {
    pub level: u32,
    /// South-west anchor in lattice units.
    pub ix: u64,
    pub iy: u64,
    pub parent: Option<CellId>,
    /// Children in [SW, SE, NW, NE] order, or `None` for a leaf.
    pub children: Option<[CellId; 4]>,
}

impl QuadtreeCell {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Which copy of a duplicated slit node an element references.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeSide {
    Neutral,
    /// Above a horizontal slit / right of a vertical slit.
    Plus,
    /// Below a horizontal slit / left of a vertical slit.
    Minus,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub ix: u64,
    pub iy: u64,
    pub side: NodeSide,
    pub pos: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Quad,
    Polygon,
}

/// One conforming element: a leaf cell with its perimeter nodes in CCW order
/// starting at the south-west corner. Four nodes make a bilinear quad; five
/// to eight (hanging nodes included) make a polygon.
#[derive(Debug, Clone)]
pub struct MeshElement {
    pub cell: CellId,
    pub nodes: Vec<u32>,
    pub kind: ElementKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlitOrientation {
    Horizontal,
    Vertical,
}

/// Topological slit along a lattice line. `lo..hi` is the varying-coordinate
/// span in lattice units; the mouth sits on the domain boundary and the tip
/// node stays shared between both sides.
#[derive(Debug, Clone, Copy)]
pub struct Slit {
    pub orientation: SlitOrientation,
    /// Fixed coordinate of the slit line in lattice units.
    pub line: u64,
    pub lo: u64,
    pub hi: u64,
    /// True when the tip is at `hi` (mouth at `lo`).
    pub tip_at_hi: bool,
}

impl Slit {
    /// Whether the node at varying-coordinate `t` on the slit line is
    /// duplicated. The mouth end is included, the tip excluded.
    pub fn duplicates(&self, t: u64) -> bool {
        if self.tip_at_hi {
            t >= self.lo && t < self.hi
        } else {
            t > self.lo && t <= self.hi
        }
    }

    pub fn tip_units(&self) -> u64 {
        if self.tip_at_hi {
            self.hi
        } else {
            self.lo
        }
    }
}

/// Per-element recovery error norms plus the domain norm.
#[derive(Debug, Clone)]
pub struct ErrorMap {
    pub per_element: Vec<f64>,
    pub global: f64,
}

#[derive(Debug, Clone)]
pub struct QuadtreeMesh {
    domain: Rect,
    base_level: u32,
    max_depth: u32,
    tiles_x: u64,
    tiles_y: u64,
    /// Lattice units per root tile edge: 2^max_depth.
    tile_units: u64,
    /// mm per lattice unit.
    unit: f64,
    cells: Vec<QuadtreeCell>,
    roots: Vec<CellId>,
    slit: Option<Slit>,
    nodes: Vec<Node>,
    elements: Vec<MeshElement>,
    /// Element indices incident to each node.
    node_elements: Vec<Vec<u32>>,
    /// Leaf cell id -> element index.
    cell_element: HashMap<CellId, usize>,
}

impl QuadtreeMesh {
    /// Builds a uniform mesh of `2^base_level` cells per root tile edge.
    ///
    /// Non-square domains are tiled by the smallest grid of square root
    /// tiles whose aspect ratio matches the domain.
    pub fn build_initial(domain: Rect, base_level: u32, max_depth: u32) -> Result<Self> {
        if domain.width <= 0.0 || domain.height <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "domain must have positive dimensions, got {} x {}",
                domain.width, domain.height
            )));
        }
        if max_depth < base_level {
            return Err(Error::Mesh(format!(
                "max_depth {} below base_level {}",
                max_depth, base_level
            )));
        }
        if max_depth > 16 {
            return Err(Error::Mesh("max_depth above 16 is not supported".into()));
        }
        let (tiles_x, tiles_y) = tiling_for(domain.width, domain.height)?;
        let tile_units = 1u64 << max_depth;
        let unit = domain.width / tiles_x as f64 / tile_units as f64;

        let mut mesh = QuadtreeMesh {
            domain,
            base_level,
            max_depth,
            tiles_x,
            tiles_y,
            tile_units,
            unit,
            cells: Vec::new(),
            roots: Vec::new(),
            slit: None,
            nodes: Vec::new(),
            elements: Vec::new(),
            node_elements: Vec::new(),
            cell_element: HashMap::new(),
        };
        for ty in 0..tiles_y {
            for tx in 0..tiles_x {
                let id = mesh.cells.len();
                mesh.cells.push(QuadtreeCell {
                    level: 0,
                    ix: tx * tile_units,
                    iy: ty * tile_units,
                    parent: None,
                    children: None,
                });
                mesh.roots.push(id);
            }
        }
        for _ in 0..base_level {
            let leaves: Vec<CellId> = mesh.leaf_ids();
            for id in leaves {
                mesh.split_cell(id)?;
            }
        }
        mesh.rebuild();
        Ok(mesh)
    }

    /// Carves the initial notch. Must be called before any solution is
    /// attached; regenerates nodes and elements.
    pub fn set_slit(&mut self, a: Vec2, b: Vec2) -> Result<()> {
        let slit = self.validate_slit(a, b)?;
        self.slit = Some(slit);
        self.rebuild();
        Ok(())
    }

    fn validate_slit(&self, a: Vec2, b: Vec2) -> Result<Slit> {
        let ia = self.to_units(a)?;
        let ib = self.to_units(b)?;
        let base_units = self.tile_units >> self.base_level;
        let on_base = |v: u64| v % base_units == 0;
        let (orientation, line, mut lo, mut hi) = if ia.1 == ib.1 && ia.0 != ib.0 {
            (SlitOrientation::Horizontal, ia.1, ia.0.min(ib.0), ia.0.max(ib.0))
        } else if ia.0 == ib.0 && ia.1 != ib.1 {
            (SlitOrientation::Vertical, ia.0, ia.1.min(ib.1), ia.1.max(ib.1))
        } else {
            return Err(Error::InvalidGeometry(
                "notch must be a non-degenerate axis-aligned segment".into(),
            ));
        };
        if !on_base(line) || !on_base(lo) || !on_base(hi) {
            return Err(Error::InvalidGeometry(
                "notch must lie on base-mesh grid lines with endpoints on base-mesh corners".into(),
            ));
        }
        let (max_line, max_t) = match orientation {
            SlitOrientation::Horizontal => (self.units_y(), self.units_x()),
            SlitOrientation::Vertical => (self.units_x(), self.units_y()),
        };
        if line == 0 || line == max_line {
            return Err(Error::InvalidGeometry(
                "notch line must be interior to the domain".into(),
            ));
        }
        let lo_on_boundary = lo == 0;
        let hi_on_boundary = hi == max_t;
        let tip_at_hi = match (lo_on_boundary, hi_on_boundary) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => {
                return Err(Error::InvalidGeometry(
                    "through-cracks are not supported; the notch tip must be interior".into(),
                ))
            }
            (false, false) => {
                return Err(Error::InvalidGeometry(
                    "the notch mouth must lie on the domain boundary".into(),
                ))
            }
        };
        if tip_at_hi {
            lo = lo.min(hi);
        } else {
            hi = hi.max(lo);
        }
        Ok(Slit {
            orientation,
            line,
            lo,
            hi,
            tip_at_hi,
        })
    }

    fn to_units(&self, p: Vec2) -> Result<(u64, u64)> {
        let fx = (p.x - self.domain.origin.x) / self.unit;
        let fy = (p.y - self.domain.origin.y) / self.unit;
        let ix = fx.round();
        let iy = fy.round();
        let tol = 1e-6;
        if (fx - ix).abs() > tol || (fy - iy).abs() > tol {
            return Err(Error::InvalidGeometry(format!(
                "point ({}, {}) does not lie on the lattice of the finest admissible grid",
                p.x, p.y
            )));
        }
        if ix < 0.0 || iy < 0.0 || ix as u64 > self.units_x() || iy as u64 > self.units_y() {
            return Err(Error::InvalidGeometry(format!(
                "point ({}, {}) outside the domain",
                p.x, p.y
            )));
        }
        Ok((ix as u64, iy as u64))
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn base_level(&self) -> u32 {
        self.base_level
    }

    /// mm per lattice unit.
    pub fn unit_length(&self) -> f64 {
        self.unit
    }

    pub fn slit(&self) -> Option<&Slit> {
        self.slit.as_ref()
    }

    pub fn cell(&self, id: CellId) -> &QuadtreeCell {
        &self.cells[id]
    }

    pub fn cell_size_units(&self, id: CellId) -> u64 {
        self.tile_units >> self.cells[id].level
    }

    pub fn cell_size_mm(&self, id: CellId) -> f64 {
        self.cell_size_units(id) as f64 * self.unit
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn elements(&self) -> &[MeshElement] {
        &self.elements
    }

    pub fn node_elements(&self) -> &[Vec<u32>] {
        &self.node_elements
    }

    pub fn element_of_cell(&self, id: CellId) -> Option<usize> {
        self.cell_element.get(&id).copied()
    }

    pub fn num_leaves(&self) -> usize {
        self.cells.iter().filter(|c| c.is_leaf()).count()
    }

    pub fn units_x(&self) -> u64 {
        self.tiles_x * self.tile_units
    }

    pub fn units_y(&self) -> u64 {
        self.tiles_y * self.tile_units
    }

    pub fn leaf_ids(&self) -> Vec<CellId> {
        (0..self.cells.len())
            .filter(|&i| self.cells[i].is_leaf())
            .collect()
    }

    pub fn max_leaf_level(&self) -> u32 {
        self.cells
            .iter()
            .filter(|c| c.is_leaf())
            .map(|c| c.level)
            .max()
            .unwrap_or(0)
    }

    /// Element vertex coordinates in CCW order.
    pub fn element_vertices(&self, elem: &MeshElement) -> Vec<Vec2> {
        elem.nodes
            .iter()
            .map(|&n| self.nodes[n as usize].pos)
            .collect()
    }

    fn split_cell(&mut self, id: CellId) -> Result<()> {
        let cell = &self.cells[id];
        if !cell.is_leaf() {
            return Err(Error::Mesh(format!("cell {id} is not a leaf")));
        }
        if cell.level >= self.max_depth {
            return Err(Error::Mesh(format!(
                "cell {id} already at maximum depth {}",
                self.max_depth
            )));
        }
        let half = self.cell_size_units(id) / 2;
        let (ix, iy, level) = (cell.ix, cell.iy, cell.level);
        let base = self.cells.len();
        let anchors = [
            (ix, iy),
            (ix + half, iy),
            (ix, iy + half),
            (ix + half, iy + half),
        ];
        for &(cx, cy) in &anchors {
            self.cells.push(QuadtreeCell {
                level: level + 1,
                ix: cx,
                iy: cy,
                parent: Some(id),
                children: None,
            });
        }
        self.cells[id].children = Some([base, base + 1, base + 2, base + 3]);
        Ok(())
    }

    /// Splits every flagged leaf into four children and regenerates the
    /// node and element lists. Flagging a non-leaf or a cell at maximum
    /// depth is an error.
    pub fn refine(&mut self, cells: &BTreeSet<CellId>) -> Result<()> {
        if cells.is_empty() {
            return Ok(());
        }
        for &id in cells {
            self.split_cell(id)?;
        }
        self.rebuild();
        Ok(())
    }

    /// Enforces the 2:1 rule: edge-adjacent leaves may differ by at most one
    /// level. Splits offending coarse cells until a fixpoint is reached.
    pub fn balance_2to1(&mut self) -> Result<()> {
        loop {
            let mut to_split: BTreeSet<CellId> = BTreeSet::new();
            let leaves = self.leaf_ids();
            for &id in &leaves {
                if !self.cells[id].is_leaf() {
                    continue;
                }
                let cell = &self.cells[id];
                let s = self.cell_size_units(id);
                let (ix, iy, level) = (cell.ix, cell.iy, cell.level);
                let probes = [
                    // (x, y, bias_x, bias_y) at each edge midpoint, biased outward
                    (ix + s, iy + s / 2, 1i8, 1i8),
                    (ix, iy + s / 2, -1, 1),
                    (ix + s / 2, iy + s, 1, 1),
                    (ix + s / 2, iy, 1, -1),
                ];
                for &(px, py, bx, by) in &probes {
                    if let Some(n) = self.find_leaf_units(px, py, bx, by) {
                        if self.cells[n].level + 1 < level {
                            to_split.insert(n);
                        }
                    }
                }
            }
            if to_split.is_empty() {
                break;
            }
            for id in to_split {
                if self.cells[id].is_leaf() {
                    self.split_cell(id)?;
                }
            }
        }
        self.rebuild();
        Ok(())
    }

    /// Leaf containing the lattice point `(x, y)`; the bias selects the side
    /// when the point sits on a cell boundary (+1 keeps the coordinate, -1
    /// steps one unit back). Returns `None` outside the domain.
    pub fn find_leaf_units(&self, x: u64, y: u64, bias_x: i8, bias_y: i8) -> Option<CellId> {
        let ex = if bias_x < 0 {
            x.checked_sub(1)?
        } else {
            x
        };
        let ey = if bias_y < 0 {
            y.checked_sub(1)?
        } else {
            y
        };
        if ex >= self.units_x() || ey >= self.units_y() {
            return None;
        }
        let tx = ex / self.tile_units;
        let ty = ey / self.tile_units;
        let mut id = self.roots[(ty * self.tiles_x + tx) as usize];
        while let Some(children) = self.cells[id].children {
            let half = self.cell_size_units(id) / 2;
            let cell = &self.cells[id];
            let dx = usize::from(ex >= cell.ix + half);
            let dy = usize::from(ey >= cell.iy + half);
            id = children[dx + 2 * dy];
        }
        Some(id)
    }

    /// Leaf containing a physical point, with an optional slit-side hint for
    /// points on the slit line.
    pub fn find_leaf_at(&self, p: Vec2, side: NodeSide) -> Option<CellId> {
        let fx = ((p.x - self.domain.origin.x) / self.unit)
            .clamp(0.0, self.units_x() as f64);
        let fy = ((p.y - self.domain.origin.y) / self.unit)
            .clamp(0.0, self.units_y() as f64);
        let near = |v: f64| (v - v.round()).abs() < 1e-9 * self.tile_units as f64;
        let (ix, bias_x) = if near(fx) {
            let r = fx.round() as u64;
            if r >= self.units_x() {
                (self.units_x(), -1)
            } else {
                (r, 1)
            }
        } else {
            (fx.floor() as u64, 1)
        };
        let (iy, bias_y) = if near(fy) {
            let r = fy.round() as u64;
            let default = if r >= self.units_y() { -1 } else { 1 };
            let b = match (self.slit, side) {
                (Some(s), NodeSide::Plus)
                    if s.orientation == SlitOrientation::Horizontal && r == s.line =>
                {
                    1
                }
                (Some(s), NodeSide::Minus)
                    if s.orientation == SlitOrientation::Horizontal && r == s.line =>
                {
                    -1
                }
                _ => default,
            };
            (r, b)
        } else {
            (fy.floor() as u64, 1)
        };
        // vertical slit biases the x side instead
        let (ix, bias_x) = match (self.slit, side) {
            (Some(s), NodeSide::Plus)
                if s.orientation == SlitOrientation::Vertical
                    && near(fx)
                    && fx.round() as u64 == s.line =>
            {
                (fx.round() as u64, 1)
            }
            (Some(s), NodeSide::Minus)
                if s.orientation == SlitOrientation::Vertical
                    && near(fx)
                    && fx.round() as u64 == s.line =>
            {
                (fx.round() as u64, -1)
            }
            _ => (ix, bias_x),
        };
        self.find_leaf_units(ix, iy, bias_x, bias_y)
    }

    /// Side of the slit a cell lies on; `Neutral` when no slit is set.
    pub fn cell_slit_side(&self, id: CellId) -> NodeSide {
        let Some(slit) = self.slit else {
            return NodeSide::Neutral;
        };
        let cell = &self.cells[id];
        match slit.orientation {
            SlitOrientation::Horizontal => {
                if cell.iy >= slit.line {
                    NodeSide::Plus
                } else {
                    NodeSide::Minus
                }
            }
            SlitOrientation::Vertical => {
                if cell.ix >= slit.line {
                    NodeSide::Plus
                } else {
                    NodeSide::Minus
                }
            }
        }
    }

    /// Regenerates nodes, elements and adjacency from the current leaves.
    fn rebuild(&mut self) {
        let mut leaves = self.leaf_ids();
        leaves.sort_by_key(|&id| {
            let c = &self.cells[id];
            (c.iy, c.ix, c.level)
        });

        let mut corner_set: HashSet<(u64, u64)> = HashSet::new();
        for &id in &leaves {
            let c = &self.cells[id];
            let s = self.cell_size_units(id);
            corner_set.insert((c.ix, c.iy));
            corner_set.insert((c.ix + s, c.iy));
            corner_set.insert((c.ix + s, c.iy + s));
            corner_set.insert((c.ix, c.iy + s));
        }

        let mut node_ids: HashMap<(u64, u64, NodeSide), u32> = HashMap::new();
        let mut nodes: Vec<Node> = Vec::new();
        let mut elements: Vec<MeshElement> = Vec::with_capacity(leaves.len());
        let mut cell_element = HashMap::new();

        for &id in &leaves {
            let cell_side = self.cell_slit_side(id);
            let c = &self.cells[id];
            let s = self.cell_size_units(id);
            let (ix, iy) = (c.ix, c.iy);
            // perimeter walk: corner, then the mid-edge node when present
            let corners = [
                (ix, iy),
                (ix + s, iy),
                (ix + s, iy + s),
                (ix, iy + s),
            ];
            let mids = [
                (ix + s / 2, iy),
                (ix + s, iy + s / 2),
                (ix + s / 2, iy + s),
                (ix, iy + s / 2),
            ];
            let mut verts: Vec<(u64, u64)> = Vec::with_capacity(8);
            for e in 0..4 {
                verts.push(corners[e]);
                if s >= 2 && corner_set.contains(&mids[e]) && !self.mid_on_slit_interior(mids[e]) {
                    verts.push(mids[e]);
                }
            }
            let node_list: Vec<u32> = verts
                .iter()
                .map(|&(vx, vy)| {
                    let side = self.node_side(vx, vy, cell_side);
                    *node_ids.entry((vx, vy, side)).or_insert_with(|| {
                        let nid = nodes.len() as u32;
                        nodes.push(Node {
                            ix: vx,
                            iy: vy,
                            side,
                            pos: Vec2::new(
                                self.domain.origin.x + vx as f64 * self.unit,
                                self.domain.origin.y + vy as f64 * self.unit,
                            ),
                        });
                        nid
                    })
                })
                .collect();
            let kind = if node_list.len() == 4 {
                ElementKind::Quad
            } else {
                ElementKind::Polygon
            };
            cell_element.insert(id, elements.len());
            elements.push(MeshElement {
                cell: id,
                nodes: node_list,
                kind,
            });
        }

        let mut node_elements = vec![Vec::new(); nodes.len()];
        for (e, elem) in elements.iter().enumerate() {
            for &n in &elem.nodes {
                node_elements[n as usize].push(e as u32);
            }
        }

        self.nodes = nodes;
        self.elements = elements;
        self.node_elements = node_elements;
        self.cell_element = cell_element;
    }

    /// A candidate hanging node on the slit interior belongs to the finer
    /// cells across the slit, not to this element.
    fn mid_on_slit_interior(&self, mid: (u64, u64)) -> bool {
        let Some(slit) = self.slit else {
            return false;
        };
        match slit.orientation {
            SlitOrientation::Horizontal => mid.1 == slit.line && slit.duplicates(mid.0),
            SlitOrientation::Vertical => mid.0 == slit.line && slit.duplicates(mid.1),
        }
    }

    fn node_side(&self, vx: u64, vy: u64, cell_side: NodeSide) -> NodeSide {
        let Some(slit) = self.slit else {
            return NodeSide::Neutral;
        };
        let on_interior = match slit.orientation {
            SlitOrientation::Horizontal => vy == slit.line && slit.duplicates(vx),
            SlitOrientation::Vertical => vx == slit.line && slit.duplicates(vy),
        };
        if on_interior {
            cell_side
        } else {
            NodeSide::Neutral
        }
    }

    /// Leaves whose element error exceeds the tolerance.
    pub fn flag_by_error(&self, errors: &ErrorMap, tol: f64) -> BTreeSet<CellId> {
        errors
            .per_element
            .iter()
            .enumerate()
            .filter(|&(_, &e)| e > tol)
            .map(|(i, _)| self.elements[i].cell)
            .collect()
    }

    /// Same as [`flag_by_error`] but drops cells already at maximum depth,
    /// which cannot be split further.
    pub fn flag_refinable(&self, errors: &ErrorMap, tol: f64) -> BTreeSet<CellId> {
        self.flag_by_error(errors, tol)
            .into_iter()
            .filter(|&id| self.cells[id].level < self.max_depth)
            .collect()
    }

    /// Brute-force audit of the 2:1 rule over all leaf pairs. Returns the
    /// violating pairs; empty means balanced.
    pub fn audit_balance(&self) -> Vec<(CellId, CellId)> {
        let leaves = self.leaf_ids();
        let mut bad = Vec::new();
        for (i, &a) in leaves.iter().enumerate() {
            let ca = &self.cells[a];
            let sa = self.cell_size_units(a);
            for &b in leaves.iter().skip(i + 1) {
                let cb = &self.cells[b];
                let sb = self.cell_size_units(b);
                let share_vertical = (ca.ix + sa == cb.ix || cb.ix + sb == ca.ix)
                    && overlap(ca.iy, ca.iy + sa, cb.iy, cb.iy + sb);
                let share_horizontal = (ca.iy + sa == cb.iy || cb.iy + sb == ca.iy)
                    && overlap(ca.ix, ca.ix + sa, cb.ix, cb.ix + sb);
                if (share_vertical || share_horizontal)
                    && ca.level.abs_diff(cb.level) > 1
                {
                    bad.push((a, b));
                }
            }
        }
        bad
    }

    /// Node ids on one edge of the domain boundary.
    pub fn boundary_nodes(&self, edge: BoundaryEdge) -> Vec<u32> {
        let (max_x, max_y) = (self.units_x(), self.units_y());
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| match edge {
                BoundaryEdge::Left => n.ix == 0,
                BoundaryEdge::Right => n.ix == max_x,
                BoundaryEdge::Bottom => n.iy == 0,
                BoundaryEdge::Top => n.iy == max_y,
            })
            .map(|(i, _)| i as u32)
            .collect()
    }

    /// Total element area; used by the conservation checks.
    pub fn total_area(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| crate::geometry::polygon_area(&self.element_vertices(e)))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryEdge {
    Left,
    Right,
    Bottom,
    Top,
}

fn overlap(a0: u64, a1: u64, b0: u64, b1: u64) -> bool {
    a0.max(b0) < a1.min(b1)
}

/// Smallest grid of square tiles matching the domain aspect ratio.
pub fn tiling_for(width: f64, height: f64) -> Result<(u64, u64)> {
    for ty in 1..=32u64 {
        let tx = width / height * ty as f64;
        if (tx - tx.round()).abs() < 1e-9 && tx.round() >= 1.0 {
            return Ok((tx.round() as u64, ty));
        }
    }
    Err(Error::InvalidGeometry(format!(
        "domain aspect ratio {width}:{height} cannot be tiled by square cells (1..32 tiles)"
    )))
}
