//! Staggered (MAC) grid on the truncated cusp.
//!
//! The mesh is a stack of dyadic blocks `E_k = (2^{-(k+1)}, 2^{-k}) × (0, ·)`,
//! `k = 0, ..., blocks-1`, so `Ω_i ∩ mesh = E_i ∪ E_{i+1}` and `B_i = E_i`.
//! Every block has the same number of uniform columns. Row spacing is
//! `2^{-round(γk)} / rows`, so the rows of a block refine those of its
//! right-hand neighbour by an integer power of two, and the horizontal
//! velocity faces on a block interface nest inside the coarse ones.
//!
//! Cells are kept when their center lies in `Ω`; their areas are the exact
//! areas of the cell clipped to `Ω`, and the top kept cell of each column
//! also absorbs the slivers of the dropped cells above it. Normal velocities live on faces:
//! `U` faces carry the `x₁` component, `V` faces the `x₂` component.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::CuspDomain;

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct MeshConfig {
    pub gamma: f64,
    /// Number of dyadic blocks; the mesh covers `x₁ > 2^{-blocks}`.
    pub blocks: usize,
    /// Columns per block.
    pub columns: usize,
    /// Nominal rows per block.
    pub rows: usize,
}

impl MeshConfig {
    /// Mesh for `n_sub` subdomains at resolution `res`: each subdomain spans
    /// `res` columns and about `res` rows.
    pub fn for_subdomains(gamma: f64, n_sub: usize, res: usize) -> Self {
        Self { gamma, blocks: n_sub + 1, columns: (res / 2).max(2), rows: res.max(2) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Block {
    pub index: usize,
    pub x_left: f64,
    pub x_right: f64,
    pub h1: f64,
    pub h2: f64,
    pub rows: usize,
    /// Rows of this block per row of block `index - 1` (1 for block 0).
    pub refinement: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Cell {
    pub block: usize,
    pub col: usize,
    pub row: usize,
    pub center: [f64; 2],
    /// Centroid of the clipped cell.
    pub centroid: [f64; 2],
    /// Area of the clipped cell.
    pub area: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FaceKind {
    U,
    V,
}

#[derive(Clone, Debug, Serialize)]
pub struct Face {
    pub kind: FaceKind,
    pub block: usize,
    pub center: [f64; 2],
    pub length: f64,
    /// Cells on the negative (west/south) and positive (east/north) side.
    pub cells: [Option<usize>; 2],
}

impl Face {
    /// Both neighbours are mesh cells, so the face can carry flux.
    pub fn is_interior(&self) -> bool {
        self.cells[0].is_some() && self.cells[1].is_some()
    }
}

/// `w · (Σ c_f v_f)²`, one contribution to the discrete Dirichlet energy,
/// located at abscissa `x1` for weighting.
#[derive(Clone, Debug)]
pub struct EnergyTerm {
    pub coeffs: Vec<(usize, f64)>,
    pub weight: f64,
    pub x1: f64,
}

#[derive(Clone, Debug)]
pub struct CuspMesh {
    config: MeshConfig,
    domain: CuspDomain,
    blocks: Vec<Block>,
    cells: Vec<Cell>,
    faces: Vec<Face>,
    div_rows: Vec<Vec<(usize, f64)>>,
    terms: Vec<EnergyTerm>,
    block_cells: Vec<std::ops::Range<usize>>,
}

impl CuspMesh {
    pub fn new(config: MeshConfig) -> Result<Self> {
        let domain = CuspDomain::new(config.gamma)?;
        if config.blocks == 0 || config.columns < 2 || config.rows < 2 {
            return Err(Error::Domain(format!("mesh needs at least one block and 2x2 cells per block, got {config:?}")));
        }
        Builder::new(config, domain).build()
    }

    pub fn config(&self) -> &MeshConfig {
        &self.config
    }

    pub fn domain(&self) -> &CuspDomain {
        &self.domain
    }

    pub fn gamma(&self) -> f64 {
        self.config.gamma
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    /// Cell ids of block `k`, a contiguous range.
    pub fn block_cells(&self, k: usize) -> std::ops::Range<usize> {
        self.block_cells.get(k).cloned().unwrap_or(0..0)
    }

    /// Discrete area of block `k`.
    pub fn block_area(&self, k: usize) -> f64 {
        self.block_cells(k).map(|c| self.cells[c].area).sum()
    }

    /// Number of subdomains `Ω_i` fully represented on the mesh.
    pub fn max_subdomains(&self) -> usize {
        self.blocks.len() - 1
    }

    /// Cells of `Ω_i`, i.e. of blocks `i` and `i + 1`.
    pub fn subdomain_cells(&self, i: usize) -> Result<std::ops::Range<usize>> {
        if i + 1 >= self.blocks.len() {
            return Err(Error::Domain(format!(
                "subdomain {i} needs blocks {i} and {}, mesh has {}",
                i + 1,
                self.blocks.len()
            )));
        }
        // blocks are stored in order, so Ω_i is contiguous
        Ok(self.block_cells[i].start..self.block_cells[i + 1].end)
    }

    /// Entries `(face, coefficient)` with `Σ coefficient · v_face = ∫_cell div v`.
    pub fn div_row(&self, cell: usize) -> &[(usize, f64)] {
        &self.div_rows[cell]
    }

    pub fn energy_terms(&self) -> &[EnergyTerm] {
        &self.terms
    }
}

struct Builder {
    config: MeshConfig,
    domain: CuspDomain,
    blocks: Vec<Block>,
    cells: Vec<Cell>,
    cell_at: Vec<Vec<usize>>,
    faces: Vec<Face>,
    u_at: Vec<Vec<usize>>,
    v_at: Vec<Vec<usize>>,
}

impl Builder {
    fn new(config: MeshConfig, domain: CuspDomain) -> Self {
        let g = config.gamma;
        let m = config.columns;
        let mut blocks = Vec::with_capacity(config.blocks);
        let mut prev_e = 0i64;
        for k in 0..config.blocks {
            let x_left = (-(k as f64) - 1.0).exp2();
            let x_right = (-(k as f64)).exp2();
            let e = (g * k as f64).round() as i64;
            let h2 = (-(e as f64)).exp2() / config.rows as f64;
            let rows = ((domain.height(x_right) / h2) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let refinement = if k == 0 { 1 } else { 1usize << (e - prev_e) };
            prev_e = e;
            blocks.push(Block { index: k, x_left, x_right, h1: (x_right - x_left) / m as f64, h2, rows, refinement });
        }
        Self {
            config,
            domain,
            blocks,
            cells: Vec::new(),
            cell_at: Vec::new(),
            faces: Vec::new(),
            u_at: Vec::new(),
            v_at: Vec::new(),
        }
    }

    fn last(&self) -> usize {
        self.blocks.len() - 1
    }

    fn cell(&self, k: usize, a: usize, b: usize) -> Option<usize> {
        let blk = &self.blocks[k];
        if a >= self.config.columns || b >= blk.rows {
            return None;
        }
        let id = self.cell_at[k][a * blk.rows + b];
        (id != NONE).then_some(id)
    }

    /// `U` face on column line `a` (0..=columns), row `b` of block `k`.
    fn u(&self, k: usize, a: usize, b: usize) -> Option<usize> {
        let blk = &self.blocks[k];
        if a > self.config.columns || b >= blk.rows {
            return None;
        }
        let id = self.u_at[k][a * blk.rows + b];
        (id != NONE).then_some(id)
    }

    /// `V` face in column `a`, row line `j` (0..=rows) of block `k`.
    fn v(&self, k: usize, a: usize, j: usize) -> Option<usize> {
        let blk = &self.blocks[k];
        if a >= self.config.columns || j > blk.rows {
            return None;
        }
        let id = self.v_at[k][a * (blk.rows + 1) + j];
        (id != NONE).then_some(id)
    }

    fn build(mut self) -> Result<CuspMesh> {
        let m = self.config.columns;
        let g = self.config.gamma;
        let mut block_cells = Vec::new();
        for k in 0..self.blocks.len() {
            let blk = self.blocks[k].clone();
            let start = self.cells.len();
            let mut at = vec![NONE; m * blk.rows];
            for a in 0..m {
                let x0 = blk.x_left + a as f64 * blk.h1;
                let x1 = if a + 1 == m { blk.x_right } else { x0 + blk.h1 };
                let xc = 0.5 * (x0 + x1);
                let top = self.domain.height(xc);
                for b in 0..blk.rows {
                    let y0 = b as f64 * blk.h2;
                    let yc = y0 + 0.5 * blk.h2;
                    if yc >= top {
                        break;
                    }
                    let (area, mx, my) = clipped_moments(x0, x1, y0, y0 + blk.h2, g);
                    at[a * blk.rows + b] = self.cells.len();
                    self.cells.push(Cell {
                        block: k,
                        col: a,
                        row: b,
                        center: [xc, yc],
                        centroid: [mx / area, my / area],
                        area,
                    });
                }
                // the partial cells above the last kept one are merged into it,
                // so every column carries its exact share of |Ω|
                let kept = (0..blk.rows).take_while(|&b| at[a * blk.rows + b] != NONE).count();
                if kept > 0 {
                    let y_top = kept as f64 * blk.h2;
                    let (extra, ex, ey) = clipped_moments(x0, x1, y_top, self.domain.height(x1).max(y_top), g);
                    if extra > 0.0 {
                        let c = self.cells.last_mut().expect("column has a kept cell");
                        let (mx, my) = (c.centroid[0] * c.area + ex, c.centroid[1] * c.area + ey);
                        c.area += extra;
                        c.centroid = [mx / c.area, my / c.area];
                    }
                }
            }
            self.cell_at.push(at);
            block_cells.push(start..self.cells.len());
        }
        self.build_faces();
        let div_rows = self.build_div();
        let terms = self.build_terms();
        Ok(CuspMesh {
            config: self.config,
            domain: self.domain,
            blocks: self.blocks,
            cells: self.cells,
            faces: self.faces,
            div_rows,
            terms,
            block_cells,
        })
    }

    fn build_faces(&mut self) {
        let m = self.config.columns;
        let last = self.last();
        for k in 0..self.blocks.len() {
            let blk = self.blocks[k].clone();
            let mut u_at = vec![NONE; (m + 1) * blk.rows];
            let first_line = if k == last { 0 } else { 1 };
            for a in first_line..=m {
                for b in 0..blk.rows {
                    let west = if a >= 1 { self.cell(k, a - 1, b) } else { None };
                    let east = if a < m {
                        self.cell(k, a, b)
                    } else if k == 0 {
                        None
                    } else {
                        self.cell(k - 1, 0, b / blk.refinement)
                    };
                    if west.is_none() && east.is_none() {
                        continue;
                    }
                    u_at[a * blk.rows + b] = self.faces.len();
                    self.faces.push(Face {
                        kind: FaceKind::U,
                        block: k,
                        center: [blk.x_left + a as f64 * blk.h1, (b as f64 + 0.5) * blk.h2],
                        length: blk.h2,
                        cells: [west, east],
                    });
                }
            }
            self.u_at.push(u_at);
        }
        for k in 0..self.blocks.len() {
            let blk = self.blocks[k].clone();
            let mut v_at = vec![NONE; m * (blk.rows + 1)];
            for a in 0..m {
                for j in 0..=blk.rows {
                    let south = if j >= 1 { self.cell(k, a, j - 1) } else { None };
                    let north = self.cell(k, a, j);
                    if south.is_none() && north.is_none() {
                        continue;
                    }
                    v_at[a * (blk.rows + 1) + j] = self.faces.len();
                    self.faces.push(Face {
                        kind: FaceKind::V,
                        block: k,
                        center: [blk.x_left + (a as f64 + 0.5) * blk.h1, j as f64 * blk.h2],
                        length: blk.h1,
                        cells: [south, north],
                    });
                }
            }
            self.v_at.push(v_at);
        }
    }

    /// `U` faces forming the west side of cell `(k, a, b)` with their share of its length.
    fn west_faces(&self, k: usize, a: usize, b: usize) -> Vec<(usize, f64)> {
        if a >= 1 || k == self.last() {
            return self.u(k, a, b).map(|f| (f, 1.0)).into_iter().collect();
        }
        let r = self.blocks[k + 1].refinement;
        let m = self.config.columns;
        (0..r)
            .filter_map(|s| self.u(k + 1, m, b * r + s))
            .map(|f| (f, 1.0 / r as f64))
            .collect()
    }

    fn build_div(&self) -> Vec<Vec<(usize, f64)>> {
        self.cells
            .iter()
            .map(|c| {
                let blk = &self.blocks[c.block];
                let (k, a, b) = (c.block, c.col, c.row);
                let mut row = Vec::with_capacity(6);
                if let Some(f) = self.u(k, a + 1, b) {
                    row.push((f, blk.h2));
                }
                for (f, share) in self.west_faces(k, a, b) {
                    row.push((f, -share * blk.h2));
                }
                if let Some(f) = self.v(k, a, b + 1) {
                    row.push((f, blk.h1));
                }
                if let Some(f) = self.v(k, a, b) {
                    row.push((f, -blk.h1));
                }
                row
            })
            .collect()
    }

    fn build_terms(&self) -> Vec<EnergyTerm> {
        let m = self.config.columns;
        let last = self.last();
        let mut terms = Vec::new();
        let mut push = |coeffs: Vec<(Option<usize>, f64)>, weight: f64, x1: f64| {
            let coeffs: Vec<(usize, f64)> = coeffs
                .into_iter()
                .filter_map(|(f, c)| f.map(|f| (f, c)))
                .filter(|&(f, _)| self.faces[f].is_interior())
                .collect();
            if !coeffs.is_empty() {
                terms.push(EnergyTerm { coeffs, weight, x1 });
            }
        };
        // ∂₁u₁ and ∂₂u₂ at cell centers
        for c in &self.cells {
            let blk = &self.blocks[c.block];
            let (k, a, b) = (c.block, c.col, c.row);
            let mut d1 = vec![(self.u(k, a + 1, b), 1.0)];
            d1.extend(self.west_faces(k, a, b).into_iter().map(|(f, s)| (Some(f), -s)));
            push(d1, c.area / (blk.h1 * blk.h1), c.centroid[0]);
            let d2 = vec![(self.v(k, a, b + 1), 1.0), (self.v(k, a, b), -1.0)];
            push(d2, c.area / (blk.h2 * blk.h2), c.centroid[0]);
        }
        // ∂₂u₁ between vertically adjacent U faces
        for (k, blk) in self.blocks.iter().enumerate() {
            let first_line = if k == last { 0 } else { 1 };
            for a in first_line..=m {
                let width = if a == 0 {
                    0.5 * blk.h1
                } else if a < m {
                    blk.h1
                } else if k == 0 {
                    0.5 * blk.h1
                } else {
                    0.5 * (blk.h1 + self.blocks[k - 1].h1)
                };
                let x1 = blk.x_left + a as f64 * blk.h1;
                for b in 0..=blk.rows {
                    let upper = if b < blk.rows { self.u(k, a, b) } else { None };
                    let lower = if b >= 1 { self.u(k, a, b - 1) } else { None };
                    let dist = if b == 0 { 0.5 * blk.h2 } else { blk.h2 };
                    push(vec![(upper, 1.0), (lower, -1.0)], width / dist, x1);
                }
            }
        }
        // ∂₁u₂ between horizontally adjacent V faces
        for (k, blk) in self.blocks.iter().enumerate() {
            for j in 0..=blk.rows {
                for a in 1..m {
                    let x1 = blk.x_left + a as f64 * blk.h1;
                    push(vec![(self.v(k, a, j), 1.0), (self.v(k, a - 1, j), -1.0)], blk.h2 / blk.h1, x1);
                }
                let wall = blk.h2 / (0.5 * blk.h1);
                if k == 0 {
                    push(vec![(self.v(k, m - 1, j), 1.0)], wall, blk.x_right);
                } else {
                    let coarse = &self.blocks[k - 1];
                    let r = blk.refinement;
                    let (jc, s) = (j / r, j % r);
                    let theta = s as f64 / r as f64;
                    let mut c = vec![(self.v(k, m - 1, j), 1.0), (self.v(k - 1, 0, jc), -(1.0 - theta))];
                    if s > 0 {
                        c.push((self.v(k - 1, 0, jc + 1), -theta));
                    }
                    let dist = 0.5 * (blk.h1 + coarse.h1);
                    push(c, blk.h2 / dist, blk.x_right);
                }
                let beyond_fine = k < last && j * self.blocks[k + 1].refinement > self.blocks[k + 1].rows;
                if k == last || beyond_fine {
                    push(vec![(self.v(k, 0, j), 1.0)], wall, blk.x_left);
                }
            }
        }
        terms
    }
}

/// Area and first moments of `[x0,x1] × [y0,y1] ∩ {y < x^γ}`.
fn clipped_moments(x0: f64, x1: f64, y0: f64, y1: f64, g: f64) -> (f64, f64, f64) {
    let inv = 1.0 / g;
    let xa = y0.powf(inv).clamp(x0, x1);
    let xb = y1.powf(inv).clamp(x0, x1);
    let h = y1 - y0;
    // curved part over (xa, xb), full-height part over (xb, x1)
    let p = |x: f64, e: f64| x.powf(e) / e;
    let area = p(xb, g + 1.0) - p(xa, g + 1.0) - y0 * (xb - xa) + (x1 - xb) * h;
    let mx = p(xb, g + 2.0) - p(xa, g + 2.0) - 0.5 * y0 * (xb * xb - xa * xa) + 0.5 * (x1 * x1 - xb * xb) * h;
    let my = 0.5 * (p(xb, 2.0 * g + 1.0) - p(xa, 2.0 * g + 1.0) - y0 * y0 * (xb - xa))
        + 0.5 * (x1 - xb) * (y1 * y1 - y0 * y0);
    (area, mx, my)
}
