//! The 12x20 apple/garbage gridworld.
//!
//! Garbage accumulates in the upper half of the grid and suppresses the
//! apple growth rate in the lower half (the coupled dynamics that create
//! the commons dilemma). Agents move, collect apples at their own cell,
//! or clear every garbage cell inside their field of view.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signed cell index. Garbage-half cells map to +1..=+120, apple-half
/// cells to -1..=-120; 0 is never produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex(pub i32);

/// Grid coordinate, row-major with row 0 at the top (garbage side).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }
}

/// The fixed 12x20 grid split into a garbage half (rows 0-5) and an
/// apple half (rows 6-11), 120 cells each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridGeometry {
    rows: usize,
    cols: usize,
}

impl Default for GridGeometry {
    fn default() -> Self {
        GridGeometry { rows: 12, cols: 20 }
    }
}

impl GridGeometry {
    pub fn standard() -> Self {
        Self::default()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_cells(&self) -> usize {
        self.rows * self.cols
    }

    /// Rows strictly below this bound form the garbage half.
    pub fn garbage_rows(&self) -> usize {
        self.rows / 2
    }

    pub fn is_garbage_half(&self, cell: Cell) -> bool {
        cell.row < self.garbage_rows()
    }

    pub fn is_apple_half(&self, cell: Cell) -> bool {
        !self.is_garbage_half(cell)
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.rows && cell.col < self.cols
    }

    /// Signed index of a cell: +(row*cols + col + 1) in the garbage half,
    /// -((row - garbage_rows)*cols + col + 1) in the apple half.
    pub fn cell_index(&self, row: usize, col: usize) -> Result<CellIndex> {
        if row >= self.rows || col >= self.cols {
            return Err(Error::InvalidCoordinate {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        let idx = if row < self.garbage_rows() {
            (row * self.cols + col + 1) as i32
        } else {
            -(((row - self.garbage_rows()) * self.cols + col + 1) as i32)
        };
        Ok(CellIndex(idx))
    }

    /// Flat row-major offset, used for grid storage.
    pub fn flat(&self, cell: Cell) -> usize {
        cell.row * self.cols + cell.col
    }
}

/// What a grid cell holds. Apples only ever appear in the apple half,
/// garbage only in the garbage half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellContent {
    Empty,
    Apple,
    Garbage,
}

/// One cell as seen through an observation window; cells outside the
/// grid read as `Border`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservedCell {
    Empty,
    Apple,
    Garbage,
    Border,
}

impl From<CellContent> for ObservedCell {
    fn from(c: CellContent) -> Self {
        match c {
            CellContent::Empty => ObservedCell::Empty,
            CellContent::Apple => ObservedCell::Apple,
            CellContent::Garbage => ObservedCell::Garbage,
        }
    }
}

/// Environment constants. `delta_g` is the per-step spawn probability of
/// garbage in each empty garbage-half cell; `sigma` is the maximum apple
/// growth rate; `delta_s_g` the garbage count at which apple growth hits
/// zero. Rewards are `r_a` per apple and `r_g` per garbage unit cleared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvParams {
    pub delta_g: f64,
    pub sigma: f64,
    pub delta_s_g: usize,
    pub r_a: f64,
    pub r_g: f64,
    pub view: usize,
    pub initial_apple_density: f64,
    pub initial_garbage_density: f64,
}

impl Default for EnvParams {
    // Default constants are calibrated so that a settled cleaner's income
    // sits inside the low target band while apples stay the richer prize:
    // garbage inflow is thin (delta_g), apple regrowth saturates fast
    // (sigma = 1), and the wide view lets three cleaners cover the whole
    // garbage half. Episodes open on a dirty field so cleaning pays from
    // the first trials.
    fn default() -> Self {
        EnvParams {
            delta_g: 0.0165,
            sigma: 1.0,
            delta_s_g: 60,
            r_a: 10.0,
            r_g: 5.0,
            view: 3,
            initial_apple_density: 0.3,
            initial_garbage_density: 0.3,
        }
    }
}

/// Apple spawn probability given the current garbage count: linear in
/// the garbage count, `sigma` at zero garbage, clamped to zero at the
/// saturation count and beyond.
pub fn apple_growth_rate(n_garbage: usize, params: &EnvParams) -> f64 {
    // Written so both boundaries are exact: n = 0 gives sigma, n at or
    // beyond saturation gives 0 with no rounding residue.
    let raw = params.sigma * (1.0 - n_garbage as f64 / params.delta_s_g as f64);
    raw.clamp(0.0, params.sigma)
}

/// The seven primitive actions. Moves into a wall resolve as Stay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentAction {
    MoveUp,
    MoveDown,
    MoveLeft,
    MoveRight,
    Stay,
    Collect,
    Clean,
}

impl AgentAction {
    pub const ALL: [AgentAction; 7] = [
        AgentAction::MoveUp,
        AgentAction::MoveDown,
        AgentAction::MoveLeft,
        AgentAction::MoveRight,
        AgentAction::Stay,
        AgentAction::Collect,
        AgentAction::Clean,
    ];

    pub const COUNT: usize = 7;

    pub fn index(self) -> usize {
        match self {
            AgentAction::MoveUp => 0,
            AgentAction::MoveDown => 1,
            AgentAction::MoveLeft => 2,
            AgentAction::MoveRight => 3,
            AgentAction::Stay => 4,
            AgentAction::Collect => 5,
            AgentAction::Clean => 6,
        }
    }

    pub fn from_index(i: usize) -> Option<AgentAction> {
        Self::ALL.get(i).copied()
    }
}

/// Partial observation: the agent's signed cell index plus the
/// (2v+1) x (2v+1) content window around it, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub center_index: CellIndex,
    pub view: usize,
    pub window: Vec<ObservedCell>,
}

impl Observation {
    pub fn side(&self) -> usize {
        2 * self.view + 1
    }
}

/// Full world state: grid contents, agent positions, cached resource
/// counts, and the environment's own random stream.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    geometry: GridGeometry,
    params: EnvParams,
    cells: Vec<CellContent>,
    agent_positions: Vec<Cell>,
    n_garbage: usize,
    n_apples: usize,
    rng: ChaCha8Rng,
}

impl EnvState {
    /// Fresh episode state: apple-half cells filled with probability
    /// `initial_apple_density`, garbage-half cells with
    /// `initial_garbage_density`, agents at the given placements.
    pub fn new(params: EnvParams, placements: &[Cell], seed: u64) -> Result<Self> {
        let geometry = GridGeometry::standard();
        for &cell in placements {
            if !geometry.contains(cell) {
                return Err(Error::InvalidCoordinate {
                    row: cell.row,
                    col: cell.col,
                    rows: geometry.rows(),
                    cols: geometry.cols(),
                });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cells = vec![CellContent::Empty; geometry.n_cells()];
        let mut n_garbage = 0;
        let mut n_apples = 0;
        for row in 0..geometry.rows() {
            for col in 0..geometry.cols() {
                let cell = Cell::new(row, col);
                if geometry.is_garbage_half(cell) {
                    if params.initial_garbage_density > 0.0
                        && rng.gen_bool(params.initial_garbage_density)
                    {
                        cells[geometry.flat(cell)] = CellContent::Garbage;
                        n_garbage += 1;
                    }
                } else if params.initial_apple_density > 0.0
                    && rng.gen_bool(params.initial_apple_density)
                {
                    cells[geometry.flat(cell)] = CellContent::Apple;
                    n_apples += 1;
                }
            }
        }
        Ok(EnvState {
            geometry,
            params,
            cells,
            agent_positions: placements.to_vec(),
            n_garbage,
            n_apples,
            rng,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn params(&self) -> &EnvParams {
        &self.params
    }

    pub fn n_agents(&self) -> usize {
        self.agent_positions.len()
    }

    pub fn n_garbage(&self) -> usize {
        self.n_garbage
    }

    pub fn n_apples(&self) -> usize {
        self.n_apples
    }

    pub fn agent_position(&self, agent: usize) -> Result<Cell> {
        self.agent_positions
            .get(agent)
            .copied()
            .ok_or(Error::UnknownAgent(agent))
    }

    pub fn cell(&self, row: usize, col: usize) -> Result<CellContent> {
        let cell = Cell::new(row, col);
        if !self.geometry.contains(cell) {
            return Err(Error::InvalidCoordinate {
                row,
                col,
                rows: self.geometry.rows(),
                cols: self.geometry.cols(),
            });
        }
        Ok(self.cells[self.geometry.flat(cell)])
    }

    /// Place content directly, for scenario setup. Rejects content on
    /// the wrong half.
    pub fn set_cell(&mut self, row: usize, col: usize, content: CellContent) -> Result<()> {
        let cell = Cell::new(row, col);
        if !self.geometry.contains(cell) {
            return Err(Error::InvalidCoordinate {
                row,
                col,
                rows: self.geometry.rows(),
                cols: self.geometry.cols(),
            });
        }
        let half_ok = match content {
            CellContent::Empty => true,
            CellContent::Apple => self.geometry.is_apple_half(cell),
            CellContent::Garbage => self.geometry.is_garbage_half(cell),
        };
        if !half_ok {
            return Err(Error::Metrics(format!(
                "cannot place {content:?} at ({row}, {col}): wrong half"
            )));
        }
        let flat = self.geometry.flat(cell);
        match self.cells[flat] {
            CellContent::Apple => self.n_apples -= 1,
            CellContent::Garbage => self.n_garbage -= 1,
            CellContent::Empty => {}
        }
        self.cells[flat] = content;
        match content {
            CellContent::Apple => self.n_apples += 1,
            CellContent::Garbage => self.n_garbage += 1,
            CellContent::Empty => {}
        }
        Ok(())
    }

    /// Recount resources from the grid; must always match the cached counts.
    pub fn recount(&self) -> (usize, usize) {
        let mut g = 0;
        let mut a = 0;
        for &c in &self.cells {
            match c {
                CellContent::Garbage => g += 1,
                CellContent::Apple => a += 1,
                CellContent::Empty => {}
            }
        }
        (g, a)
    }

    /// Observation window for one agent. Does not mutate state.
    pub fn observe(&self, agent: usize) -> Result<Observation> {
        let pos = self.agent_position(agent)?;
        let v = self.params.view as isize;
        let side = (2 * v + 1) as usize;
        let mut window = Vec::with_capacity(side * side);
        for dr in -v..=v {
            for dc in -v..=v {
                let r = pos.row as isize + dr;
                let c = pos.col as isize + dc;
                if r < 0
                    || c < 0
                    || r >= self.geometry.rows() as isize
                    || c >= self.geometry.cols() as isize
                {
                    window.push(ObservedCell::Border);
                } else {
                    let cell = Cell::new(r as usize, c as usize);
                    window.push(self.cells[self.geometry.flat(cell)].into());
                }
            }
        }
        Ok(Observation {
            center_index: self.geometry.cell_index(pos.row, pos.col)?,
            view: self.params.view,
            window,
        })
    }

    /// Apply one joint action. Agents resolve sequentially in a random
    /// permutation drawn from the environment stream, so contested
    /// resources go to the earlier agent. Returns per-agent rewards.
    pub fn resolve_actions(&mut self, actions: &[AgentAction]) -> Result<Vec<f64>> {
        let n = self.agent_positions.len();
        if actions.len() != n {
            return Err(Error::ActionCountMismatch {
                expected: n,
                got: actions.len(),
            });
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut self.rng);
        let mut rewards = vec![0.0; n];
        for &i in &order {
            let pos = self.agent_positions[i];
            match actions[i] {
                AgentAction::MoveUp => {
                    if pos.row > 0 {
                        self.agent_positions[i].row -= 1;
                    }
                }
                AgentAction::MoveDown => {
                    if pos.row + 1 < self.geometry.rows() {
                        self.agent_positions[i].row += 1;
                    }
                }
                AgentAction::MoveLeft => {
                    if pos.col > 0 {
                        self.agent_positions[i].col -= 1;
                    }
                }
                AgentAction::MoveRight => {
                    if pos.col + 1 < self.geometry.cols() {
                        self.agent_positions[i].col += 1;
                    }
                }
                AgentAction::Stay => {}
                AgentAction::Collect => {
                    let flat = self.geometry.flat(pos);
                    if self.cells[flat] == CellContent::Apple {
                        self.cells[flat] = CellContent::Empty;
                        self.n_apples -= 1;
                        rewards[i] = self.params.r_a;
                    }
                }
                AgentAction::Clean => {
                    let cleared = self.clear_garbage_in_view(pos);
                    rewards[i] = cleared as f64 * self.params.r_g;
                }
            }
        }
        Ok(rewards)
    }

    /// Remove every garbage cell in the view window centered at `pos`;
    /// returns how many were removed.
    fn clear_garbage_in_view(&mut self, pos: Cell) -> usize {
        let v = self.params.view as isize;
        let mut cleared = 0;
        for dr in -v..=v {
            for dc in -v..=v {
                let r = pos.row as isize + dr;
                let c = pos.col as isize + dc;
                if r < 0
                    || c < 0
                    || r >= self.geometry.rows() as isize
                    || c >= self.geometry.cols() as isize
                {
                    continue;
                }
                let flat = self.geometry.flat(Cell::new(r as usize, c as usize));
                if self.cells[flat] == CellContent::Garbage {
                    self.cells[flat] = CellContent::Empty;
                    self.n_garbage -= 1;
                    cleared += 1;
                }
            }
        }
        cleared
    }

    /// Resource growth pass. The apple rate is fixed from the garbage
    /// count at entry, then garbage spawns, then apples, both row-major
    /// over empty cells of their half.
    pub fn spawn_resources(&mut self) {
        let delta_a = apple_growth_rate(self.n_garbage, &self.params);
        let delta_g = self.params.delta_g;
        for row in 0..self.geometry.garbage_rows() {
            for col in 0..self.geometry.cols() {
                let flat = self.geometry.flat(Cell::new(row, col));
                if self.cells[flat] == CellContent::Empty
                    && delta_g > 0.0
                    && self.rng.gen_bool(delta_g)
                {
                    self.cells[flat] = CellContent::Garbage;
                    self.n_garbage += 1;
                }
            }
        }
        for row in self.geometry.garbage_rows()..self.geometry.rows() {
            for col in 0..self.geometry.cols() {
                let flat = self.geometry.flat(Cell::new(row, col));
                if self.cells[flat] == CellContent::Empty
                    && delta_a > 0.0
                    && self.rng.gen_bool(delta_a)
                {
                    self.cells[flat] = CellContent::Apple;
                    self.n_apples += 1;
                }
            }
        }
    }

    /// One full environment step: action resolution, then resource growth.
    pub fn step(&mut self, actions: &[AgentAction]) -> Result<Vec<f64>> {
        let rewards = self.resolve_actions(actions)?;
        self.spawn_resources();
        #[cfg(debug_assertions)]
        {
            let (g, a) = self.recount();
            debug_assert_eq!((g, a), (self.n_garbage, self.n_apples));
        }
        Ok(rewards)
    }

    /// Order-sensitive digest of the full state (grid, agents, counts,
    /// RNG position) for determinism checks.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |byte: u8| {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        };
        for &c in &self.cells {
            mix(match c {
                CellContent::Empty => 0,
                CellContent::Apple => 1,
                CellContent::Garbage => 2,
            });
        }
        for p in &self.agent_positions {
            mix(p.row as u8);
            mix(p.col as u8);
        }
        for b in (self.n_garbage as u64).to_le_bytes() {
            mix(b);
        }
        for b in (self.n_apples as u64).to_le_bytes() {
            mix(b);
        }
        for b in self.rng.get_seed() {
            mix(b);
        }
        for b in self.rng.get_word_pos().to_le_bytes() {
            mix(b);
        }
        h
    }
}
