use crate::backend::{Backend, Program};
use crate::error::{Error, Result};

/// Board side, number of steps, and the probability that a cell follows
/// Conway's rule (it does the opposite otherwise).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LifeConfig {
    pub size: usize,
    pub steps: usize,
    pub fidelity: f64,
}

impl LifeConfig {
    pub fn new(size: usize, steps: usize) -> Result<Self> {
        if size < 3 {
            return Err(Error::InvalidArgument(format!("board size must be at least 3, got {size}")));
        }
        Ok(LifeConfig { size, steps, fidelity: 0.95 })
    }
}

/// Stochastic Game of Life seeded with independent `Ber(p)` cells, returning
/// the number of living cells after `steps` updates.
///
/// Cells beyond the edge are dead. Each update draws one Bernoulli per cell
/// in row-major order, with its probability looked up by array index from
/// `9·alive + live_neighbours`, so no branch depends on a random value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Life {
    pub cfg: LifeConfig,
}

impl Life {
    fn rule_table<B: Backend>(&self, b: &mut B) -> Vec<B::Value> {
        let hi = self.cfg.fidelity;
        (0..18)
            .map(|i| {
                let (alive, count) = (i / 9, i % 9);
                let conway = if alive == 1 { count == 2 || count == 3 } else { count == 3 };
                b.constant(if conway { hi } else { 1.0 - hi })
            })
            .collect()
    }

    /// Final board in row-major order.
    pub fn run_board<B: Backend>(&self, b: &mut B, p: &B::Value) -> Result<Vec<B::Value>> {
        let pv = b.primal(p);
        if !(pv > 0.0 && pv < 1.0) {
            return Err(Error::Domain(format!("initial alive probability {pv} must lie in (0, 1)")));
        }
        let n = self.cfg.size;
        let mut board = (0..n * n).map(|_| b.bernoulli(p)).collect::<Result<Vec<_>>>()?;
        let table = self.rule_table(b);
        for _ in 0..self.cfg.steps {
            let mut next = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let mut count = b.constant(0.0);
                    for di in [-1isize, 0, 1] {
                        for dj in [-1isize, 0, 1] {
                            if di == 0 && dj == 0 {
                                continue;
                            }
                            let (r, c) = (i as isize + di, j as isize + dj);
                            if r < 0 || c < 0 || r >= n as isize || c >= n as isize {
                                continue;
                            }
                            count = b.add(&count, &board[r as usize * n + c as usize])?;
                        }
                    }
                    let alive9 = b.scale(&board[i * n + j], 9.0)?;
                    let idx = b.add(&alive9, &count)?;
                    let prob = b.index(&table, &idx)?;
                    next.push(b.bernoulli(&prob)?);
                }
            }
            board = next;
        }
        Ok(board)
    }
}

impl Program for Life {
    fn run<B: Backend>(&self, b: &mut B, p: B::Value) -> Result<B::Value> {
        let board = self.run_board(b, &p)?;
        b.sum(&board)
    }
}
