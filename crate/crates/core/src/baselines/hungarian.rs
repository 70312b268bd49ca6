//! Centralized optimal assignment of devices to RISs and SFs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::bandit::{argmax, Action};
use crate::channel::SuccessProbTable;
use crate::Error;

/// Expected reward of every device on every arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentMatrix {
    pub n_players: usize,
    pub n_ris: usize,
    pub n_sf: usize,
    /// `[n][k * n_sf + m]` rewards through RIS `k` with SF `m`.
    pub value: Vec<f64>,
    /// Optional `[n][m]` rewards on the direct link, which any number of
    /// devices may share.
    pub direct: Option<Vec<f64>>,
}

impl AssignmentMatrix {
    /// Rewards `c_m · θ` from an oracle table. Direct columns are included.
    pub fn from_oracle(table: &SuccessProbTable, rates: &[f64]) -> Self {
        let (n, k, m) = (table.n_devices, table.n_ris, table.n_sf);
        let mut value = Vec::with_capacity(n * k * m);
        let mut direct = Vec::with_capacity(n * m);
        for p in 0..n {
            for r in 0..k {
                value.extend(table.ris_row(p, r).iter().zip(rates).map(|(t, c)| t * c));
            }
            direct.extend(table.direct_row(p).iter().zip(rates).map(|(t, c)| t * c));
        }
        Self {
            n_players: n,
            n_ris: k,
            n_sf: m,
            value,
            direct: Some(direct),
        }
    }

    pub fn ris_value(&self, n: usize, k: usize, m: usize) -> f64 {
        self.value[(n * self.n_ris + k) * self.n_sf + m]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentResult {
    pub actions: Vec<Action>,
    pub values: Vec<f64>,
    pub total: f64,
}

/// Maximizes the summed reward with at most one device per RIS.
///
/// Each `(device, RIS)` pair is first reduced to its best SF, which loses
/// nothing because SFs are not contended. Direct columns, when present,
/// are replicated once per device so that all devices may fall back to the
/// direct link.
pub fn hungarian_assign(m: &AssignmentMatrix) -> Result<AssignmentResult, Error> {
    let (n, k, s) = (m.n_players, m.n_ris, m.n_sf);
    if m.value.len() != n * k * s || s == 0 {
        return Err(Error::Invalid("assignment matrix dimensions do not match".into()));
    }
    if n == 0 {
        return Ok(AssignmentResult {
            actions: Vec::new(),
            values: Vec::new(),
            total: 0.0,
        });
    }
    let direct_best: Option<Vec<(usize, f64)>> = m.direct.as_ref().map(|d| {
        (0..n)
            .map(|p| {
                let row = &d[p * s..(p + 1) * s];
                let j = argmax(row.iter().copied()).unwrap_or(0);
                (j, row[j])
            })
            .collect()
    });
    let cols = k + if direct_best.is_some() { n } else { 0 };
    if n > cols {
        return Err(Error::Infeasible(format!(
            "{n} devices but only {k} RISs and no direct columns"
        )));
    }
    let mut best_sf = vec![0usize; n * k];
    let mut weight = vec![0.0; n * cols];
    for p in 0..n {
        for r in 0..k {
            let row = &m.value[(p * k + r) * s..(p * k + r + 1) * s];
            let j = argmax(row.iter().copied()).unwrap_or(0);
            best_sf[p * k + r] = j;
            weight[p * cols + r] = row[j];
        }
        if let Some(d) = &direct_best {
            for c in k..cols {
                weight[p * cols + c] = d[p].1;
            }
        }
    }
    let column = solve_max_assignment(&weight, n, cols);
    let mut actions = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for (p, &c) in column.iter().enumerate() {
        if c < k {
            actions.push(Action::Ris {
                ris: c,
                sf: best_sf[p * k + c],
            });
        } else {
            let (sf, _) = direct_best.as_ref().expect("direct column implies direct values")[p];
            actions.push(Action::Direct { sf });
        }
        values.push(weight[p * cols + c]);
    }
    let total = values.iter().sum();
    Ok(AssignmentResult { actions, values, total })
}

/// Rectangular maximum-weight assignment (`rows <= cols`) by the
/// shortest augmenting path method with dual potentials, `O(rows² · cols)`.
/// Returns the column of each row.
pub fn solve_max_assignment(weight: &[f64], rows: usize, cols: usize) -> Vec<usize> {
    assert!(rows <= cols && weight.len() == rows * cols);
    let cost = |i: usize, j: usize| -weight[i * cols + j];
    // One-based arrays; index 0 is the virtual root.
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0;
        let mut min_v = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < min_v[j] {
                    min_v[j] = reduced;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut column = vec![0; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            column[owner[j] - 1] = j - 1;
        }
    }
    column
}

/// SF with the highest expected direct-link reward.
pub fn genie_optimal_sf(direct_probs: &[f64], rates: &[f64]) -> usize {
    argmax(direct_probs.iter().zip(rates).map(|(t, c)| t * c)).unwrap_or(0)
}

/// Benchmark rewards of the optimal static profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalProfile {
    pub assignment: Vec<Action>,
    /// Expected reward of each device's assigned action when it is usable.
    pub assigned_value: Vec<f64>,
    /// Best expected direct-link reward of each device.
    pub direct_value: Vec<f64>,
    pub direct_sf: Vec<usize>,
}

impl OptimalProfile {
    pub fn from_oracle(table: &SuccessProbTable, rates: &[f64]) -> Result<Self, Error> {
        let matrix = AssignmentMatrix::from_oracle(table, rates);
        let result = hungarian_assign(&matrix)?;
        let direct_sf: Vec<usize> = (0..table.n_devices)
            .map(|n| genie_optimal_sf(table.direct_row(n), rates))
            .collect();
        let direct_value = direct_sf
            .iter()
            .enumerate()
            .map(|(n, &m)| rates[m] * table.direct(n, m))
            .collect();
        Ok(Self {
            assignment: result.actions,
            assigned_value: result.values,
            direct_value,
            direct_sf,
        })
    }

    /// Reward the optimal profile expects from device `n` given whether its
    /// assigned RIS is occupied.
    pub fn benchmark(&self, n: usize, assigned_busy: bool) -> f64 {
        match self.assignment[n] {
            Action::Ris { .. } if !assigned_busy => self.assigned_value[n],
            _ => self.direct_value[n],
        }
    }

    /// Expected per-slot sum reward with i.i.d. occupancy probabilities.
    pub fn expected_sum_rate(&self, active_prob: &[f64]) -> f64 {
        (0..self.assignment.len())
            .map(|n| match self.assignment[n] {
                Action::Ris { ris, .. } => {
                    let p = active_prob[ris];
                    (1.0 - p) * self.assigned_value[n] + p * self.direct_value[n]
                }
                Action::Direct { .. } => self.direct_value[n],
            })
            .sum()
    }
}
