use super::menu::{f_coefficients, reward_schedule};
use super::solver::objective_term;
use super::{ContractError, ContractItem, ContractMenu, ContractParams, VerifierTypeProfile};

/// Largest type count the exhaustive search accepts.
pub const MAX_ORACLE_TYPES: usize = 6;

struct Search<'a> {
    grid: &'a [f64],
    /// `values[t][i]`: type `t`'s objective term at `grid[i]`.
    values: &'a [Vec<f64>],
    f: &'a [f64],
    tail_f: &'a [f64],
    verifier_count: f64,
    budget: f64,
    picks: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl Search<'_> {
    fn descend(&mut self, t: usize, from: usize, spend: f64, value: f64) {
        if t == self.f.len() {
            if self.best.as_ref().map_or(true, |(b, _)| value > *b) {
                self.best = Some((value, self.picks.clone()));
            }
            return;
        }
        for i in from..self.grid.len() {
            let x = self.grid[i];
            // Monotone tuples: every remaining type costs at least `x`.
            if spend + self.verifier_count * x * self.tail_f[t] > self.budget {
                break;
            }
            self.picks.push(i);
            self.descend(
                t + 1,
                i,
                spend + self.verifier_count * x * self.f[t],
                value + self.values[t][i],
            );
            self.picks.pop();
        }
    }
}

/// Geometric grid of `n` inverse latencies from the floor up to the largest
/// value any single type could afford with the whole budget.
pub(crate) fn oracle_grid(f: &[f64], params: &ContractParams, n: usize) -> Vec<f64> {
    let floor = params.inv_latency_floor();
    let upper = f
        .iter()
        .filter(|&&fq| fq > 0.0)
        .map(|fq| params.budget / (params.verifier_count * fq))
        .fold(floor, f64::max);
    let n = n.max(2);
    let ratio = (upper / floor).powf(1.0 / (n - 1) as f64);
    (0..n).map(|i| floor * ratio.powi(i as i32)).collect()
}

/// Exhaustive search over nondecreasing inverse-latency tuples from a
/// geometric grid of `grid_resolution` points per type, scored with the
/// smooth objective and filtered by the budget.
pub fn brute_force_contract(
    profile: &VerifierTypeProfile,
    params: &ContractParams,
    grid_resolution: usize,
) -> Result<ContractMenu, ContractError> {
    params.validate()?;
    let q = profile.len();
    if q > MAX_ORACLE_TYPES {
        return Err(ContractError::TooManyTypes {
            got: q,
            max: MAX_ORACLE_TYPES,
        });
    }
    let f = f_coefficients(profile, params.unit_cost);
    let grid = oracle_grid(&f, params, grid_resolution);
    let values: Vec<Vec<f64>> = (0..q)
        .map(|t| {
            let (theta, p) = (profile.types()[t], profile.priors()[t]);
            grid.iter()
                .map(|&x| objective_term(theta, p, f[t], x, params))
                .collect()
        })
        .collect();
    let tail_f: Vec<f64> = (0..q).map(|t| f[t..].iter().sum()).collect();

    let mut search = Search {
        grid: &grid,
        values: &values,
        f: &f,
        tail_f: &tail_f,
        verifier_count: params.verifier_count,
        budget: params.budget,
        picks: Vec::with_capacity(q),
        best: None,
    };
    search.descend(0, 0, 0.0, 0.0);
    let (_, picks) = search
        .best
        .ok_or(ContractError::NoFeasiblePoint(grid.len()))?;
    let x: Vec<f64> = picks.iter().map(|&i| grid[i]).collect();
    let rewards = reward_schedule(&x, profile, params.unit_cost);
    Ok(ContractMenu {
        items: rewards
            .into_iter()
            .zip(x)
            .map(|(reward, inv_latency)| ContractItem {
                reward,
                inv_latency,
            })
            .collect(),
    })
}
