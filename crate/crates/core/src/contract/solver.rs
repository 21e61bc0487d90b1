use serde::{Deserialize, Serialize};

use super::menu::{f_coefficients, reward_schedule};
use super::{ContractError, ContractItem, ContractMenu, ContractParams, VerifierTypeProfile};

/// How the budget constraint is enforced once it binds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMethod {
    /// Exact: bisection on the budget's dual multiplier.
    #[default]
    Multiplier,
    /// Heuristic: a common scale factor on every inverse latency.
    UniformScale,
}

/// Smooth manager objective in the inverse latencies after the rewards have
/// been eliminated: `Σ|𝕄|p_q[g₁e₁(θ_q|𝕄|p_q)^z₁ − g₁e₂(L_q⁻¹T_max)^−z₂] − |𝕄|l·Σf_qL_q⁻¹`.
pub fn objective(
    inv_latencies: &[f64],
    f: &[f64],
    profile: &VerifierTypeProfile,
    params: &ContractParams,
) -> f64 {
    inv_latencies
        .iter()
        .enumerate()
        .map(|(q, &x)| {
            objective_term(profile.types()[q], profile.priors()[q], f[q], x, params)
        })
        .sum()
}

/// One type's contribution to [`objective`].
pub(crate) fn objective_term(
    theta: f64,
    prior: f64,
    f: f64,
    inv_latency: f64,
    params: &ContractParams,
) -> f64 {
    let m = params.verifier_count;
    let scale = params.gain * params.scale_coeff * (theta * m * prior).powf(params.scale_exp);
    let delay = params.gain
        * params.latency_coeff
        * (inv_latency * params.max_latency).powf(-params.latency_exp);
    m * prior * (scale - delay) - m * params.reward_weight * f * inv_latency
}

/// Budget consumed by an allocation, `|𝕄|·Σ f_q L_q⁻¹`.
pub fn budget_spend(inv_latencies: &[f64], f: &[f64], params: &ContractParams) -> f64 {
    params.verifier_count * inv_latencies.iter().zip(f).map(|(x, f)| x * f).sum::<f64>()
}

/// Unconstrained maximiser of the per-type objective with effective reward
/// weight `weight`.
fn stationary(prior: f64, f: f64, weight: f64, params: &ContractParams) -> f64 {
    if prior <= 0.0 {
        return 0.0;
    }
    let z2 = params.latency_exp;
    let num = params.gain * params.latency_coeff * z2 * prior;
    let den = params.max_latency.powf(z2) * weight * f;
    (num / den).powf(1.0 / (z2 + 1.0))
}

/// Per-type optimum at reward weight `weight`, ironed into a nondecreasing
/// sequence when `iron` is set, then clamped to the latency floor.
fn allocate(
    profile: &VerifierTypeProfile,
    f: &[f64],
    weight: f64,
    iron: bool,
    params: &ContractParams,
) -> Vec<f64> {
    let priors = profile.priors();
    let floor = params.inv_latency_floor();
    if !iron {
        return priors
            .iter()
            .zip(f)
            .map(|(&p, &fq)| stationary(p, fq, weight, params).max(floor))
            .collect();
    }
    // Pool-adjacent-violators over (Σp, Σf) blocks.
    struct Block {
        p: f64,
        f: f64,
        len: usize,
        value: f64,
    }
    let mut blocks: Vec<Block> = Vec::with_capacity(priors.len());
    for (&p, &fq) in priors.iter().zip(f) {
        blocks.push(Block {
            p,
            f: fq,
            len: 1,
            value: stationary(p, fq, weight, params),
        });
        while blocks.len() > 1 && blocks[blocks.len() - 2].value > blocks[blocks.len() - 1].value {
            let last = blocks.pop().expect("len > 1");
            let prev = blocks.last_mut().expect("len > 1");
            prev.p += last.p;
            prev.f += last.f;
            prev.len += last.len;
            prev.value = stationary(prev.p, prev.f, weight, params);
        }
    }
    blocks
        .iter()
        .flat_map(|b| std::iter::repeat(b.value.max(floor)).take(b.len))
        .collect()
}

/// Narrows the bracket between a point where `fits` holds and one where it
/// does not, returning the last point known to fit.
fn bisect(mut fit: f64, mut misfit: f64, fits: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (fit + misfit);
        if mid == fit || mid == misfit {
            break;
        }
        if fits(mid) {
            fit = mid;
        } else {
            misfit = mid;
        }
    }
    fit
}

fn solve_inv_latencies(
    profile: &VerifierTypeProfile,
    f: &[f64],
    iron: bool,
    method: BudgetMethod,
    params: &ContractParams,
) -> Result<Vec<f64>, ContractError> {
    params.validate()?;
    let l = params.reward_weight;
    let floor = params.inv_latency_floor();
    let free = allocate(profile, f, l, iron, params);
    if budget_spend(&free, f, params) <= params.budget {
        return Ok(free);
    }
    let floor_cost = budget_spend(&vec![floor; f.len()], f, params);
    if floor_cost > params.budget {
        return Err(ContractError::Infeasible {
            floor_cost,
            budget: params.budget,
        });
    }
    let fits = |x: &[f64]| budget_spend(x, f, params) <= params.budget;
    match method {
        BudgetMethod::Multiplier => {
            let mut hi = l;
            while !fits(&allocate(profile, f, l + hi, iron, params)) {
                hi *= 2.0;
                if !hi.is_finite() {
                    return Err(ContractError::Infeasible {
                        floor_cost,
                        budget: params.budget,
                    });
                }
            }
            let lambda = bisect(hi, 0.0, |lam| fits(&allocate(profile, f, l + lam, iron, params)));
            Ok(allocate(profile, f, l + lambda, iron, params))
        }
        BudgetMethod::UniformScale => {
            let scaled = |c: f64| -> Vec<f64> { free.iter().map(|x| (c * x).max(floor)).collect() };
            let c = bisect(0.0, 1.0, |c| fits(&scaled(c)));
            Ok(scaled(c))
        }
    }
}

/// Optimal screening menu: binding type-1 IR and local downward IC rewards,
/// inverse latencies from the per-type optimum with ironing, floor and
/// budget.
pub fn solve_optimal_contract(
    profile: &VerifierTypeProfile,
    params: &ContractParams,
) -> Result<ContractMenu, ContractError> {
    solve_with(profile, params, BudgetMethod::Multiplier)
}

pub fn solve_with(
    profile: &VerifierTypeProfile,
    params: &ContractParams,
    method: BudgetMethod,
) -> Result<ContractMenu, ContractError> {
    let f = f_coefficients(profile, params.unit_cost);
    let x = solve_inv_latencies(profile, &f, true, method, params)?;
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

/// First-best menu under complete information: each type is held to zero
/// utility and its inverse latency maximises the manager's profit from it.
pub fn stackelberg_symmetric(
    profile: &VerifierTypeProfile,
    params: &ContractParams,
) -> Result<ContractMenu, ContractError> {
    let l_prime = params.unit_cost;
    let f: Vec<f64> = profile
        .types()
        .iter()
        .zip(profile.priors())
        .map(|(theta, p)| l_prime * p / theta)
        .collect();
    let x = solve_inv_latencies(profile, &f, false, BudgetMethod::Multiplier, params)?;
    Ok(ContractMenu {
        items: x
            .into_iter()
            .zip(profile.types())
            .map(|(inv_latency, theta)| ContractItem {
                reward: l_prime * inv_latency / theta,
                inv_latency,
            })
            .collect(),
    })
}
