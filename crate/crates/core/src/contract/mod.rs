//! Contract-based incentives for block verification.
//!
//! The block manager offers a menu of (reward, inverse latency) items, one per
//! verifier reputation type. Rewards are pinned down by the binding IR and
//! local downward IC constraints, leaving a separable concave problem in the
//! inverse latencies that is solved per type with ironing and a budget
//! multiplier.

mod menu;
mod oracle;
mod radio;
mod solver;

pub use menu::{
    check_menu, f_coefficients, manager_profit, reward_schedule, security_latency_metric,
    utility_matrix, verifier_utility, verifier_utility_with, MenuReport,
};
pub use oracle::{brute_force_contract, MAX_ORACLE_TYPES};
pub use solver::{
    budget_spend, objective, solve_optimal_contract, solve_with, stackelberg_symmetric,
    BudgetMethod,
};
pub use radio::{
    dbm_to_watts, link_rate, verification_latency, RadioParams, VerificationTask,
    BITS_PER_KILOBYTE,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContractError {
    #[error("invalid type profile: {0}")]
    Profile(String),
    #[error("invalid contract parameters: {0}")]
    Params(String),
    #[error("menu has {menu} items for {types} types")]
    MenuLength { menu: usize, types: usize },
    #[error("budget {budget} cannot cover the minimum-latency allocation costing {floor_cost}")]
    Infeasible { floor_cost: f64, budget: f64 },
    #[error("brute-force search supports at most {max} types, got {got}")]
    TooManyTypes { got: usize, max: usize },
    #[error("grid of {0} points per type contains no feasible menu")]
    NoFeasiblePoint(usize),
}

/// Ascending reputation types with their prior probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifierTypeProfile {
    types: Vec<f64>,
    priors: Vec<f64>,
}

impl VerifierTypeProfile {
    pub fn new(types: Vec<f64>, priors: Vec<f64>) -> Result<Self, ContractError> {
        if types.is_empty() {
            return Err(ContractError::Profile("at least one type is required".into()));
        }
        if types.len() != priors.len() {
            return Err(ContractError::Profile(format!(
                "{} types but {} priors",
                types.len(),
                priors.len()
            )));
        }
        if types.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(ContractError::Profile("types must be positive".into()));
        }
        if types.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ContractError::Profile("types must be strictly ascending".into()));
        }
        if priors.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(ContractError::Profile("priors must be nonnegative".into()));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ContractError::Profile(format!("priors sum to {total}")));
        }
        Ok(Self { types, priors })
    }

    /// `q` types `step, 2·step, …, q·step` with equal priors.
    pub fn uniform(q: usize, step: f64) -> Result<Self, ContractError> {
        if q == 0 {
            return Err(ContractError::Profile("at least one type is required".into()));
        }
        let types = (1..=q).map(|i| i as f64 * step).collect();
        let mut priors = vec![1.0 / q as f64; q];
        // Put the rounding residue on the last prior so the sum is exact.
        let head: f64 = priors[..q - 1].iter().sum();
        priors[q - 1] = 1.0 - head;
        Self::new(types, priors)
    }

    pub fn types(&self) -> &[f64] {
        &self.types
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractItem {
    pub reward: f64,
    /// Reciprocal of the contracted verification latency, in 1/s.
    pub inv_latency: f64,
}

impl ContractItem {
    pub fn latency(&self) -> f64 {
        1.0 / self.inv_latency
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractMenu {
    pub items: Vec<ContractItem>,
}

impl ContractMenu {
    pub fn rewards(&self) -> Vec<f64> {
        self.items.iter().map(|i| i.reward).collect()
    }

    pub fn inv_latencies(&self) -> Vec<f64> {
        self.items.iter().map(|i| i.inv_latency).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractParams {
    /// g₁: manager benefit per unit of the security-latency metric.
    pub gain: f64,
    /// e₁
    pub scale_coeff: f64,
    /// e₂
    pub latency_coeff: f64,
    /// z₁
    pub scale_exp: f64,
    /// z₂
    pub latency_exp: f64,
    /// l: weight of paid rewards in the manager's profit.
    pub reward_weight: f64,
    /// l′: verifier's unit resource cost.
    pub unit_cost: f64,
    /// T_max in seconds.
    pub max_latency: f64,
    /// R_max
    pub budget: f64,
    /// |𝕄|
    pub verifier_count: f64,
}

impl Default for ContractParams {
    fn default() -> Self {
        Self {
            gain: 1.2,
            scale_coeff: 15.0,
            latency_coeff: 10.0,
            scale_exp: 2.0,
            latency_exp: 1.0,
            reward_weight: 5.0,
            unit_cost: 1.0,
            max_latency: 300.0,
            budget: 1000.0,
            verifier_count: 1.0,
        }
    }
}

impl ContractParams {
    pub fn validate(&self) -> Result<(), ContractError> {
        let named = [
            ("gain", self.gain),
            ("scale_coeff", self.scale_coeff),
            ("latency_coeff", self.latency_coeff),
            ("reward_weight", self.reward_weight),
            ("unit_cost", self.unit_cost),
            ("max_latency", self.max_latency),
            ("budget", self.budget),
            ("verifier_count", self.verifier_count),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(ContractError::Params(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.scale_exp >= 1.0 && self.latency_exp >= 1.0) {
            return Err(ContractError::Params("exponents must be at least 1".into()));
        }
        Ok(())
    }

    /// Smallest admissible inverse latency, `1/T_max`.
    pub fn inv_latency_floor(&self) -> f64 {
        1.0 / self.max_latency
    }
}
