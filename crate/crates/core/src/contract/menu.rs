use serde::Serialize;

use super::{ContractError, ContractItem, ContractMenu, ContractParams, VerifierTypeProfile};

/// Security-latency metric of a type with weight `θ·|𝕄|·p`. Zero once the
/// latency reaches the break-even point `A`, boundary included.
pub fn security_latency_metric(
    theta: f64,
    prior: f64,
    verifier_count: f64,
    latency: f64,
    params: &ContractParams,
) -> f64 {
    let mass = theta * verifier_count * prior;
    let (z1, z2) = (params.scale_exp, params.latency_exp);
    let a = params.max_latency
        * params.scale_coeff.powf(1.0 / z2)
        * mass.powf(z1 / z2)
        / params.latency_coeff.powf(1.0 / z2);
    if latency > 0.0 && latency < a {
        params.scale_coeff * mass.powf(z1)
            - params.latency_coeff * (latency / params.max_latency).powf(z2)
    } else {
        0.0
    }
}

/// `θ·R − l′·L⁻¹` with the identity valuation.
pub fn verifier_utility(theta: f64, item: &ContractItem, unit_cost: f64) -> f64 {
    verifier_utility_with(theta, item, unit_cost, |r| r)
}

/// Verifier utility under a custom reward valuation `η`.
pub fn verifier_utility_with(
    theta: f64,
    item: &ContractItem,
    unit_cost: f64,
    eta: impl Fn(f64) -> f64,
) -> f64 {
    theta * eta(item.reward) - unit_cost * item.inv_latency
}

fn check_len(menu: &ContractMenu, profile: &VerifierTypeProfile) -> Result<(), ContractError> {
    if menu.len() != profile.len() {
        return Err(ContractError::MenuLength {
            menu: menu.len(),
            types: profile.len(),
        });
    }
    Ok(())
}

/// Manager profit `Σ |𝕄|p_q (g₁·φ_q − l·R_q)` using the piecewise metric.
pub fn manager_profit(
    menu: &ContractMenu,
    profile: &VerifierTypeProfile,
    params: &ContractParams,
) -> Result<f64, ContractError> {
    check_len(menu, profile)?;
    let m = params.verifier_count;
    Ok(menu
        .items
        .iter()
        .zip(profile.types().iter().zip(profile.priors()))
        .map(|(item, (&theta, &p))| {
            let phi = security_latency_metric(theta, p, m, item.latency(), params);
            m * p * (params.gain * phi - params.reward_weight * item.reward)
        })
        .sum())
}

/// Rewards implied by a binding type-1 IR constraint and binding local
/// downward IC constraints.
pub fn reward_schedule(
    inv_latencies: &[f64],
    profile: &VerifierTypeProfile,
    unit_cost: f64,
) -> Vec<f64> {
    debug_assert_eq!(inv_latencies.len(), profile.len());
    let theta = profile.types();
    let mut rewards = Vec::with_capacity(inv_latencies.len());
    let mut acc = 0.0;
    for (q, &x) in inv_latencies.iter().enumerate() {
        acc += if q == 0 {
            unit_cost * x / theta[0]
        } else {
            unit_cost * (x - inv_latencies[q - 1]) / theta[q]
        };
        rewards.push(acc);
    }
    rewards
}

/// Coefficients `f_q` such that `Σ|𝕄|p_q·l·R_q = |𝕄|·l·Σ f_q·L_q⁻¹` for
/// rewards from [`reward_schedule`].
pub fn f_coefficients(profile: &VerifierTypeProfile, unit_cost: f64) -> Vec<f64> {
    let (theta, p) = (profile.types(), profile.priors());
    let n = theta.len();
    let mut f = vec![0.0; n];
    let mut tail = 0.0;
    for q in (0..n).rev() {
        f[q] = unit_cost * p[q] / theta[q];
        if q + 1 < n {
            f[q] += (unit_cost / theta[q] - unit_cost / theta[q + 1]) * tail;
        }
        tail += p[q];
    }
    f
}

/// `U[i][j]`: utility of a type-`i` verifier signing item `j`.
pub fn utility_matrix(
    menu: &ContractMenu,
    profile: &VerifierTypeProfile,
    unit_cost: f64,
) -> Vec<Vec<f64>> {
    profile
        .types()
        .iter()
        .map(|&theta| {
            menu.items
                .iter()
                .map(|item| verifier_utility(theta, item, unit_cost))
                .collect()
        })
        .collect()
}

/// Worst-case slacks of the IR, IC and monotonicity conditions. Negative
/// slacks are violations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MenuReport {
    /// `min_q U_q(item_q)`.
    pub min_ir_slack: f64,
    /// `|U_1(item_1)|`; zero when the lowest type's IR binds.
    pub type1_ir_gap: f64,
    /// `min_{q≠q′} U_q(item_q) − U_q(item_q′)`.
    pub min_ic_slack: f64,
    pub worst_ic_pair: Option<(usize, usize)>,
    /// Largest drop in reward between a type and any higher type.
    pub reward_monotonicity_gap: f64,
    /// Largest drop in inverse latency between a type and any higher type.
    pub inv_latency_monotonicity_gap: f64,
}

impl MenuReport {
    pub fn is_ir(&self, tol: f64) -> bool {
        self.min_ir_slack >= -tol
    }

    pub fn is_ic(&self, tol: f64) -> bool {
        self.min_ic_slack >= -tol
    }

    pub fn is_monotone(&self, tol: f64) -> bool {
        self.reward_monotonicity_gap <= tol && self.inv_latency_monotonicity_gap <= tol
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.is_ir(tol) && self.is_ic(tol) && self.is_monotone(tol)
    }
}

pub fn check_menu(
    menu: &ContractMenu,
    profile: &VerifierTypeProfile,
    unit_cost: f64,
) -> Result<MenuReport, ContractError> {
    check_len(menu, profile)?;
    let u = utility_matrix(menu, profile, unit_cost);
    let n = u.len();
    let min_ir_slack = (0..n).map(|q| u[q][q]).fold(f64::INFINITY, f64::min);
    let mut min_ic_slack = f64::INFINITY;
    let mut worst_ic_pair = None;
    for (i, row) in u.iter().enumerate() {
        for (j, &other) in row.iter().enumerate() {
            if i != j && row[i] - other < min_ic_slack {
                min_ic_slack = row[i] - other;
                worst_ic_pair = Some((i, j));
            }
        }
    }
    let mut reward_gap: f64 = 0.0;
    let mut latency_gap: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            reward_gap = reward_gap.max(menu.items[i].reward - menu.items[j].reward);
            latency_gap = latency_gap.max(menu.items[i].inv_latency - menu.items[j].inv_latency);
        }
    }
    Ok(MenuReport {
        min_ir_slack,
        type1_ir_gap: u[0][0].abs(),
        min_ic_slack: if n > 1 { min_ic_slack } else { 0.0 },
        worst_ic_pair,
        reward_monotonicity_gap: reward_gap,
        inv_latency_monotonicity_gap: latency_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn item(reward: f64, inv_latency: f64) -> ContractItem {
        ContractItem {
            reward,
            inv_latency,
        }
    }

    #[test]
    fn metric_examples() {
        let p = ContractParams::default();
        assert_abs_diff_eq!(
            security_latency_metric(1.0, 1.0, 1.0, 150.0, &p),
            10.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            security_latency_metric(1.0, 1.0, 1.0, 1e-12, &p),
            15.0,
            epsilon = 1e-9
        );
        // A = T·(e₁/e₂)·mass² with z₂ = 1.
        let mass: f64 = 0.5;
        let a = 300.0 * 1.5 * mass * mass;
        assert_eq!(security_latency_metric(0.5, 1.0, 1.0, a, &p), 0.0);
        assert!(security_latency_metric(0.5, 1.0, 1.0, a * 0.999, &p) > 0.0);
        assert_eq!(security_latency_metric(0.5, 1.0, 1.0, a * 2.0, &p), 0.0);
    }

    #[test]
    fn utility_examples() {
        assert_eq!(verifier_utility(2.0, &item(3.0, 4.0), 1.0), 2.0);
        assert_eq!(verifier_utility(5.0, &item(0.0, 0.5), 1.0), -0.5);
        let it = item(2.0, 1.0);
        assert!(verifier_utility(3.0, &it, 1.0) > verifier_utility(2.0, &it, 1.0));
        let sqrt = verifier_utility_with(1.0, &item(4.0, 1.0), 1.0, f64::sqrt);
        assert_eq!(sqrt, 1.0);
    }

    #[test]
    fn profit_examples() {
        let params = ContractParams::default();
        let profile = VerifierTypeProfile::new(vec![1.0], vec![1.0]).unwrap();
        // L = T/2 gives φ = 10.
        let menu = ContractMenu {
            items: vec![item(1.0, 2.0 / 300.0)],
        };
        assert_abs_diff_eq!(
            manager_profit(&menu, &profile, &params).unwrap(),
            7.0,
            epsilon = 1e-9
        );

        let small = VerifierTypeProfile::new(vec![0.01], vec![1.0]).unwrap();
        let zero = ContractMenu {
            items: vec![item(0.0, 1.0 / 300.0)],
        };
        assert_eq!(manager_profit(&zero, &small, &params).unwrap(), 0.0);

        let richer = ContractMenu {
            items: vec![item(1.5, 2.0 / 300.0)],
        };
        assert!(
            manager_profit(&richer, &profile, &params).unwrap()
                < manager_profit(&menu, &profile, &params).unwrap()
        );
        assert!(manager_profit(&ContractMenu { items: vec![] }, &profile, &params).is_err());
    }

    #[test]
    fn schedule_examples() {
        let one = VerifierTypeProfile::new(vec![2.0], vec![1.0]).unwrap();
        assert_eq!(reward_schedule(&[3.0], &one, 1.0), vec![1.5]);

        let two = VerifierTypeProfile::new(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(reward_schedule(&[1.0, 3.0], &two, 1.0), vec![1.0, 2.0]);

        let four = VerifierTypeProfile::uniform(4, 1.0).unwrap();
        assert_eq!(reward_schedule(&[0.7; 4], &four, 1.0), vec![0.7; 4]);
    }

    #[test]
    fn f_examples() {
        let one = VerifierTypeProfile::new(vec![2.0], vec![1.0]).unwrap();
        assert_eq!(f_coefficients(&one, 1.0), vec![0.5]);
        let two = VerifierTypeProfile::new(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap();
        let f = f_coefficients(&two, 1.0);
        assert_abs_diff_eq!(f[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(f[1], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn check_menu_flags_violations() {
        let profile = VerifierTypeProfile::new(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap();
        let good = ContractMenu {
            items: vec![item(1.0, 1.0), item(2.0, 3.0)],
        };
        let report = check_menu(&good, &profile, 1.0).unwrap();
        assert!(report.passes(1e-9), "{report:?}");
        assert_abs_diff_eq!(report.type1_ir_gap, 0.0);

        let swapped = ContractMenu {
            items: vec![item(2.0, 1.0), item(1.0, 3.0)],
        };
        let report = check_menu(&swapped, &profile, 1.0).unwrap();
        assert!(!report.is_ic(1e-9));

        let stingy = ContractMenu {
            items: vec![item(0.9, 1.0), item(2.0, 3.0)],
        };
        let report = check_menu(&stingy, &profile, 1.0).unwrap();
        assert!(!report.is_ir(1e-9));
        assert!(report.min_ir_slack < -0.09);
    }
}
