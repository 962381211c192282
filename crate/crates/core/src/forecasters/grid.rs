use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::task::TaskSpec;

use super::{HyperAssignment, ModelId, ParamValue};

pub const SEASONAL_PERIODS: [i64; 7] = [1, 4, 7, 12, 24, 52, 168];
pub const SMOOTHING_ALPHAS: [f64; 7] = [0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0];
pub const HW_ALPHA_GAMMA: [f64; 3] = [0.1, 0.3, 0.5];
pub const HW_BETA: [f64; 3] = [0.0, 0.1, 0.3];

/// Finite hyperparameter set for one model, in a fixed lexicographic order
/// (parameter name, then value) without duplicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub model_id: ModelId,
    pub assignments: Vec<HyperAssignment>,
}

impl HyperGrid {
    pub fn new(model_id: ModelId, mut assignments: Vec<HyperAssignment>) -> Self {
        assignments.sort_by(HyperAssignment::cmp_values);
        assignments.dedup_by(|a, b| a.cmp_values(b).is_eq());
        HyperGrid { model_id, assignments }
    }

    pub fn singleton(assignment: HyperAssignment) -> Self {
        HyperGrid {
            model_id: assignment.model_id,
            assignments: vec![assignment],
        }
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

fn alpha_grid(model_id: ModelId) -> Vec<HyperAssignment> {
    SMOOTHING_ALPHAS
        .iter()
        .map(|&a| {
            let mut params = vec![("alpha", ParamValue::Real(a))];
            if model_id == ModelId::Theta {
                params.push(("theta_coef", ParamValue::Real(2.0)));
            }
            HyperAssignment::new(model_id, params)
        })
        .collect()
}

fn hw_assignments(model_id: ModelId, context_len: usize) -> Vec<HyperAssignment> {
    let periods = SEASONAL_PERIODS
        .iter()
        .filter(|&&p| p >= 2 && p as usize <= context_len / 2);
    let mut out = Vec::new();
    for &period in periods {
        for &alpha in &HW_ALPHA_GAMMA {
            for &beta in &HW_BETA {
                for &gamma in &HW_ALPHA_GAMMA {
                    out.push(HyperAssignment::new(
                        model_id,
                        [
                            ("L", ParamValue::Int(period)),
                            ("alpha", ParamValue::Real(alpha)),
                            ("beta", ParamValue::Real(beta)),
                            ("gamma", ParamValue::Real(gamma)),
                        ],
                    ));
                }
            }
        }
    }
    out
}

fn has_non_positive<T: Scalar>(task: &TaskSpec<T>) -> bool {
    task.data.targets.as_slice().iter().any(|&v| v <= T::zero())
}

/// Default grid for `model_id` on `task`.
///
/// The multiplicative Holt-Winters grid is empty when the task holds any
/// non-positive target value.
pub fn default_grid<T: Scalar>(model_id: ModelId, task: &TaskSpec<T>) -> HyperGrid {
    let l = task.context_len;
    let assignments = match model_id {
        ModelId::SeasonalNaive => SEASONAL_PERIODS
            .iter()
            .filter(|&&p| p as usize <= l)
            .map(|&p| HyperAssignment::new(model_id, [("L", ParamValue::Int(p))]))
            .collect(),
        ModelId::Croston | ModelId::Ses | ModelId::Theta => alpha_grid(model_id),
        ModelId::HoltWintersAdd => hw_assignments(model_id, l),
        ModelId::HoltWintersMul if has_non_positive(task) => Vec::new(),
        ModelId::HoltWintersMul => hw_assignments(model_id, l),
        ModelId::Arima => {
            let mut out = Vec::new();
            for p in 0..=2 {
                for d in 0..=1 {
                    for q in 0..=1 {
                        if (p, d, q) == (0, 0, 0) {
                            continue;
                        }
                        for with_constant in [false, true] {
                            out.push(HyperAssignment::new(
                                model_id,
                                [
                                    ("p", ParamValue::Int(p)),
                                    ("d", ParamValue::Int(d)),
                                    ("q", ParamValue::Int(q)),
                                    ("with_constant", ParamValue::Bool(with_constant)),
                                ],
                            ));
                        }
                    }
                }
            }
            out
        }
        ModelId::Drift => vec![HyperAssignment::new(model_id, [])],
    };
    HyperGrid::new(model_id, assignments)
}

/// Both Holt-Winters variants for `task`: additive first, then multiplicative
/// when the data allow it.
pub fn holt_winters_grid<T: Scalar>(task: &TaskSpec<T>) -> Vec<HyperAssignment> {
    let mut out = default_grid(ModelId::HoltWintersAdd, task).assignments;
    out.extend(default_grid(ModelId::HoltWintersMul, task).assignments);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::SeriesFrame;

    fn task(l: usize, values: Vec<f64>) -> TaskSpec<f64> {
        TaskSpec::new("g", l, 2, SeriesFrame::univariate(values))
    }

    #[test]
    fn seasonal_naive_periods_fit_context() {
        let g = default_grid(ModelId::SeasonalNaive, &task(10, vec![1.0; 20]));
        let ls: Vec<usize> = g.assignments.iter().map(|a| a.get_usize("L").unwrap()).collect();
        assert_eq!(ls, vec![1, 4, 7]);
    }

    #[test]
    fn drift_is_singleton() {
        assert_eq!(default_grid(ModelId::Drift, &task(10, vec![1.0; 20])).len(), 1);
    }

    #[test]
    fn holt_winters_drops_multiplicative_on_non_positive_data() {
        let mut v = vec![1.0; 40];
        v[3] = 0.0;
        let hw = holt_winters_grid(&task(24, v));
        assert!(!hw.is_empty());
        assert!(hw.iter().all(|a| a.model_id == ModelId::HoltWintersAdd));

        let hw = holt_winters_grid(&task(24, vec![1.0; 40]));
        assert!(hw.iter().any(|a| a.model_id == ModelId::HoltWintersMul));
        // L ∈ {4, 7, 12} with l = 24, 27 combinations each
        assert_eq!(hw.len(), 2 * 3 * 27);
    }

    #[test]
    fn arima_grid_shape_and_order() {
        let g = default_grid(ModelId::Arima, &task(30, vec![1.0; 40]));
        assert_eq!(g.len(), 22);
        let first = &g.assignments[0];
        assert_eq!(first.label(), "d=0;p=0;q=1;with_constant=false");
        for pair in g.assignments.windows(2) {
            assert!(pair[0].cmp_values(&pair[1]).is_lt());
        }
    }

    #[test]
    fn grids_are_sorted_and_unique() {
        let t = task(48, (1..80).map(f64::from).collect());
        for m in ModelId::ALL {
            let g = default_grid(m, &t);
            for pair in g.assignments.windows(2) {
                assert!(pair[0].cmp_values(&pair[1]).is_lt(), "{m}");
            }
            assert_eq!(g, default_grid(m, &t));
            for a in &g.assignments {
                a.validate().unwrap();
            }
        }
    }

    #[test]
    fn new_sorts_and_dedups() {
        let mk = |l| HyperAssignment::new(ModelId::SeasonalNaive, [("L", ParamValue::Int(l))]);
        let g = HyperGrid::new(ModelId::SeasonalNaive, vec![mk(5), mk(2), mk(5)]);
        assert_eq!(g.assignments, vec![mk(2), mk(5)]);
    }
}
