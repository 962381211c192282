//! Rolling-window layout over one series.
//!
//! Eval segments are back-to-back with stride equal to the horizon. Test
//! windows end at the last timestamp; tuning windows sit immediately before
//! them. Each window's context is the `context_len` steps preceding its eval
//! segment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub context_start: usize,
    pub context_end: usize,
    pub eval_start: usize,
    pub eval_end: usize,
}

impl Window {
    fn ending_eval_at(eval_start: usize, context_len: usize, horizon: usize) -> Self {
        Window {
            context_start: eval_start - context_len,
            context_end: eval_start,
            eval_start,
            eval_end: eval_start + horizon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub tune_windows: Vec<Window>,
    pub test_windows: Vec<Window>,
    pub stride: usize,
}

impl WindowPlan {
    /// Minimum series length for the given layout.
    pub fn required_len(context_len: usize, horizon: usize, n_tune: usize, n_test: usize) -> usize {
        context_len + horizon * (n_tune + n_test)
    }
}

/// Lays out `n_tune` tuning and `n_test` test windows over a series of length
/// `len`.
pub fn plan_windows(
    len: usize,
    context_len: usize,
    horizon: usize,
    n_tune: usize,
    n_test: usize,
) -> Result<WindowPlan> {
    let required = WindowPlan::required_len(context_len, horizon, n_tune, n_test);
    if len < required {
        return Err(Error::InsufficientHistory { len, required });
    }
    let test_origin = len - n_test * horizon;
    let tune_origin = test_origin - n_tune * horizon;
    let tune_windows = (0..n_tune)
        .map(|k| Window::ending_eval_at(tune_origin + k * horizon, context_len, horizon))
        .collect();
    let test_windows = (0..n_test)
        .map(|k| Window::ending_eval_at(test_origin + k * horizon, context_len, horizon))
        .collect();
    Ok(WindowPlan {
        tune_windows,
        test_windows,
        stride: horizon,
    })
}

/// Like [`plan_windows`], but shrinks the window counts until the layout fits:
/// tuning windows go first, then test windows down to a single one.
pub fn plan_windows_shrinking(
    len: usize,
    context_len: usize,
    horizon: usize,
    n_tune: usize,
    n_test: usize,
) -> Result<WindowPlan> {
    let (mut tune, mut test) = (n_tune, n_test.max(1));
    loop {
        if len >= WindowPlan::required_len(context_len, horizon, tune, test) {
            return plan_windows(len, context_len, horizon, tune, test);
        }
        if tune > 0 {
            tune -= 1;
        } else if test > 1 {
            test -= 1;
        } else {
            return Err(Error::InsufficientHistory {
                len,
                required: WindowPlan::required_len(context_len, horizon, 0, 1),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spans(ws: &[Window]) -> Vec<((usize, usize), (usize, usize))> {
        ws.iter()
            .map(|w| ((w.context_start, w.context_end), (w.eval_start, w.eval_end)))
            .collect()
    }

    #[test]
    fn two_and_two_layout() {
        let p = plan_windows(40, 10, 5, 2, 2).unwrap();
        assert_eq!(spans(&p.tune_windows), vec![((10, 20), (20, 25)), ((15, 25), (25, 30))]);
        assert_eq!(spans(&p.test_windows), vec![((20, 30), (30, 35)), ((25, 35), (35, 40))]);
        assert_eq!(p.stride, 5);
    }

    #[test]
    fn minimal_single_test_window() {
        let p = plan_windows(15, 10, 5, 0, 1).unwrap();
        assert!(p.tune_windows.is_empty());
        assert_eq!(spans(&p.test_windows), vec![((0, 10), (10, 15))]);
    }

    #[test]
    fn insufficient_history() {
        let err = plan_windows(20, 10, 5, 2, 2).unwrap_err();
        assert!(matches!(err, Error::InsufficientHistory { len: 20, required: 30 }));
    }

    #[test]
    fn shrinking_drops_tune_before_test() {
        let p = plan_windows_shrinking(30, 10, 5, 3, 3).unwrap();
        assert_eq!((p.tune_windows.len(), p.test_windows.len()), (1, 3));
        let p = plan_windows_shrinking(20, 10, 5, 3, 3).unwrap();
        assert_eq!((p.tune_windows.len(), p.test_windows.len()), (0, 2));
        assert!(plan_windows_shrinking(14, 10, 5, 3, 3).is_err());
    }

    proptest! {
        #[test]
        fn plan_invariants(l in 1usize..30, h in 1usize..10, n_tune in 0usize..5,
                           n_test in 1usize..5, slack in 0usize..20) {
            let len = l + h * (n_tune + n_test) + slack;
            let p = plan_windows(len, l, h, n_tune, n_test).unwrap();
            prop_assert_eq!(&p, &plan_windows(len, l, h, n_tune, n_test).unwrap());
            for w in p.tune_windows.iter().chain(&p.test_windows) {
                prop_assert_eq!(w.eval_start, w.context_end);
                prop_assert_eq!(w.eval_end - w.eval_start, h);
                prop_assert_eq!(w.context_end - w.context_start, l);
            }
            for ws in [&p.tune_windows, &p.test_windows] {
                for pair in ws.windows(2) {
                    prop_assert_eq!(pair[1].eval_start - pair[0].eval_start, p.stride);
                }
            }
            let first_test = p.test_windows[0].eval_start;
            for w in &p.tune_windows {
                prop_assert!(w.eval_end <= first_test);
                prop_assert!(w.context_end <= first_test);
            }
            prop_assert_eq!(first_test, len - n_test * h);
            prop_assert_eq!(p.test_windows.last().unwrap().eval_end, len);
        }
    }
}
