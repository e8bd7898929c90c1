//! Central finite-difference checking of hand-written gradients.

/// Outcome of comparing an analytic gradient against central differences.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_err: f64,
    pub worst_coord: Option<usize>,
    /// Coordinate at which the probe returned a non-finite value, if any.
    pub non_finite: Option<usize>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.non_finite.is_none() && self.max_rel_err <= self.tolerance
    }
}

/// Compares `analytic` against (f(p+h) - f(p-h)) / 2h per coordinate.
///
/// The relative error denominator is max(|analytic| + |numeric|, 1), so the
/// report stays meaningful for near-zero gradients. `coords` restricts the
/// check to a subset of coordinates; pass `None` to check all of them.
pub fn grad_check<F>(
    mut f: F,
    params: &[f64],
    analytic: &[f64],
    step: f64,
    tolerance: f64,
    coords: Option<&[usize]>,
) -> GradCheckReport
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(params.len(), analytic.len());
    let all: Vec<usize>;
    let coords = match coords {
        Some(c) => c,
        None => {
            all = (0..params.len()).collect();
            &all
        }
    };

    let mut probe = params.to_vec();
    let mut max_rel_err = 0.0_f64;
    let mut worst_coord = None;
    let mut non_finite = None;

    for &i in coords {
        let orig = probe[i];
        probe[i] = orig + step;
        let plus = f(&probe);
        probe[i] = orig - step;
        let minus = f(&probe);
        probe[i] = orig;

        if !plus.is_finite() || !minus.is_finite() {
            non_finite = Some(i);
            break;
        }
        let numeric = (plus - minus) / (2.0 * step);
        let a = analytic[i];
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1.0);
        if rel > max_rel_err {
            max_rel_err = rel;
            worst_coord = Some(i);
        }
    }

    GradCheckReport {
        checked: coords.len(),
        max_rel_err,
        worst_coord,
        non_finite,
        tolerance,
    }
}
